#include "chakra/viz/dot.h"

#include <sstream>

namespace chakra {

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string emit_dot(const Trace& trace) {
  if (trace.nodes.empty()) return "digraph et { }\n";
  const Trace sorted = canonical(trace);
  std::ostringstream out;
  out << "digraph et {\n";
  for (const auto& n : sorted.nodes) {
    out << "  " << dot_quote(std::to_string(n.id))
        << " [label=" << dot_quote(n.name) << "];\n";
  }
  for (const auto& n : sorted.nodes) {
    for (uint64_t p : n.parents) {
      out << "  " << dot_quote(std::to_string(p)) << " -> "
          << dot_quote(std::to_string(n.id)) << ";\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace chakra
