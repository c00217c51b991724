#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <set>
#include <unordered_map>

#include "chakra/convert/convert.h"
#include "chakra/core/validate.h"
#include "chakra/gen/builder.h"

namespace chakra {

const std::string* DotNode::attr(std::string_view key) const {
  for (const auto& [k, v] : attrs) {
    if (k == key) return &v;
  }
  return nullptr;
}

namespace {

enum class Tok { kId, kLBrace, kRBrace, kLBracket, kRBracket, kSemi, kComma,
                 kEq, kEdge, kEnd };

struct Token {
  Tok kind;
  std::string text;
  int line;
};

[[noreturn]] void dot_error(int line, const std::string& what) {
  throw ConvertError("DOT line " + std::to_string(line) + ": " + what);
}

bool id_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
         static_cast<unsigned char>(c) >= 0x80;
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  int line = 1;
  size_t i = 0;
  auto push = [&](Tok k, std::string t = {}) {
    out.push_back(Token{k, std::move(t), line});
  };
  while (i < s.size()) {
    char c = s[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '#' || (c == '/' && i + 1 < s.size() && s[i + 1] == '/')) {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      const int start = line;
      i += 2;
      while (i + 1 < s.size() && !(s[i] == '*' && s[i + 1] == '/')) {
        if (s[i] == '\n') ++line;
        ++i;
      }
      if (i + 1 >= s.size()) dot_error(start, "unterminated comment");
      i += 2;
    } else if (c == '"') {
      const int start = line;
      std::string text;
      ++i;
      while (i < s.size() && s[i] != '"') {
        if (s[i] == '\\' && i + 1 < s.size()) {
          if (s[i + 1] == '"') {
            text += '"';
            i += 2;
            continue;
          }
          if (s[i + 1] == '\n') {  // line continuation
            ++line;
            i += 2;
            continue;
          }
        }
        if (s[i] == '\n') ++line;
        text += s[i++];
      }
      if (i >= s.size()) dot_error(start, "unterminated string");
      ++i;
      out.push_back(Token{Tok::kId, std::move(text), start});
    } else if (c == '-' && i + 1 < s.size() && (s[i + 1] == '>' || s[i + 1] == '-')) {
      push(Tok::kEdge, std::string(s.substr(i, 2)));
      i += 2;
    } else if (id_char(c) || c == '-') {
      size_t j = i + 1;
      while (j < s.size() && id_char(s[j])) ++j;
      push(Tok::kId, std::string(s.substr(i, j - i)));
      i = j;
    } else {
      switch (c) {
        case '{': push(Tok::kLBrace); break;
        case '}': push(Tok::kRBrace); break;
        case '[': push(Tok::kLBracket); break;
        case ']': push(Tok::kRBracket); break;
        case ';': push(Tok::kSemi); break;
        case ',': push(Tok::kComma); break;
        case '=': push(Tok::kEq); break;
        default:
          dot_error(line, std::string("unexpected character '") + c + "'");
      }
      ++i;
    }
  }
  push(Tok::kEnd);
  return out;
}

bool keyword(const Token& t, std::string_view kw) {
  if (t.kind != Tok::kId || t.text.size() != kw.size()) return false;
  for (size_t i = 0; i < kw.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(t.text[i])) != kw[i]) {
      return false;
    }
  }
  return true;
}

using AttrList = std::vector<std::pair<std::string, std::string>>;

void merge_attrs(AttrList& into, const AttrList& from) {
  for (const auto& [k, v] : from) {
    auto it = std::find_if(into.begin(), into.end(),
                           [&](const auto& kv) { return kv.first == k; });
    if (it == into.end()) {
      into.emplace_back(k, v);
    } else {
      it->second = v;
    }
  }
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  DotGraph parse() {
    if (keyword(peek(), "strict")) ++pos_;
    if (keyword(peek(), "digraph")) {
      graph_.directed = true;
    } else if (keyword(peek(), "graph")) {
      graph_.directed = false;
    } else {
      dot_error(peek().line, "expected 'digraph' or 'graph'");
    }
    ++pos_;
    if (peek().kind == Tok::kId) graph_.name = next().text;
    expect(Tok::kLBrace, "'{'");
    while (peek().kind != Tok::kRBrace) {
      if (peek().kind == Tok::kEnd) dot_error(peek().line, "missing '}'");
      statement();
    }
    ++pos_;
    if (peek().kind != Tok::kEnd) {
      dot_error(peek().line, "unexpected content after graph");
    }
    return std::move(graph_);
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) {
      dot_error(peek().line, std::string("expected ") + what);
    }
    return next();
  }

  AttrList attr_lists() {
    AttrList attrs;
    while (peek().kind == Tok::kLBracket) {
      ++pos_;
      while (peek().kind != Tok::kRBracket) {
        const Token& key = expect(Tok::kId, "attribute name");
        std::string value = "true";
        if (peek().kind == Tok::kEq) {
          ++pos_;
          value = expect(Tok::kId, "attribute value").text;
        }
        merge_attrs(attrs, {{key.text, value}});
        if (peek().kind == Tok::kComma || peek().kind == Tok::kSemi) ++pos_;
      }
      ++pos_;
    }
    return attrs;
  }

  void declare(const Token& id, const AttrList& attrs) {
    auto it = index_.find(id.text);
    if (it == index_.end()) {
      DotNode n;
      n.id = id.text;
      n.line = id.line;
      n.attrs = node_defaults_;
      merge_attrs(n.attrs, attrs);
      index_.emplace(id.text, graph_.nodes.size());
      graph_.nodes.push_back(std::move(n));
    } else {
      merge_attrs(graph_.nodes[it->second].attrs, attrs);
    }
  }

  void statement() {
    const Token& first = peek();
    if (first.kind == Tok::kSemi) {
      ++pos_;
      return;
    }
    if (keyword(first, "subgraph") || first.kind == Tok::kLBrace) {
      dot_error(first.line, "subgraphs are not supported");
    }
    if (first.kind != Tok::kId) dot_error(first.line, "expected a statement");
    if (keyword(first, "node") || keyword(first, "edge") ||
        keyword(first, "graph")) {
      if (toks_[pos_ + 1].kind == Tok::kLBracket) {
        const bool is_node = keyword(first, "node");
        ++pos_;
        AttrList attrs = attr_lists();
        if (is_node) merge_attrs(node_defaults_, attrs);
        end_statement();
        return;
      }
    }
    const Token& id = next();
    if (peek().kind == Tok::kEq) {  // graph attribute: key = value
      ++pos_;
      expect(Tok::kId, "attribute value");
      end_statement();
      return;
    }
    if (peek().kind == Tok::kEdge) {
      std::vector<const Token*> chain = {&id};
      while (peek().kind == Tok::kEdge) {
        const Token& op = next();
        if ((op.text == "->") != graph_.directed) {
          dot_error(op.line, "edge operator '" + op.text +
                                 "' does not match the graph kind");
        }
        if (peek().kind == Tok::kLBrace || keyword(peek(), "subgraph")) {
          dot_error(peek().line, "subgraphs are not supported");
        }
        chain.push_back(&expect(Tok::kId, "node id after edge operator"));
      }
      attr_lists();  // edge attributes carry no meaning here
      for (size_t i = 0; i + 1 < chain.size(); ++i) {
        graph_.edges.push_back(
            DotEdge{chain[i]->text, chain[i + 1]->text, chain[i]->line});
      }
      end_statement();
      return;
    }
    declare(id, attr_lists());
    end_statement();
  }

  void end_statement() {
    if (peek().kind == Tok::kSemi) ++pos_;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  DotGraph graph_;
  std::unordered_map<std::string, size_t> index_;
  AttrList node_defaults_;
};

const std::set<std::string_view>& compute_ops() {
  static const std::set<std::string_view> kOps = {
      "BatchMatmul", "BatchNorm",   "Cast",        "Concat",
      "Conv2D",      "Dense",       "Dropout",     "ElementBinary",
      "ElementUnary", "Embedding",  "Exp",         "Flat",
      "Gather",      "LayerNorm",   "Linear",      "MultiHeadAttention",
      "Pool2D",      "Reduce",      "Relu",        "Reshape",
      "Sigmoid",     "Softmax",     "Split",       "Tanh",
      "TopK",        "Transpose",
  };
  return kOps;
}

int64_t int_attr(const DotNode& n, std::string_view key, bool required) {
  const std::string* v = n.attr(key);
  if (!v) {
    if (required) {
      dot_error(n.line, "node '" + n.id + "' is missing '" +
                            std::string(key) + "'");
    }
    return -1;
  }
  int64_t out = 0;
  auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || end != v->data() + v->size() || out < 0) {
    dot_error(n.line, "node '" + n.id + "': '" + std::string(key) +
                          "' must be a non-negative integer, got '" + *v + "'");
  }
  return out;
}

uint32_t npu_attr(const DotNode& n, std::string_view key) {
  int64_t v = int_attr(n, key, true);
  if (v > std::numeric_limits<uint32_t>::max()) {
    dot_error(n.line, "node '" + n.id + "': npu out of range");
  }
  return static_cast<uint32_t>(v);
}

}  // namespace

DotGraph parse_dot(std::string_view text) {
  return Parser(tokenize(text)).parse();
}

ConvertResult convert_flexflow(std::string_view dot_text) {
  DotGraph g = parse_dot(dot_text);
  if (!g.directed) throw ConvertError("DOT line 1: expected a digraph");

  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < g.nodes.size(); ++i) index.emplace(g.nodes[i].id, i);

  // Node i gets id i + 1; the RECV half of a transfer gets a fresh id after
  // all declared nodes.
  const uint64_t n = g.nodes.size();
  std::vector<AnnotatedNode> global(n);
  std::vector<std::optional<uint64_t>> recv_of(n);
  ConvertResult result;
  int64_t tag = 0;
  uint64_t next_id = n + 1;

  for (size_t i = 0; i < n; ++i) {
    const DotNode& d = g.nodes[i];
    const std::string* op = d.attr("name");
    if (!op) op = d.attr("label");
    const std::string kind = op ? *op : "";
    AnnotatedNode& a = global[i];
    a.node.id = i + 1;
    a.node.name = d.id;

    if (kind == "XferP2P") {
      const uint32_t src = npu_attr(d, "src");
      const uint32_t dst = npu_attr(d, "dst");
      if (src == dst) {
        dot_error(d.line, "transfer '" + d.id + "' has src == dst");
      }
      const int64_t bytes = int_attr(d, "bytes", true);
      a.node.type = NodeType::kCommSend;
      a.node.attributes = p2p_attrs(bytes, dst, tag);
      a.npu = src;
      AnnotatedNode recv;
      recv.node.id = next_id++;
      recv.node.name = d.id + "_recv";
      recv.node.type = NodeType::kCommRecv;
      recv.node.attributes = p2p_attrs(bytes, src, tag);
      recv.npu = dst;
      recv_of[i] = recv.node.id;
      global.push_back(std::move(recv));
      ++tag;
      continue;
    }

    a.npu = npu_attr(d, "npu");
    if (compute_ops().count(kind)) {
      a.node.type = NodeType::kComp;
      a.node.attributes = comp_attrs(int_attr(d, "cycles", true));
    } else if (kind == "MemLoad" || kind == "MemStore") {
      a.node.type =
          kind == "MemLoad" ? NodeType::kMemLoad : NodeType::kMemStore;
      a.node.attributes = mem_attrs(int_attr(d, "bytes", true));
    } else {
      a.node.type = NodeType::kInvalid;
      result.warnings.push_back("line " + std::to_string(d.line) + ": node '" +
                                d.id + "' has unknown operator '" + kind +
                                "'; marked INVALID");
    }
  }

  for (const auto& e : g.edges) {
    auto from = index.find(e.from);
    auto to = index.find(e.to);
    if (from == index.end() || to == index.end()) {
      dot_error(e.line, "edge references undeclared node '" +
                            (from == index.end() ? e.from : e.to) + "'");
    }
    // Dependents of a transfer wait on its receiving half.
    const uint64_t parent =
        recv_of[from->second].value_or(global[from->second].node.id);
    auto& parents = global[to->second].node.parents;
    if (std::find(parents.begin(), parents.end(), parent) == parents.end()) {
      parents.push_back(parent);
    }
  }

  result.traces = split_per_npu(global, tag);
  for (const auto& t : result.traces) require_valid(t, "convert_flexflow");
  return result;
}

}  // namespace chakra
