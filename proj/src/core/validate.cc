#include "chakra/core/validate.h"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace chakra {
namespace {

struct WellKnown {
  std::string_view name;
  AttributeKind kind;
  bool non_negative;
};

constexpr WellKnown kWellKnown[] = {
    {attr::kRuntime, AttributeKind::kInt, true},
    {attr::kCommType, AttributeKind::kString, false},
    {attr::kCommSize, AttributeKind::kInt, true},
    {attr::kCommGroup, AttributeKind::kString, false},
    {attr::kCommPeer, AttributeKind::kInt, true},
    {attr::kTensorSize, AttributeKind::kInt, true},
    {attr::kCommTag, AttributeKind::kInt, false},
    {attr::kNumOps, AttributeKind::kInt, true},
};

void check_attributes(const ETNode& node, ValidationReport& out) {
  std::unordered_set<std::string_view> seen;
  for (const auto& a : node.attributes) {
    if (a.name.empty()) {
      out.push_back({ViolationCode::kEmptyAttributeName, node.id,
                     "attribute with empty name"});
    } else if (!seen.insert(a.name).second) {
      out.push_back({ViolationCode::kDuplicateAttribute, node.id,
                     "duplicate attribute " + a.name});
    }
    if (!a.consistent()) {
      out.push_back({ViolationCode::kKindMismatch, node.id,
                     "attribute " + a.name + " declared " +
                         std::string(to_string(a.kind)) +
                         " but holds a different value kind"});
      continue;
    }
    for (const auto& wk : kWellKnown) {
      if (a.name != wk.name) continue;
      if (a.kind != wk.kind) {
        out.push_back({ViolationCode::kWellKnownKind, node.id,
                       "well-known attribute " + a.name + " must be " +
                           std::string(to_string(wk.kind))});
      } else if (wk.non_negative && std::get<int64_t>(a.value) < 0) {
        out.push_back({ViolationCode::kWellKnownKind, node.id,
                       "well-known attribute " + a.name +
                           " must be non-negative"});
      }
    }
  }

  auto require = [&](std::string_view name) {
    if (get_attr(node, name) == nullptr) {
      out.push_back({ViolationCode::kMissingAttribute, node.id,
                     "missing well-known attribute " + std::string(name)});
    }
  };
  switch (node.type) {
    case NodeType::kCommColl: {
      require(attr::kCommType);
      require(attr::kCommSize);
      require(attr::kCommGroup);
      auto s = get_string(node, attr::kCommType);
      if (s) {
        auto t = parse_comm_type(*s);
        if (!t || *t == CommType::kSend || *t == CommType::kRecv) {
          out.push_back({ViolationCode::kUnknownCommType, node.id,
                         "comm_type " + std::string(*s) +
                             " is not a collective type"});
        }
      }
      break;
    }
    case NodeType::kCommSend:
    case NodeType::kCommRecv:
      require(attr::kCommSize);
      require(attr::kCommPeer);
      break;
    default:
      break;
  }
}

}  // namespace

std::string_view to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::kDuplicateId: return "duplicate_id";
    case ViolationCode::kDanglingParent: return "dangling_parent";
    case ViolationCode::kSelfParent: return "self_parent";
    case ViolationCode::kCycle: return "cycle";
    case ViolationCode::kKindMismatch: return "kind_mismatch";
    case ViolationCode::kEmptyAttributeName: return "empty_attribute_name";
    case ViolationCode::kDuplicateAttribute: return "duplicate_attribute";
    case ViolationCode::kMissingAttribute: return "missing_attribute";
    case ViolationCode::kWellKnownKind: return "well_known_kind";
    case ViolationCode::kUnknownCommType: return "unknown_comm_type";
    case ViolationCode::kBadSchemaVersion: return "bad_schema_version";
  }
  return "unknown";
}

ValidationReport validate_trace(const Trace& trace) {
  ValidationReport out;

  auto version = parse_schema_version(trace.schema_version);
  if (!version || version->major > kSchemaMajor) {
    out.push_back({ViolationCode::kBadSchemaVersion, std::nullopt,
                   "unsupported schema_version '" + trace.schema_version +
                       "'"});
  }

  std::unordered_map<uint64_t, size_t> index;
  index.reserve(trace.nodes.size());
  for (size_t i = 0; i < trace.nodes.size(); ++i) {
    if (!index.emplace(trace.nodes[i].id, i).second) {
      out.push_back({ViolationCode::kDuplicateId, trace.nodes[i].id,
                     "duplicate node id " +
                         std::to_string(trace.nodes[i].id)});
    }
  }

  // Kahn's algorithm over resolvable edges; whatever is left is on or behind
  // a cycle. Duplicate ids resolve to their first occurrence.
  std::vector<size_t> indegree(trace.nodes.size(), 0);
  std::vector<std::vector<size_t>> children(trace.nodes.size());
  for (size_t i = 0; i < trace.nodes.size(); ++i) {
    const ETNode& node = trace.nodes[i];
    if (index.at(node.id) != i) continue;
    std::unordered_set<uint64_t> unique_parents;
    for (uint64_t p : node.parents) {
      if (p == node.id) {
        out.push_back({ViolationCode::kSelfParent, node.id,
                       "node lists itself as a parent"});
        continue;
      }
      auto it = index.find(p);
      if (it == index.end()) {
        out.push_back({ViolationCode::kDanglingParent, node.id,
                       "parent " + std::to_string(p) + " does not exist"});
        continue;
      }
      if (!unique_parents.insert(p).second) continue;
      children[it->second].push_back(i);
      ++indegree[i];
    }
    check_attributes(node, out);
  }

  std::deque<size_t> ready;
  size_t considered = 0;
  for (size_t i = 0; i < trace.nodes.size(); ++i) {
    if (index.at(trace.nodes[i].id) != i) continue;
    ++considered;
    if (indegree[i] == 0) ready.push_back(i);
  }
  size_t visited = 0;
  while (!ready.empty()) {
    size_t n = ready.front();
    ready.pop_front();
    ++visited;
    for (size_t c : children[n]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  if (visited != considered) {
    std::vector<uint64_t> stuck;
    for (size_t i = 0; i < trace.nodes.size(); ++i) {
      if (index.at(trace.nodes[i].id) == i && indegree[i] > 0) {
        stuck.push_back(trace.nodes[i].id);
      }
    }
    std::sort(stuck.begin(), stuck.end());
    std::ostringstream msg;
    msg << "cycle through nodes";
    for (size_t i = 0; i < stuck.size() && i < 16; ++i) msg << ' ' << stuck[i];
    if (stuck.size() > 16) msg << " ...";
    out.push_back({ViolationCode::kCycle, stuck.front(), msg.str()});
  }
  return out;
}

std::string format_violation(const Violation& v) {
  std::string s(to_string(v.code));
  if (v.node_id) s += " (node " + std::to_string(*v.node_id) + ")";
  s += ": " + v.message;
  return s;
}

InvalidTraceError::InvalidTraceError(std::string what, ValidationReport report)
    : Error(std::move(what)), report_(std::move(report)) {}

void require_valid(const Trace& trace, std::string_view context) {
  auto report = validate_trace(trace);
  if (report.empty()) return;
  std::string msg = std::string(context) + ": invalid trace for npu " +
                    std::to_string(trace.npu_id);
  for (size_t i = 0; i < report.size() && i < 5; ++i) {
    msg += "\n  " + format_violation(report[i]);
  }
  if (report.size() > 5) {
    msg += "\n  ... " + std::to_string(report.size() - 5) + " more";
  }
  throw InvalidTraceError(std::move(msg), std::move(report));
}

}  // namespace chakra
