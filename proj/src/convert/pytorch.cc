#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "chakra/convert/convert.h"
#include "chakra/core/validate.h"
#include "chakra/gen/builder.h"
#include "json.hpp"

namespace chakra {
namespace {

using json = nlohmann::json;

constexpr std::string_view kCommNodeName = "record_param_comms";
constexpr std::string_view kNcclPrefix = "nccl:";

struct RawNode {
  uint64_t id = 0;
  std::string name;
  std::vector<uint64_t> deps;
  std::optional<double> dur;
  std::optional<uint32_t> npu;
  std::optional<int64_t> size;
  std::optional<std::string> group;
};

std::optional<CommType> nccl_collective(std::string_view suffix) {
  static const std::map<std::string_view, CommType> kMap = {
      {"all_reduce", CommType::kAllReduce},
      {"all_gather", CommType::kAllGather},
      {"reduce_scatter", CommType::kReduceScatter},
      {"all_to_all", CommType::kAllToAll},
  };
  auto it = kMap.find(suffix);
  if (it == kMap.end()) return std::nullopt;
  return it->second;
}

[[noreturn]] void fail(size_t index, const std::string& what) {
  throw ConvertError("PyTorch trace: /nodes/" + std::to_string(index) + ": " +
                     what);
}

RawNode read_node(const json& j, size_t index) {
  if (!j.is_object()) fail(index, "expected an object");
  RawNode n;
  auto id = j.find("id");
  if (id == j.end() || !id->is_number_integer() || id->get<int64_t>() < 0) {
    fail(index, "missing or invalid 'id'");
  }
  n.id = id->get<uint64_t>();
  auto name = j.find("name");
  if (name == j.end() || !name->is_string()) fail(index, "missing 'name'");
  n.name = name->get<std::string>();
  if (auto deps = j.find("ctrl_deps"); deps != j.end()) {
    if (!deps->is_array()) fail(index, "'ctrl_deps' must be an array");
    for (const auto& d : *deps) {
      if (!d.is_number_integer() || d.get<int64_t>() < 0) {
        fail(index, "'ctrl_deps' entries must be node ids");
      }
      n.deps.push_back(d.get<uint64_t>());
    }
  }
  if (auto dur = j.find("dur"); dur != j.end() && !dur->is_null()) {
    if (!dur->is_number() || dur->get<double>() < 0) {
      fail(index, "'dur' must be a non-negative number");
    }
    n.dur = dur->get<double>();
  }
  if (auto npu = j.find("npu"); npu != j.end() && !npu->is_null()) {
    if (!npu->is_number_integer() || npu->get<int64_t>() < 0 ||
        npu->get<int64_t>() > std::numeric_limits<uint32_t>::max()) {
      fail(index, "'npu' must be a non-negative integer");
    }
    n.npu = npu->get<uint32_t>();
  }
  auto size = j.find("size");
  if (size == j.end()) size = j.find("comm_size");
  if (size != j.end() && !size->is_null()) {
    if (!size->is_number_integer() || size->get<int64_t>() < 0) {
      fail(index, "'size' must be a non-negative integer");
    }
    n.size = size->get<int64_t>();
  }
  if (auto group = j.find("group"); group != j.end() && group->is_string()) {
    n.group = group->get<std::string>();
  }
  return n;
}

}  // namespace

ConvertResult convert_pytorch(std::string_view json_text,
                              const PyTorchOptions& options) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConvertError(std::string("PyTorch trace: malformed JSON: ") +
                       e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw ConvertError("PyTorch trace: expected an object with a 'nodes' array");
  }
  if (!(options.cycles_per_us > 0)) {
    throw ConvertError("cycles_per_us must be > 0");
  }

  std::vector<RawNode> raw;
  for (size_t i = 0; i < doc["nodes"].size(); ++i) {
    raw.push_back(read_node(doc["nodes"][i], i));
  }
  std::sort(raw.begin(), raw.end(),
            [](const RawNode& a, const RawNode& b) { return a.id < b.id; });

  std::unordered_map<uint64_t, size_t> by_id;
  for (size_t i = 0; i < raw.size(); ++i) {
    if (!by_id.emplace(raw[i].id, i).second) {
      throw ConvertError("PyTorch trace: duplicate node id " +
                         std::to_string(raw[i].id));
    }
  }
  for (const auto& n : raw) {
    for (uint64_t d : n.deps) {
      if (!by_id.count(d)) {
        throw ConvertError("PyTorch trace: node " + std::to_string(n.id) +
                           " depends on unknown node " + std::to_string(d));
      }
    }
  }

  const bool any_npu = std::any_of(raw.begin(), raw.end(),
                                   [](const RawNode& n) { return n.npu; });

  ConvertResult result;
  // Resolve every collective's descriptor child before emitting nodes, so a
  // descriptor is folded regardless of id order.
  struct Resolved {
    const RawNode* child = nullptr;
    std::optional<CommType> type;
  };
  std::unordered_map<uint64_t, Resolved> collectives;
  std::unordered_map<uint64_t, uint64_t> folded;  // descriptor -> collective
  for (const auto& n : raw) {
    if (n.name != kCommNodeName) continue;
    Resolved r;
    for (const auto& c : raw) {
      if (c.name.rfind(kNcclPrefix, 0) == 0 && !folded.count(c.id) &&
          std::find(c.deps.begin(), c.deps.end(), n.id) != c.deps.end()) {
        r.child = &c;
        break;
      }
    }
    if (r.child) {
      r.type = nccl_collective(
          std::string_view(r.child->name).substr(kNcclPrefix.size()));
      if (r.type && r.child->size) folded.emplace(r.child->id, n.id);
    }
    collectives.emplace(n.id, r);
  }

  std::vector<AnnotatedNode> global;
  for (const auto& n : raw) {
    if (folded.count(n.id)) continue;
    AnnotatedNode a;
    a.node.id = n.id;
    a.node.name = n.name;
    a.node.parents = n.deps;
    a.npu = any_npu ? n.npu : std::optional<uint32_t>(0);

    if (n.name == kCommNodeName) {
      const Resolved& r = collectives.at(n.id);
      if (r.child && r.type && r.child->size) {
        a.node.type = NodeType::kCommColl;
        a.node.attributes = coll_attrs(*r.type, *r.child->size,
                                       r.child->group.value_or("world"));
        for (uint64_t d : r.child->deps) {
          if (d != n.id) a.node.parents.push_back(d);
        }
      } else {
        a.node.type = NodeType::kInvalid;
        std::string why = !r.child ? "has no nccl: child"
                          : !r.type ? "child '" + r.child->name +
                                          "' names an unknown collective"
                                    : "child '" + r.child->name +
                                          "' has no size";
        result.warnings.push_back("node " + std::to_string(n.id) +
                                  " record_param_comms " + why +
                                  "; marked INVALID");
      }
    } else if (n.dur) {
      a.node.type = NodeType::kComp;
      a.node.attributes = comp_attrs(
          static_cast<int64_t>(std::llround(*n.dur * options.cycles_per_us)));
    } else {
      a.node.type = NodeType::kInvalid;
    }
    global.push_back(std::move(a));
  }

  for (auto& a : global) {
    std::vector<uint64_t> parents;
    for (uint64_t p : a.node.parents) {
      auto it = folded.find(p);
      uint64_t target = it == folded.end() ? p : it->second;
      if (target == a.node.id) continue;
      if (std::find(parents.begin(), parents.end(), target) == parents.end()) {
        parents.push_back(target);
      }
    }
    a.node.parents = std::move(parents);
  }

  result.traces = split_per_npu(global);
  for (const auto& t : result.traces) require_valid(t, "convert_pytorch");
  return result;
}

}  // namespace chakra
