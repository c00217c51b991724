#include "chakra/viz/timeline.h"

#include <charconv>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace chakra {
namespace {

template <typename T>
bool parse_uint(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct PairKey {
  uint32_t gpu;
  uint64_t node;
  bool operator==(const PairKey&) const = default;
};

struct PairKeyHash {
  size_t operator()(const PairKey& k) const {
    return std::hash<uint64_t>()(k.node * 1000003u + k.gpu);
  }
};

}  // namespace

void write_timeline_csv(std::ostream& out, std::span<const TimelineRow> rows) {
  for (const auto& r : rows) {
    out << (r.kind == TimelineRow::Kind::kIssue ? "issue" : "callback") << ','
        << r.gpu_id << ',' << r.curr_cycle << ',' << r.node_id << ','
        << r.node_name << '\n';
  }
}

std::string timeline_csv(std::span<const TimelineRow> rows) {
  std::ostringstream out;
  write_timeline_csv(out, rows);
  return out.str();
}

std::vector<TimelineRow> parse_timeline_csv(std::string_view text) {
  std::vector<TimelineRow> rows;
  size_t line_no = 0;
  while (!text.empty()) {
    size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{}
                                         : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::string_view fields[5];
    std::string_view rest = line;
    for (int i = 0; i < 4; ++i) {
      size_t comma = rest.find(',');
      if (comma == std::string_view::npos) {
        throw TimelineError("timeline line " + std::to_string(line_no) +
                            ": expected 5 comma-separated fields");
      }
      fields[i] = rest.substr(0, comma);
      rest = rest.substr(comma + 1);
    }
    fields[4] = rest;

    TimelineRow row;
    if (fields[0] == "issue") {
      row.kind = TimelineRow::Kind::kIssue;
    } else if (fields[0] == "callback") {
      row.kind = TimelineRow::Kind::kCallback;
    } else {
      throw TimelineError("timeline line " + std::to_string(line_no) +
                          ": first field must be 'issue' or 'callback'");
    }
    if (!parse_uint(fields[1], row.gpu_id) ||
        !parse_uint(fields[2], row.curr_cycle) ||
        !parse_uint(fields[3], row.node_id)) {
      throw TimelineError("timeline line " + std::to_string(line_no) +
                          ": malformed numeric field");
    }
    row.node_name = std::string(fields[4]);
    rows.push_back(std::move(row));
  }
  return rows;
}

NodeTypeLookup node_type_lookup(std::span<const Trace> traces) {
  auto table = std::make_shared<
      std::map<uint32_t, std::unordered_map<uint64_t, NodeType>>>();
  for (const auto& t : traces) {
    auto& per_npu = (*table)[t.npu_id];
    for (const auto& n : t.nodes) per_npu[n.id] = n.type;
  }
  return [table](uint32_t gpu, uint64_t node) -> std::optional<NodeType> {
    auto it = table->find(gpu);
    if (it == table->end()) return std::nullopt;
    auto jt = it->second.find(node);
    if (jt == it->second.end()) return std::nullopt;
    return jt->second;
  };
}

int chrome_tid(NodeType type) {
  if (is_memory(type)) return 1;
  if (type == NodeType::kComp) return 2;
  if (is_comm(type)) return 3;
  return 0;
}

std::string timeline_to_chrome_trace(std::span<const TimelineRow> rows,
                                     const NodeTypeLookup& type_of) {
  using ojson = nlohmann::ordered_json;
  std::unordered_map<PairKey, const TimelineRow*, PairKeyHash> open;
  std::vector<ojson> events;
  std::set<uint32_t> gpus;

  for (const auto& row : rows) {
    PairKey key{row.gpu_id, row.node_id};
    const std::string where = "node " + std::to_string(row.node_id) +
                              " on gpu " + std::to_string(row.gpu_id);
    if (row.kind == TimelineRow::Kind::kIssue) {
      if (!open.emplace(key, &row).second) {
        throw TimelineError("duplicate issue for in-flight " + where);
      }
      continue;
    }
    auto it = open.find(key);
    if (it == open.end()) {
      throw TimelineError("callback without matching issue for " + where);
    }
    const TimelineRow& issue = *it->second;
    open.erase(it);
    if (row.curr_cycle < issue.curr_cycle) {
      throw TimelineError("callback precedes issue for " + where);
    }
    auto type = type_of(row.gpu_id, row.node_id);
    if (!type || chrome_tid(*type) == 0) {
      throw TimelineError("no simulated node type for " + where);
    }
    gpus.insert(row.gpu_id);
    ojson e;
    e["name"] = issue.node_name;
    e["cat"] = std::string(to_string(*type));
    e["ph"] = "X";
    e["pid"] = row.gpu_id;
    e["tid"] = chrome_tid(*type);
    e["ts"] = issue.curr_cycle;
    e["dur"] = row.curr_cycle - issue.curr_cycle;
    e["args"] = {{"node_id", row.node_id}};
    events.push_back(std::move(e));
  }
  if (!open.empty()) {
    const PairKey* first = nullptr;
    for (const auto& [k, _] : open) {
      if (!first || k.gpu < first->gpu ||
          (k.gpu == first->gpu && k.node < first->node)) {
        first = &k;
      }
    }
    throw TimelineError("issue without callback for node " +
                        std::to_string(first->node) + " on gpu " +
                        std::to_string(first->gpu));
  }

  ojson out = ojson::array();
  out.push_back({{"name", "chakra_time_unit"},
                 {"ph", "M"},
                 {"pid", 0},
                 {"args", {{"unit", "1 simulated cycle = 1 us"}}}});
  static constexpr const char* kThreadNames[] = {"", "memory", "compute",
                                                 "communication"};
  for (uint32_t g : gpus) {
    out.push_back({{"name", "process_name"},
                   {"ph", "M"},
                   {"pid", g},
                   {"args", {{"name", "NPU " + std::to_string(g)}}}});
    for (int tid = 1; tid <= 3; ++tid) {
      out.push_back({{"name", "thread_name"},
                     {"ph", "M"},
                     {"pid", g},
                     {"tid", tid},
                     {"args", {{"name", kThreadNames[tid]}}}});
    }
  }
  for (auto& e : events) out.push_back(std::move(e));
  return out.dump(1) + "\n";
}

}  // namespace chakra
