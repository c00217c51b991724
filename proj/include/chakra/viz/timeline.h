#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chakra/core/types.h"

namespace chakra {

// One line of a simulator timeline:
//   issue,<gpu_id>,<curr_cycle>,<node_id>,<node_name>
//   callback,<gpu_id>,<curr_cycle>,<node_id>,<node_name>
struct TimelineRow {
  enum class Kind : uint8_t { kIssue, kCallback };

  Kind kind = Kind::kIssue;
  uint32_t gpu_id = 0;
  uint64_t curr_cycle = 0;
  uint64_t node_id = 0;
  std::string node_name;

  friend bool operator==(const TimelineRow&, const TimelineRow&) = default;
};

class TimelineError : public Error {
 public:
  using Error::Error;
};

// No header line. The name is the last field and is written verbatim, so it
// may contain commas but not line breaks.
void write_timeline_csv(std::ostream& out, std::span<const TimelineRow> rows);
std::string timeline_csv(std::span<const TimelineRow> rows);

// Throws TimelineError naming the offending line.
std::vector<TimelineRow> parse_timeline_csv(std::string_view text);

// Resolves the node type of (gpu_id, node_id); nullopt if unknown.
using NodeTypeLookup =
    std::function<std::optional<NodeType>(uint32_t gpu_id, uint64_t node_id)>;

// Builds a lookup over per-NPU traces indexed by npu_id.
NodeTypeLookup node_type_lookup(std::span<const Trace> traces);

// Thread id assigned to a node class in the Chrome view: 1 memory,
// 2 compute, 3 communication.
int chrome_tid(NodeType type);

// Pairs every issue with its callback and renders Chrome trace-event JSON in
// array form: metadata events naming processes, threads and the time unit,
// followed by one complete ("X") event per pair in callback order. One
// simulator cycle is written as one microsecond.
//
// Throws TimelineError for a callback without an open issue, a second issue
// of an in-flight node, a callback earlier than its issue, an issue that is
// never completed, or a node whose type the lookup cannot resolve.
std::string timeline_to_chrome_trace(std::span<const TimelineRow> rows,
                                     const NodeTypeLookup& type_of);

}  // namespace chakra
