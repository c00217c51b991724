#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "chakra/core/types.h"

namespace chakra {

class MasterTraceError : public Error {
 public:
  MasterTraceError(std::string group, std::string message)
      : Error(std::move(message)), group_(std::move(group)) {}
  const std::string& group() const { return group_; }

 private:
  std::string group_;
};

// One collective of a rank's communication sequence.
struct CommOp {
  std::string name;
  CommType type = CommType::kAllReduce;
  std::string group;
  int64_t bytes = 0;

  bool operator==(const CommOp&) const = default;
};

struct MasterOp {
  uint64_t seq_no = 0;
  std::string name;
  CommType type = CommType::kAllReduce;
  std::string group;
  std::map<uint32_t, int64_t> sizes;  // participant rank -> bytes

  std::vector<uint32_t> participants() const;
  bool operator==(const MasterOp&) const = default;
};

struct MasterTrace {
  uint32_t npus = 0;
  std::vector<MasterOp> ops;  // seq_no == index

  bool operator==(const MasterTrace&) const = default;
};

// The collectives of a trace in program order: a topological order of the
// dependency graph that prefers the smallest id. Other node types are
// ignored.
std::vector<CommOp> comm_sequence(const Trace& trace);

// Merges per-rank communication sequences into one order that respects every
// rank's order. The k-th collective a rank issues in a group is matched with
// the k-th collective of every other member of that group; matched ops must
// agree on name and comm_type, and all members must issue the same number of
// ops in the group. Ready ops are emitted by earliest rank position, then by
// the group's first appearance, then by sequence index.
//
// Traces are identified by npu_id, which must be unique and below
// traces.size(). Throws MasterTraceError naming the group on any conflict.
MasterTrace build_master_trace(std::span<const Trace> traces);

// Rank r's trace holds the master ops r participates in, in master order,
// each depending on the previous one. Ranks without ops get empty traces.
std::vector<Trace> reconstruct_rank_traces(const MasterTrace& master,
                                           uint32_t npus);

}  // namespace chakra
