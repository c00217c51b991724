#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chakra/core/types.h"
#include "chakra/sim/topology.h"
#include "chakra/viz/timeline.h"

namespace chakra {

enum class TimingMode {
  kFromTrace,  // durations come from the node's "runtime" attribute
  kModel,      // durations come from the system model
};

struct SimConfig {
  Topology topology;
  TimingMode compute_timing = TimingMode::kFromTrace;
  TimingMode comm_timing = TimingMode::kModel;
  double cycle_time = 1e-9;         // seconds per cycle
  double compute_rate = 0.0;        // ops/s for modeled COMP nodes ("num_ops")
  double memory_bandwidth = 100e9;  // bytes/s for MEM nodes without "runtime"
};

class SimError : public Error {
 public:
  using Error::Error;
};

struct StuckNode {
  uint32_t npu = 0;
  uint64_t node_id = 0;
  std::string name;
  std::string reason;  // "waiting for peers", "queued", "blocked"
};

// Raised when nothing is in flight, nothing can issue, and nodes remain.
class DeadlockError : public SimError {
 public:
  DeadlockError(std::string what, std::vector<StuckNode> stuck);
  const std::vector<StuckNode>& stuck() const { return stuck_; }

 private:
  std::vector<StuckNode> stuck_;
};

struct NodeInterval {
  uint32_t npu = 0;
  uint64_t node_id = 0;
  NodeType type = NodeType::kInvalid;
  uint64_t issue = 0;   // cycle the node took its resource slot
  uint64_t start = 0;   // cycle execution began (peers present, for comm)
  uint64_t finish = 0;
};

struct NpuStats {
  uint64_t compute_busy = 0;
  uint64_t comm_busy = 0;
  uint64_t memory_busy = 0;
  uint64_t exposed_comm = 0;
  uint64_t finish = 0;
};

struct SimResult {
  uint64_t makespan_cycles = 0;
  std::vector<NpuStats> npus;  // indexed by npu_id
  std::vector<TimelineRow> timeline;
  std::vector<NodeInterval> intervals;  // completion order
};

// Cycles for a modeled duration: ceil(seconds / cycle_time), with values
// within 1e-9 relative of an integer snapped to it.
uint64_t seconds_to_cycles(double seconds, double cycle_time);

// Replays per-NPU traces (index == npu_id) on the configured system.
//
// Each NPU runs at most one node per resource class (memory, compute,
// network) at a time; issuable nodes of a busy class wait in FIFO order. A
// collective starts when the last member of its communicator issues it and
// finishes on all members together. Collective instances are matched across
// ranks by (comm_group, node name, occurrence of that name in the group);
// SEND/RECV by (src, dst, comm_tag, occurrence).
//
// Throws InvalidTraceError, SimError for configuration problems, and
// DeadlockError when replay cannot make progress.
SimResult run_simulation(std::span<const Trace> traces, const SimConfig& cfg);

struct BreakdownRow {
  uint32_t npu = 0;
  uint64_t compute = 0;       // cycles with a COMP node running
  uint64_t exposed_comm = 0;  // cycles with comm running and no compute
  uint64_t total() const { return compute + exposed_comm; }
};

// Per-NPU compute and exposed-communication time from the node intervals.
std::vector<BreakdownRow> compute_breakdown(const SimResult& result);

std::string breakdown_csv(std::span<const BreakdownRow> rows);

}  // namespace chakra
