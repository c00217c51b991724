#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chakra/gen/workload.h"
#include "chakra/sim/simulator.h"

namespace chakra {

// Canned workloads for what-if studies.
enum class Preset { kMlpDp, kMlpMp, kMlpDpMp, kMlpMpDp, kTransformer, kDlrm };

inline constexpr Preset kAllPresets[] = {
    Preset::kMlpDp,   Preset::kMlpMp,       Preset::kMlpDpMp,
    Preset::kMlpMpDp, Preset::kTransformer, Preset::kDlrm};

std::string_view to_string(Preset p);
std::optional<Preset> parse_preset(std::string_view name);

// Reference system for calibration: 2x2 torus at 62 GB/s per dimension,
// zero latency, 1 GHz clock.
SimConfig reference_config(uint32_t npus = 4);

// Ratio of total compute to total communication time the Transformer preset
// has at 4 NPUs on the reference system.
inline constexpr double kTransformerComputeToComm = 25.0;

// Workload for `npus` ranks laid out as `dims` (defaults to square_dims).
// The Transformer preset's compute cost is scaled once, by simulation on the
// 4-NPU reference system, so that its compute:comm ratio there equals
// kTransformerComputeToComm.
WorkloadSpec make_preset(
    Preset preset, uint32_t npus,
    std::optional<std::pair<uint32_t, uint32_t>> dims = std::nullopt);

struct SweepCell {
  uint32_t npus = 4;
  Topology topology;
};

struct SweepRow {
  std::string workload;
  std::string topology;
  uint32_t npus = 0;
  double bw1 = 0;
  double bw2 = 0;
  uint64_t makespan = 0;
  double compute = 0;       // mean over NPUs, cycles
  double exposed_comm = 0;  // mean over NPUs, cycles
  double normalized_performance = 0;  // baseline makespan / makespan

  double exposed_share() const {
    return makespan == 0 ? 0.0 : exposed_comm / static_cast<double>(makespan);
  }
};

using WorkloadFactory =
    std::function<std::vector<Trace>(uint32_t npus, const Topology& topo)>;

WorkloadFactory preset_factory(Preset preset);

// Simulates the workload on every cell and normalizes performance to the
// first cell. Cells may run on up to `threads` worker threads; the result
// does not depend on the thread count.
std::vector<SweepRow> sweep(std::string_view workload_name,
                            const WorkloadFactory& factory,
                            std::span<const SweepCell> cells,
                            const SimConfig& base, unsigned threads = 1);

// Cells over NPU counts with square placement on a topology template.
std::vector<SweepCell> npu_cells(const Topology& base,
                                 std::span<const uint32_t> npus);

// Cells over (bw1, bw2) pairs on a fixed topology.
std::vector<SweepCell> bandwidth_cells(
    const Topology& base, std::span<const std::pair<double, double>> bws);

std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace chakra
