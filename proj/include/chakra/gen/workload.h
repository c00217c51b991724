#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chakra/core/types.h"

namespace chakra {

enum class Parallelism { kDP, kMP, kDPMP, kMPDP, kPipeline };

std::string_view to_string(Parallelism p);
std::optional<Parallelism> parse_parallelism(std::string_view name);

// How gradients are synchronized along the data-parallel dimension.
enum class DpCollective {
  kAllReduce,
  // ZeRO-2 style: REDUCE_SCATTER of gradients followed by ALL_GATHER of the
  // updated parameters.
  kZero2,
};

// Describes a synthetic layered model and how it is spread over NPUs.
//
// Sizes describe one training iteration of the whole model (global batch):
// every scheme divides compute cycles evenly over the NPUs it runs on. The
// backward pass of a layer costs `backward_cycles` (default twice the
// forward cost).
struct WorkloadSpec {
  std::string name;
  uint32_t layers = 6;
  uint32_t npus = 1;
  Parallelism parallelism = Parallelism::kDP;
  // (d1, d2) placement of ranks: rank r sits at (r % d1, r / d1). Required by
  // the hybrid schemes, which need d1 * d2 == npus.
  std::optional<std::pair<uint32_t, uint32_t>> dims;
  uint64_t compute_cycles = 100;
  std::optional<uint64_t> backward_cycles;
  uint64_t weight_bytes = 1 << 20;
  uint64_t activation_bytes = 1 << 20;
  uint32_t microbatches = 4;
  DpCollective dp_collective = DpCollective::kAllReduce;
  // Leading layers treated as sharded embedding tables: their forward and
  // backward passes exchange `embedding_bytes` with ALL_TO_ALL over all
  // NPUs and their weights are never all-reduced.
  uint32_t embedding_layers = 0;
  uint64_t embedding_bytes = 0;

  uint64_t bwd_cycles() const {
    return backward_cycles.value_or(2 * compute_cycles);
  }
};

class WorkloadError : public Error {
 public:
  using Error::Error;
};

// Throws WorkloadError describing the first broken constraint.
void check_workload(const WorkloadSpec& spec);

// One trace per NPU, npu ids 0..npus-1. Collectives over a single rank are
// omitted.
std::vector<Trace> generate_workload(const WorkloadSpec& spec);

// Communicator naming shared with the simulator and tests.
inline constexpr std::string_view kWorldGroup = "world";
std::string dim1_group(uint32_t rank, uint32_t d1);  // ranks sharing r / d1
std::string dim2_group(uint32_t rank, uint32_t d1);  // ranks sharing r % d1

}  // namespace chakra
