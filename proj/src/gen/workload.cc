#include "chakra/gen/workload.h"

#include <array>

#include "chakra/gen/builder.h"

namespace chakra {
namespace {

constexpr std::array<std::string_view, 5> kParallelismNames = {
    "DP", "MP", "DP_MP", "MP_DP", "PIPELINE"};

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

int64_t as_i64(uint64_t v) { return static_cast<int64_t>(v); }

struct Communicators {
  std::string dp_group;
  uint32_t dp_size = 1;
  std::string mp_group;
  uint32_t mp_size = 1;
};

Communicators communicators_for(const WorkloadSpec& spec, uint32_t rank) {
  Communicators c;
  const std::string world(kWorldGroup);
  switch (spec.parallelism) {
    case Parallelism::kDP:
      c.dp_group = world;
      c.dp_size = spec.npus;
      break;
    case Parallelism::kMP:
      c.mp_group = world;
      c.mp_size = spec.npus;
      break;
    case Parallelism::kDPMP: {
      auto [d1, d2] = *spec.dims;
      c.dp_group = dim1_group(rank, d1);
      c.dp_size = d1;
      c.mp_group = dim2_group(rank, d1);
      c.mp_size = d2;
      break;
    }
    case Parallelism::kMPDP: {
      auto [d1, d2] = *spec.dims;
      c.mp_group = dim1_group(rank, d1);
      c.mp_size = d1;
      c.dp_group = dim2_group(rank, d1);
      c.dp_size = d2;
      break;
    }
    case Parallelism::kPipeline:
      break;
  }
  return c;
}

Trace layered_rank(const WorkloadSpec& spec, uint32_t rank) {
  const Communicators comm = communicators_for(spec, rank);
  const uint64_t fwd_cycles = ceil_div(spec.compute_cycles, spec.npus);
  const uint64_t bwd_cycles = ceil_div(spec.bwd_cycles(), spec.npus);
  const int64_t act_bytes = as_i64(spec.activation_bytes / comm.dp_size);
  const int64_t grad_bytes = as_i64(spec.weight_bytes / comm.mp_size);
  const std::string world(kWorldGroup);

  TraceBuilder b(rank);
  std::optional<NodeHandle> prev;
  auto chain = [&](NodeHandle n) {
    if (prev) b.assign_dep(*prev, n);
    prev = n;
  };
  auto is_embedding = [&](uint32_t l) {
    return l < spec.embedding_layers && spec.npus > 1;
  };

  for (uint32_t l = 0; l < spec.layers; ++l) {
    const std::string layer = "L" + std::to_string(l);
    chain(b.add_node(NodeType::kComp, layer + "_fwd",
                     comp_attrs(as_i64(fwd_cycles))));
    if (is_embedding(l)) {
      chain(b.add_node(NodeType::kCommColl, layer + "_fwd_a2a",
                       coll_attrs(CommType::kAllToAll,
                                  as_i64(spec.embedding_bytes), world)));
    } else if (comm.mp_size > 1) {
      chain(b.add_node(NodeType::kCommColl, layer + "_fwd_ar",
                       coll_attrs(CommType::kAllReduce, act_bytes,
                                  comm.mp_group)));
    }
  }

  for (uint32_t i = spec.layers; i-- > 0;) {
    const std::string layer = "L" + std::to_string(i);
    if (is_embedding(i)) {
      chain(b.add_node(NodeType::kCommColl, layer + "_bwd_a2a",
                       coll_attrs(CommType::kAllToAll,
                                  as_i64(spec.embedding_bytes), world)));
      chain(b.add_node(NodeType::kComp, layer + "_bwd",
                       comp_attrs(as_i64(bwd_cycles))));
      continue;
    }
    NodeHandle bwd = b.add_node(NodeType::kComp, layer + "_bwd",
                                comp_attrs(as_i64(bwd_cycles)));
    chain(bwd);
    if (comm.mp_size > 1) {
      chain(b.add_node(NodeType::kCommColl, layer + "_bwd_ar",
                       coll_attrs(CommType::kAllReduce, act_bytes,
                                  comm.mp_group)));
    }
    if (comm.dp_size > 1) {
      if (spec.dp_collective == DpCollective::kAllReduce) {
        auto ar = b.add_node(NodeType::kCommColl, layer + "_grad_ar",
                             coll_attrs(CommType::kAllReduce, grad_bytes,
                                        comm.dp_group));
        b.assign_dep(bwd, ar);
      } else {
        auto rs = b.add_node(NodeType::kCommColl, layer + "_grad_rs",
                             coll_attrs(CommType::kReduceScatter, grad_bytes,
                                        comm.dp_group));
        auto ag = b.add_node(NodeType::kCommColl, layer + "_param_ag",
                             coll_attrs(CommType::kAllGather, grad_bytes,
                                        comm.dp_group));
        b.assign_dep(bwd, rs);
        b.assign_dep(rs, ag);
      }
    }
  }
  return b.finalize();
}

// GPipe-style schedule: every stage runs all forward micro-batches, then all
// backward micro-batches in reverse order. Stage s owns a contiguous block of
// layers and exchanges activations (forward) and their gradients (backward)
// with its neighbours.
Trace pipeline_rank(const WorkloadSpec& spec, uint32_t stage) {
  const uint32_t stages = spec.npus;
  const uint32_t mbs = spec.microbatches;
  const uint32_t first = stage * spec.layers / stages;
  const uint32_t last = (stage + 1) * spec.layers / stages;
  const uint64_t layer_count = last - first;
  const uint64_t fwd_cycles = ceil_div(spec.compute_cycles * layer_count, mbs);
  const uint64_t bwd_cycles = ceil_div(spec.bwd_cycles() * layer_count, mbs);
  const int64_t act_bytes = as_i64(spec.activation_bytes / mbs);
  const bool has_prev = stage > 0;
  const bool has_next = stage + 1 < stages;
  const std::string st = "S" + std::to_string(stage);

  TraceBuilder b(stage);
  std::optional<NodeHandle> prev_compute;
  std::optional<NodeHandle> prev_recv;
  std::optional<NodeHandle> last_forward;

  for (uint32_t m = 0; m < mbs; ++m) {
    const std::string mb = "_mb" + std::to_string(m);
    std::optional<NodeHandle> recv;
    if (has_prev) {
      recv = b.add_node(NodeType::kCommRecv, st + "_recv_fwd" + mb,
                        p2p_attrs(act_bytes, stage - 1, m));
      if (prev_recv) b.assign_dep(*prev_recv, *recv);
      prev_recv = recv;
    }
    auto fwd = b.add_node(NodeType::kComp, st + "_fwd" + mb,
                          comp_attrs(as_i64(fwd_cycles)));
    if (recv) b.assign_dep(*recv, fwd);
    if (prev_compute) b.assign_dep(*prev_compute, fwd);
    prev_compute = fwd;
    last_forward = fwd;
    if (has_next) {
      auto send = b.add_node(NodeType::kCommSend, st + "_send_fwd" + mb,
                             p2p_attrs(act_bytes, stage + 1, m));
      b.assign_dep(fwd, send);
      last_forward = send;
    }
  }

  // Backward receives must not occupy the network before this stage has
  // pushed its last forward activation out.
  prev_recv = last_forward;
  for (uint32_t m = mbs; m-- > 0;) {
    const std::string mb = "_mb" + std::to_string(m);
    const int64_t tag = mbs + m;
    std::optional<NodeHandle> recv;
    if (has_next) {
      recv = b.add_node(NodeType::kCommRecv, st + "_recv_bwd" + mb,
                        p2p_attrs(act_bytes, stage + 1, tag));
      b.assign_dep(*prev_recv, *recv);
      prev_recv = recv;
    }
    auto bwd = b.add_node(NodeType::kComp, st + "_bwd" + mb,
                          comp_attrs(as_i64(bwd_cycles)));
    if (recv) b.assign_dep(*recv, bwd);
    b.assign_dep(*prev_compute, bwd);
    prev_compute = bwd;
    if (has_prev) {
      auto send = b.add_node(NodeType::kCommSend, st + "_send_bwd" + mb,
                             p2p_attrs(act_bytes, stage - 1, tag));
      b.assign_dep(bwd, send);
    }
  }
  return b.finalize();
}

}  // namespace

std::string_view to_string(Parallelism p) {
  return kParallelismNames.at(static_cast<size_t>(p));
}

std::optional<Parallelism> parse_parallelism(std::string_view name) {
  std::string upper;
  for (char c : name) {
    upper.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(c)));
  }
  for (size_t i = 0; i < kParallelismNames.size(); ++i) {
    if (kParallelismNames[i] == upper) return static_cast<Parallelism>(i);
  }
  return std::nullopt;
}

std::string dim1_group(uint32_t rank, uint32_t d1) {
  return "dim1." + std::to_string(rank / d1);
}

std::string dim2_group(uint32_t rank, uint32_t d1) {
  return "dim2." + std::to_string(rank % d1);
}

void check_workload(const WorkloadSpec& spec) {
  if (spec.layers < 1) throw WorkloadError("layers must be >= 1");
  if (spec.npus < 1) throw WorkloadError("npus must be >= 1");
  if (spec.dims) {
    auto [d1, d2] = *spec.dims;
    if (d1 < 1 || d2 < 1) throw WorkloadError("dims must be >= 1");
    if (static_cast<uint64_t>(d1) * d2 != spec.npus) {
      throw WorkloadError("dims " + std::to_string(d1) + "x" +
                          std::to_string(d2) + " do not multiply to npus " +
                          std::to_string(spec.npus));
    }
  }
  if ((spec.parallelism == Parallelism::kDPMP ||
       spec.parallelism == Parallelism::kMPDP) &&
      !spec.dims) {
    throw WorkloadError("hybrid parallelism requires dims");
  }
  if (spec.parallelism == Parallelism::kPipeline) {
    if (spec.npus > spec.layers) {
      throw WorkloadError("pipeline needs at least one layer per stage");
    }
    if (spec.microbatches < 1) throw WorkloadError("microbatches must be >= 1");
    if (spec.embedding_layers > 0) {
      throw WorkloadError("embedding layers are not supported with pipeline");
    }
  }
  if (spec.embedding_layers >= spec.layers && spec.embedding_layers > 0) {
    throw WorkloadError("embedding_layers must leave at least one dense layer");
  }
}

std::vector<Trace> generate_workload(const WorkloadSpec& spec) {
  check_workload(spec);
  std::vector<Trace> traces;
  traces.reserve(spec.npus);
  for (uint32_t r = 0; r < spec.npus; ++r) {
    traces.push_back(spec.parallelism == Parallelism::kPipeline
                         ? pipeline_rank(spec, r)
                         : layered_rank(spec, r));
  }
  return traces;
}

}  // namespace chakra
