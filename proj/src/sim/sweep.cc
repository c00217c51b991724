#include "chakra/sim/sweep.h"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace chakra {
namespace {

constexpr std::array<std::string_view, 6> kPresetNames = {
    "mlp-dp", "mlp-mp", "mlp-dp-mp", "mlp-mp-dp", "transformer", "dlrm"};

WorkloadSpec mlp(Parallelism p, uint32_t npus,
                 std::pair<uint32_t, uint32_t> dims) {
  WorkloadSpec s;
  s.layers = 6;
  s.npus = npus;
  s.parallelism = p;
  s.dims = dims;
  s.compute_cycles = 400'000;
  s.weight_bytes = 32ull << 20;
  s.activation_bytes = 64ull << 20;
  return s;
}

// 165M parameters in fp16 over 12 layers, tensor-parallel along dimension 1
// and ZeRO-2 data-parallel along dimension 2.
WorkloadSpec transformer(uint32_t npus, std::pair<uint32_t, uint32_t> dims,
                         uint64_t compute_cycles) {
  WorkloadSpec s;
  s.name = "transformer";
  s.layers = 12;
  s.npus = npus;
  s.parallelism = Parallelism::kMPDP;
  s.dims = dims;
  s.dp_collective = DpCollective::kZero2;
  s.compute_cycles = compute_cycles;
  s.weight_bytes = 27'500'000;
  s.activation_bytes = 32ull << 20;
  return s;
}

uint64_t calibrated_transformer_cycles() {
  static const uint64_t cycles = [] {
    constexpr uint64_t kProbe = 1'000'000;
    auto traces = generate_workload(transformer(4, {2, 2}, kProbe));
    auto result = run_simulation(traces, reference_config(4));
    double compute = 0;
    double comm = 0;
    for (const auto& s : result.npus) {
      compute += static_cast<double>(s.compute_busy);
      comm += static_cast<double>(s.comm_busy);
    }
    return static_cast<uint64_t>(std::llround(
        kProbe * kTransformerComputeToComm * comm / compute));
  }();
  return cycles;
}

}  // namespace

std::string_view to_string(Preset p) {
  return kPresetNames.at(static_cast<size_t>(p));
}

std::optional<Preset> parse_preset(std::string_view name) {
  for (size_t i = 0; i < kPresetNames.size(); ++i) {
    if (kPresetNames[i] == name) return static_cast<Preset>(i);
  }
  return std::nullopt;
}

SimConfig reference_config(uint32_t npus) {
  SimConfig cfg;
  auto [d1, d2] = square_dims(npus);
  cfg.topology.kind = TopologyKind::kTorus2D;
  cfg.topology.d1 = d1;
  cfg.topology.d2 = d2;
  cfg.topology.bw1 = 62e9;
  cfg.topology.bw2 = 62e9;
  return cfg;
}

WorkloadSpec make_preset(Preset preset, uint32_t npus,
                         std::optional<std::pair<uint32_t, uint32_t>> dims) {
  const auto placement = dims.value_or(square_dims(npus));
  WorkloadSpec s;
  switch (preset) {
    case Preset::kMlpDp: s = mlp(Parallelism::kDP, npus, placement); break;
    case Preset::kMlpMp: s = mlp(Parallelism::kMP, npus, placement); break;
    case Preset::kMlpDpMp: s = mlp(Parallelism::kDPMP, npus, placement); break;
    case Preset::kMlpMpDp: s = mlp(Parallelism::kMPDP, npus, placement); break;
    case Preset::kTransformer:
      s = transformer(npus, placement, calibrated_transformer_cycles());
      break;
    case Preset::kDlrm:
      // Two sharded embedding tables feeding six data-parallel MLP layers.
      s.layers = 8;
      s.npus = npus;
      s.parallelism = Parallelism::kDP;
      s.dims = placement;
      s.embedding_layers = 2;
      s.embedding_bytes = 16ull << 20;
      s.compute_cycles = 4'000'000;
      s.weight_bytes = 4ull << 20;
      s.activation_bytes = 4ull << 20;
      break;
  }
  s.name = std::string(to_string(preset));
  return s;
}

WorkloadFactory preset_factory(Preset preset) {
  return [preset](uint32_t npus, const Topology& topo) {
    return generate_workload(
        make_preset(preset, npus, std::make_pair(topo.d1, topo.d2)));
  };
}

std::vector<SweepRow> sweep(std::string_view workload_name,
                            const WorkloadFactory& factory,
                            std::span<const SweepCell> cells,
                            const SimConfig& base, unsigned threads) {
  std::vector<SweepRow> rows(cells.size());
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (size_t i = next++; i < cells.size(); i = next++) {
      try {
        SimConfig cfg = base;
        cfg.topology = cells[i].topology;
        auto traces = factory(cells[i].npus, cfg.topology);
        auto result = run_simulation(traces, cfg);
        auto breakdown = compute_breakdown(result);
        SweepRow& row = rows[i];
        row.workload = std::string(workload_name);
        row.topology = cfg.topology.describe();
        row.npus = cells[i].npus;
        row.bw1 = cfg.topology.bw1;
        row.bw2 = cfg.topology.bw2;
        row.makespan = result.makespan_cycles;
        for (const auto& b : breakdown) {
          row.compute += static_cast<double>(b.compute);
          row.exposed_comm += static_cast<double>(b.exposed_comm);
        }
        if (!breakdown.empty()) {
          row.compute /= static_cast<double>(breakdown.size());
          row.exposed_comm /= static_cast<double>(breakdown.size());
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const unsigned n = std::max(1u, std::min<unsigned>(
                                      threads, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  if (!rows.empty()) {
    const double baseline = static_cast<double>(rows.front().makespan);
    for (auto& r : rows) {
      r.normalized_performance =
          r.makespan == 0 ? 0.0 : baseline / static_cast<double>(r.makespan);
    }
  }
  return rows;
}

std::vector<SweepCell> npu_cells(const Topology& base,
                                 std::span<const uint32_t> npus) {
  std::vector<SweepCell> cells;
  for (uint32_t n : npus) {
    SweepCell c{n, base};
    std::tie(c.topology.d1, c.topology.d2) = square_dims(n);
    cells.push_back(c);
  }
  return cells;
}

std::vector<SweepCell> bandwidth_cells(
    const Topology& base, std::span<const std::pair<double, double>> bws) {
  std::vector<SweepCell> cells;
  for (auto [b1, b2] : bws) {
    SweepCell c{base.npus(), base};
    c.topology.bw1 = b1;
    c.topology.bw2 = b2;
    cells.push_back(c);
  }
  return cells;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out.precision(10);
  out << "workload,topology,npus,bw1,bw2,makespan_cycles,compute_cycles,"
         "exposed_comm_cycles,exposed_share,normalized_performance\n";
  for (const auto& r : rows) {
    out << r.workload << ',' << r.topology << ',' << r.npus << ',' << r.bw1
        << ',' << r.bw2 << ',' << r.makespan << ',' << r.compute << ','
        << r.exposed_comm << ',' << r.exposed_share() << ','
        << r.normalized_performance << '\n';
  }
  return out.str();
}

}  // namespace chakra
