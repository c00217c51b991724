#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chakra/synth/gmm.h"
#include "chakra/synth/master.h"

namespace chakra {

class SynthError : public Error {
 public:
  using Error::Error;
};

inline constexpr size_t kNumCollectives = std::size(kCollectiveTypes);
using TypeVector = std::array<double, kNumCollectives>;  // kCollectiveTypes order

// A composition cluster: how often each collective appears, and which type
// tends to follow which.
struct CommTypeCluster {
  double weight = 1;
  TypeVector composition{};
  std::array<TypeVector, kNumCollectives> transition{};  // row = previous type

  bool operator==(const CommTypeCluster&) const = default;
};

struct CommTypeModel {
  std::vector<CommTypeCluster> clusters;

  bool operator==(const CommTypeModel&) const = default;
};

// Empirical distribution of master-trace lengths.
struct LengthModel {
  std::vector<uint64_t> lengths;

  bool operator==(const LengthModel&) const = default;
};

struct SynthModels {
  CommTypeModel comm_types;
  std::map<CommType, Gmm> sizes;  // over log2(bytes)
  LengthModel lengths;

  bool operator==(const SynthModels&) const = default;
};

struct FitOptions {
  uint32_t components = 2;
  uint32_t clusters = 2;
  uint64_t seed = 0;
  GmmFitOptions gmm;  // components and seed are taken from above
};

struct FitResult {
  SynthModels models;
  std::vector<std::string> warnings;
};

// Per master op the size sample is log2 of the mean per-rank size (at least
// one byte). Masters are clustered by composition with seeded k-means; the
// cluster count is capped by the number of distinct compositions. A type
// with fewer samples than components gets a one-component fit and a warning.
FitResult fit_models(std::span<const MasterTrace> corpus,
                     const FitOptions& options);

// Checks that probabilities are normalized and every type with nonzero
// probability has a size model. Throws SynthError.
void check_models(const SynthModels& models);

struct SynthConfig {
  uint32_t npus = 1;
  std::optional<uint64_t> length;  // overrides the length model
  double split_jitter = 0;         // per-rank relative size jitter in [0, 1)
  uint64_t seed = 0;
};

// Samples cluster, length, a type chain (first op from the cluster
// composition, then the transition matrix), and a size per op. Every op runs
// on the world group of cfg.npus ranks; each rank's size is the sampled size
// scaled by 1 + jitter * U(-1, 1), rounded up to a multiple of 4 bytes.
MasterTrace synthesize_master(const SynthModels& models, const SynthConfig& cfg);
std::vector<Trace> synthesize(const SynthModels& models, const SynthConfig& cfg);

inline constexpr std::string_view kSynthWorldGroup = "world";

std::string models_to_json(const SynthModels& models);
SynthModels models_from_json(std::string_view text);

// Two-sample Kolmogorov-Smirnov statistic: sup |F_a - F_b|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

}  // namespace chakra
