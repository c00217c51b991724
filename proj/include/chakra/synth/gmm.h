#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "chakra/core/types.h"

namespace chakra {

class GmmError : public Error {
 public:
  using Error::Error;
};

struct GaussianComponent {
  double weight = 1;
  double mean = 0;
  double variance = 1;

  bool operator==(const GaussianComponent&) const = default;
};

struct Gmm {
  std::vector<GaussianComponent> components;

  double log_density(double x) const;
  double sample(std::mt19937_64& rng) const;
  bool operator==(const Gmm&) const = default;
};

struct GmmFitOptions {
  uint32_t components = 2;
  uint32_t max_iterations = 200;
  double tolerance = 1e-6;       // on mean log-likelihood
  double variance_floor = 1e-6;
  uint64_t seed = 0;
};

struct GmmFit {
  Gmm model;
  uint32_t iterations = 0;
  double log_likelihood = 0;  // mean per sample
  bool converged = false;
};

// EM with k-means++ seeding. Requires at least one sample and no more
// components than samples. Deterministic for a given seed.
GmmFit fit_gmm(std::span<const double> samples, const GmmFitOptions& options);

}  // namespace chakra
