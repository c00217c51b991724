#include "chakra/synth/gmm.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chakra/simd/kernels.h"

namespace chakra {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

double log_norm(const GaussianComponent& c) {
  return std::log(c.weight) - 0.5 * (kLog2Pi + std::log(c.variance));
}

double log_sum_exp(const double* v, size_t n) {
  double hi = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) hi = std::max(hi, v[i]);
  if (!std::isfinite(hi)) return hi;
  double s = 0;
  for (size_t i = 0; i < n; ++i) s += std::exp(v[i] - hi);
  return hi + std::log(s);
}

// k-means++ seeding followed by one hard assignment.
std::vector<GaussianComponent> initialize(std::span<const double> x, uint32_t k,
                                          double floor, std::mt19937_64& rng) {
  const size_t n = x.size();
  std::vector<double> centers;
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  centers.push_back(x[std::uniform_int_distribution<size_t>(0, n - 1)(rng)]);
  while (centers.size() < k) {
    double total = 0;
    for (size_t i = 0; i < n; ++i) {
      const double d = x[i] - centers.back();
      d2[i] = std::min(d2[i], d * d);
      total += d2[i];
    }
    size_t pick = 0;
    if (total > 0) {
      double u = std::uniform_real_distribution<double>(0, total)(rng);
      for (pick = 0; pick + 1 < n && u >= d2[pick]; ++pick) u -= d2[pick];
    } else {
      pick = std::uniform_int_distribution<size_t>(0, n - 1)(rng);
    }
    centers.push_back(x[pick]);
  }

  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0;
  for (double v : x) var += (v - mean) * (v - mean);
  var = std::max(var / static_cast<double>(n), floor);

  std::vector<double> count(k, 0), sum(k, 0), sq(k, 0);
  for (double v : x) {
    size_t best = 0;
    for (size_t j = 1; j < k; ++j) {
      if (std::abs(v - centers[j]) < std::abs(v - centers[best])) best = j;
    }
    count[best] += 1;
    sum[best] += v;
    sq[best] += v * v;
  }
  std::vector<GaussianComponent> comps(k);
  for (size_t j = 0; j < k; ++j) {
    if (count[j] == 0) {
      comps[j] = {1.0 / static_cast<double>(n), centers[j], var};
      continue;
    }
    const double m = sum[j] / count[j];
    const double v = sq[j] / count[j] - m * m;
    comps[j] = {count[j] / static_cast<double>(n), m,
                count[j] > 1 ? std::max(v, floor) : var};
  }
  double total = 0;
  for (const auto& c : comps) total += c.weight;
  for (auto& c : comps) c.weight /= total;
  return comps;
}

}  // namespace

double Gmm::log_density(double x) const {
  std::vector<double> terms;
  terms.reserve(components.size());
  for (const auto& c : components) {
    const double d = x - c.mean;
    terms.push_back(log_norm(c) - 0.5 * d * d / c.variance);
  }
  return log_sum_exp(terms.data(), terms.size());
}

double Gmm::sample(std::mt19937_64& rng) const {
  double u = std::uniform_real_distribution<double>(0, 1)(rng);
  size_t j = 0;
  for (; j + 1 < components.size() && u >= components[j].weight; ++j) {
    u -= components[j].weight;
  }
  const auto& c = components[j];
  return std::normal_distribution<double>(c.mean, std::sqrt(c.variance))(rng);
}

GmmFit fit_gmm(std::span<const double> samples, const GmmFitOptions& options) {
  const size_t n = samples.size();
  const uint32_t k = options.components;
  if (n == 0) throw GmmError("fit_gmm: no samples");
  if (k == 0) throw GmmError("fit_gmm: components must be >= 1");
  if (k > n) {
    throw GmmError("fit_gmm: " + std::to_string(k) + " components but only " +
                   std::to_string(n) + " samples");
  }
  if (!(options.variance_floor > 0)) {
    throw GmmError("fit_gmm: variance_floor must be > 0");
  }
  for (double v : samples) {
    if (!std::isfinite(v)) throw GmmError("fit_gmm: non-finite sample");
  }

  std::mt19937_64 rng(options.seed);
  GmmFit fit;
  fit.model.components = initialize(samples, k, options.variance_floor, rng);
  auto& comps = fit.model.components;

  const double* x = samples.data();
  std::vector<double> logp(k * n);  // row j = component j
  std::vector<double> column(k);
  double prev = -std::numeric_limits<double>::infinity();

  for (fit.iterations = 1; fit.iterations <= options.max_iterations;
       ++fit.iterations) {
    // E step: responsibilities overwrite logp in place.
    for (size_t j = 0; j < k; ++j) {
      simd::gaussian_log_density(x, n, comps[j].mean, 1.0 / comps[j].variance,
                                 log_norm(comps[j]), logp.data() + j * n);
    }
    double ll = 0;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < k; ++j) column[j] = logp[j * n + i];
      const double lse = log_sum_exp(column.data(), k);
      ll += lse;
      for (size_t j = 0; j < k; ++j) {
        logp[j * n + i] = std::exp(column[j] - lse);
      }
    }
    ll /= static_cast<double>(n);

    // M step.
    for (size_t j = 0; j < k; ++j) {
      const double* r = logp.data() + j * n;
      const simd::Moments m = simd::weighted_sum(x, r, n);
      if (m.weight <= 0) {
        comps[j].weight = std::numeric_limits<double>::min();
        continue;
      }
      comps[j].weight = m.weight / static_cast<double>(n);
      comps[j].mean = m.weighted / m.weight;
      comps[j].variance = std::max(
          simd::weighted_sq_dev(x, r, n, comps[j].mean) / m.weight,
          options.variance_floor);
    }
    double total = 0;
    for (const auto& c : comps) total += c.weight;
    for (auto& c : comps) c.weight /= total;

    fit.log_likelihood = ll;
    if (std::abs(ll - prev) < options.tolerance) {
      fit.converged = true;
      break;
    }
    prev = ll;
  }
  fit.iterations = std::min(fit.iterations, options.max_iterations);
  std::sort(comps.begin(), comps.end(),
            [](const auto& a, const auto& b) { return a.mean < b.mean; });
  return fit;
}

}  // namespace chakra
