#pragma once

#include <cstddef>
#include <string_view>

// Numeric kernels behind the mixture-model fitter. Each has a portable scalar
// reference and an AVX2/FMA variant; the public entry points dispatch on the
// CPU at first use. Results of the two variants agree to rounding (the vector
// sums are reassociated).
namespace chakra::simd {

enum class Isa { kScalar, kAvx2 };

struct Moments {
  double weight = 0;     // sum w[i]
  double weighted = 0;   // sum w[i] * x[i]
};

// out[i] = log_norm - 0.5 * (x[i] - mean)^2 * inv_var
void gaussian_log_density(const double* x, size_t n, double mean,
                          double inv_var, double log_norm, double* out);

Moments weighted_sum(const double* x, const double* w, size_t n);

// sum w[i] * (x[i] - center)^2
double weighted_sq_dev(const double* x, const double* w, size_t n,
                       double center);

Isa active_isa();
bool avx2_available();
std::string_view to_string(Isa isa);

// Explicit variants, for equivalence tests and benchmarks.
namespace scalar {
void gaussian_log_density(const double* x, size_t n, double mean,
                          double inv_var, double log_norm, double* out);
Moments weighted_sum(const double* x, const double* w, size_t n);
double weighted_sq_dev(const double* x, const double* w, size_t n,
                       double center);
}  // namespace scalar

// Callable only when avx2_available().
namespace avx2 {
void gaussian_log_density(const double* x, size_t n, double mean,
                          double inv_var, double log_norm, double* out);
Moments weighted_sum(const double* x, const double* w, size_t n);
double weighted_sq_dev(const double* x, const double* w, size_t n,
                       double center);
}  // namespace avx2

}  // namespace chakra::simd
