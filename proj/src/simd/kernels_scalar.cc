#include "chakra/simd/kernels.h"

namespace chakra::simd::scalar {

void gaussian_log_density(const double* x, size_t n, double mean,
                          double inv_var, double log_norm, double* out) {
  for (size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    out[i] = log_norm - 0.5 * d * d * inv_var;
  }
}

Moments weighted_sum(const double* x, const double* w, size_t n) {
  Moments m;
  for (size_t i = 0; i < n; ++i) {
    m.weight += w[i];
    m.weighted += w[i] * x[i];
  }
  return m;
}

double weighted_sq_dev(const double* x, const double* w, size_t n,
                       double center) {
  double s = 0;
  for (size_t i = 0; i < n; ++i) {
    const double d = x[i] - center;
    s += w[i] * d * d;
  }
  return s;
}

}  // namespace chakra::simd::scalar
