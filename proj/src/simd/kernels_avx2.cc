#include <immintrin.h>

#include "chakra/simd/kernels.h"

namespace chakra::simd::avx2 {
namespace {

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

void gaussian_log_density(const double* x, size_t n, double mean,
                          double inv_var, double log_norm, double* out) {
  const __m256d vmean = _mm256_set1_pd(mean);
  const __m256d vscale = _mm256_set1_pd(-0.5 * inv_var);
  const __m256d vnorm = _mm256_set1_pd(log_norm);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vmean);
    __m256d d2 = _mm256_mul_pd(d, d);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(d2, vscale, vnorm));
  }
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    out[i] = log_norm - 0.5 * d * d * inv_var;
  }
}

Moments weighted_sum(const double* x, const double* w, size_t n) {
  __m256d sw = _mm256_setzero_pd();
  __m256d swx = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vw = _mm256_loadu_pd(w + i);
    sw = _mm256_add_pd(sw, vw);
    swx = _mm256_fmadd_pd(vw, _mm256_loadu_pd(x + i), swx);
  }
  Moments m{hsum(sw), hsum(swx)};
  for (; i < n; ++i) {
    m.weight += w[i];
    m.weighted += w[i] * x[i];
  }
  return m;
}

double weighted_sq_dev(const double* x, const double* w, size_t n,
                       double center) {
  const __m256d vc = _mm256_set1_pd(center);
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vc);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), d), d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - center;
    s += w[i] * d * d;
  }
  return s;
}

}  // namespace chakra::simd::avx2
