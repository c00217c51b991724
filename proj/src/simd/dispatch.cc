#include "chakra/simd/kernels.h"

namespace chakra::simd {
namespace {

struct Table {
  Isa isa;
  decltype(&scalar::gaussian_log_density) log_density;
  decltype(&scalar::weighted_sum) sum;
  decltype(&scalar::weighted_sq_dev) sq_dev;
};

const Table& table() {
  static const Table t = [] {
#ifdef CHAKRA_HAVE_AVX2
    if (avx2_available()) {
      return Table{Isa::kAvx2, &avx2::gaussian_log_density,
                   &avx2::weighted_sum, &avx2::weighted_sq_dev};
    }
#endif
    return Table{Isa::kScalar, &scalar::gaussian_log_density,
                 &scalar::weighted_sum, &scalar::weighted_sq_dev};
  }();
  return t;
}

}  // namespace

bool avx2_available() {
#ifdef CHAKRA_HAVE_AVX2
  static const bool ok = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return ok;
#else
  return false;
#endif
}

Isa active_isa() { return table().isa; }

std::string_view to_string(Isa isa) {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

void gaussian_log_density(const double* x, size_t n, double mean,
                          double inv_var, double log_norm, double* out) {
  table().log_density(x, n, mean, inv_var, log_norm, out);
}

Moments weighted_sum(const double* x, const double* w, size_t n) {
  return table().sum(x, w, n);
}

double weighted_sq_dev(const double* x, const double* w, size_t n,
                       double center) {
  return table().sq_dev(x, w, n, center);
}

}  // namespace chakra::simd
