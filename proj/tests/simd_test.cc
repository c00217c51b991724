#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "chakra/simd/kernels.h"

namespace chakra::simd {
namespace {

struct Data {
  std::vector<double> x;
  std::vector<double> w;
};

Data random_data(std::mt19937_64& rng, size_t n) {
  std::normal_distribution<double> x(12, 5);
  std::uniform_real_distribution<double> w(0, 1);
  Data d;
  for (size_t i = 0; i < n; ++i) {
    d.x.push_back(x(rng));
    d.w.push_back(w(rng));
  }
  return d;
}

double abs_sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += std::abs(x);
  return s;
}

TEST(Simd, ScalarMatchesDefinition) {
  std::vector<double> x = {1, 2, 4};
  std::vector<double> w = {0.5, 1, 2};
  std::vector<double> out(3);
  scalar::gaussian_log_density(x.data(), 3, 2, 0.25, -1, out.data());
  EXPECT_DOUBLE_EQ(out[0], -1 - 0.5 * 1 * 0.25);
  EXPECT_DOUBLE_EQ(out[1], -1);
  EXPECT_DOUBLE_EQ(out[2], -1 - 0.5 * 4 * 0.25);
  Moments m = scalar::weighted_sum(x.data(), w.data(), 3);
  EXPECT_DOUBLE_EQ(m.weight, 3.5);
  EXPECT_DOUBLE_EQ(m.weighted, 0.5 + 2 + 8);
  EXPECT_DOUBLE_EQ(scalar::weighted_sq_dev(x.data(), w.data(), 3, 2), 0.5 + 0 + 8);
}

TEST(Simd, DispatchMatchesScalar) {
  std::mt19937_64 rng(6);
  for (size_t n : {0, 1, 3, 4, 5, 7, 8, 17, 1000}) {
    Data d = random_data(rng, n);
    std::vector<double> a(n);
    std::vector<double> b(n);
    gaussian_log_density(d.x.data(), n, 11, 0.3, -2, a.data());
    scalar::gaussian_log_density(d.x.data(), n, 11, 0.3, -2, b.data());
    for (size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-12 * std::max(1.0, std::abs(b[i])));
    }
    Moments ma = weighted_sum(d.x.data(), d.w.data(), n);
    Moments mb = scalar::weighted_sum(d.x.data(), d.w.data(), n);
    EXPECT_NEAR(ma.weight, mb.weight, 1e-12 * abs_sum(d.w) + 1e-300);
    EXPECT_NEAR(ma.weighted, mb.weighted, 1e-12 * abs_sum(d.x) + 1e-300);
  }
}

TEST(Simd, IsaReport) {
  EXPECT_EQ(to_string(Isa::kScalar), "scalar");
  EXPECT_EQ(to_string(Isa::kAvx2), "avx2");
  if (!avx2_available()) {
    EXPECT_EQ(active_isa(), Isa::kScalar);
  }
}

#ifdef CHAKRA_HAVE_AVX2
TEST(Simd, Avx2MatchesScalar) {
  if (!avx2_available()) GTEST_SKIP() << "CPU lacks AVX2/FMA";
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const size_t n = std::uniform_int_distribution<size_t>(0, 67)(rng);
    Data d = random_data(rng, n);
    const double mean = std::normal_distribution<double>(12, 4)(rng);
    const double inv_var = std::uniform_real_distribution<double>(0.01, 10)(rng);
    const double log_norm = std::normal_distribution<double>(0, 3)(rng);
    std::vector<double> a(n);
    std::vector<double> b(n);
    avx2::gaussian_log_density(d.x.data(), n, mean, inv_var, log_norm, a.data());
    scalar::gaussian_log_density(d.x.data(), n, mean, inv_var, log_norm, b.data());
    for (size_t i = 0; i < n; ++i) {
      const double scale = std::abs(log_norm) +
                           0.5 * (d.x[i] - mean) * (d.x[i] - mean) * inv_var;
      ASSERT_NEAR(a[i], b[i], 1e-13 * std::max(1.0, scale));
    }
    Moments ma = avx2::weighted_sum(d.x.data(), d.w.data(), n);
    Moments mb = scalar::weighted_sum(d.x.data(), d.w.data(), n);
    double wx = 0;
    double sq = 0;
    for (size_t i = 0; i < n; ++i) {
      wx += std::abs(d.w[i] * d.x[i]);
      sq += d.w[i] * (d.x[i] - mean) * (d.x[i] - mean);
    }
    ASSERT_NEAR(ma.weight, mb.weight, 1e-13 * std::max(1.0, abs_sum(d.w)));
    ASSERT_NEAR(ma.weighted, mb.weighted, 1e-13 * std::max(1.0, wx));
    ASSERT_NEAR(avx2::weighted_sq_dev(d.x.data(), d.w.data(), n, mean),
                scalar::weighted_sq_dev(d.x.data(), d.w.data(), n, mean),
                1e-13 * std::max(1.0, sq));
  }
}
#endif

}  // namespace
}  // namespace chakra::simd
