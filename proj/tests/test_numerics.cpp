#include "quadchaos/numerics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace quadchaos;

TEST(Numerics, BisectLevelHitsTarget) {
  const double x = bisect_level([](double t) { return t * t; }, 9.0, 0.0, 10.0);
  EXPECT_NEAR(x, 3.0, 1e-12);
}

TEST(Numerics, BisectLevelKeepsFeasibleSide) {
  // The returned point must never overshoot the target level.
  const double x =
      bisect_level([](double t) { return std::exp(t); }, 5.0, 0.0, 10.0);
  EXPECT_LE(std::exp(x), 5.0 + 1e-9);
  EXPECT_NEAR(x, std::log(5.0), 1e-10);
}

TEST(Numerics, BisectDecreasingRoot) {
  const double x =
      bisect_decreasing_root([](double t) { return 4.0 - t; }, 0.0, 100.0);
  EXPECT_NEAR(x, 4.0, 1e-10);
}

TEST(Numerics, GoldenMaxParabola) {
  auto [x, v] = golden_max([](double t) { return -(t - 2.5) * (t - 2.5); },
                           0.0, 10.0);
  EXPECT_NEAR(x, 2.5, 1e-8);
  EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Numerics, GridRefineMaxMultimodal) {
  // Two humps; the grid pass must find the taller one at x = 7.
  auto f = [](double x) {
    return std::exp(-(x - 2.0) * (x - 2.0)) +
           1.5 * std::exp(-4.0 * (x - 7.0) * (x - 7.0));
  };
  auto [x, v] = grid_refine_max(f, 0.0, 10.0);
  EXPECT_NEAR(x, 7.0, 1e-6);
  EXPECT_NEAR(v, 1.5, 1e-6);
}

TEST(Numerics, AdaptiveIntegralPolynomial) {
  const double v =
      integrate_adaptive([](double x) { return x * x; }, 0.0, 3.0, 1e-12);
  EXPECT_NEAR(v, 9.0, 1e-10);
}

TEST(Numerics, LogIntegralExpGaussian) {
  // integral of exp(-x^2/2) over R = sqrt(2 pi).
  auto phi = [](double x) { return -0.5 * x * x; };
  const double v = log_integral_exp(phi, -40.0, 40.0);
  EXPECT_NEAR(v, 0.5 * std::log(2.0 * 3.141592653589793), 1e-9);
}

TEST(Numerics, LogIntegralExpHandlesHugePeaks) {
  // Peak value e^500 would overflow a naive quadrature.
  auto phi = [](double x) { return 500.0 - (x - 3.0) * (x - 3.0); };
  const double v = log_integral_exp(phi, -40.0, 40.0);
  EXPECT_NEAR(v, 500.0 + 0.5 * std::log(3.141592653589793), 1e-8);
}

TEST(Numerics, LogSumExpMatchesDirect) {
  LogSumExp lse;
  lse.add(std::log(1.0));
  lse.add(std::log(2.0));
  lse.add(std::log(3.0));
  EXPECT_NEAR(lse.value(), std::log(6.0), 1e-12);
}

TEST(Numerics, LogSumExpExtremes) {
  LogSumExp lse;
  lse.add(1000.0);
  lse.add(-1000.0);
  EXPECT_NEAR(lse.value(), 1000.0, 1e-12);
  LogSumExp empty;
  EXPECT_EQ(empty.value(), -kInf);
}

TEST(Numerics, WilsonIntervalBasics) {
  const auto iv = wilson_interval(0, 100);
  EXPECT_EQ(iv.lo, 0.0);
  EXPECT_GT(iv.hi, 0.0);
  const auto half = wilson_interval(50, 100);
  EXPECT_LT(half.lo, 0.5);
  EXPECT_GT(half.hi, 0.5);
  const auto full = wilson_interval(100, 100);
  EXPECT_LT(full.lo, 1.0);
  EXPECT_DOUBLE_EQ(full.hi, 1.0);
}

TEST(Numerics, WilsonCoverageSanity) {
  // At p = 0.1, n = 1000, the 95% interval should be roughly 0.1 +- 0.02.
  const auto iv = wilson_interval(100, 1000);
  EXPECT_NEAR(iv.lo, 0.083, 0.005);
  EXPECT_NEAR(iv.hi, 0.120, 0.005);
}

TEST(Numerics, QuantileType7) {
  std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
}
