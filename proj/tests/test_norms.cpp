#include "quadchaos/norms.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "quadchaos/oracle.hpp"
#include "quadchaos/rng.hpp"
#include "support/jacobi.hpp"

using namespace quadchaos;

namespace {

std::vector<std::pair<std::string, DistributionModel>> catalog() {
  return {
      {"square_tail", DistributionModel::square_tail()},
      {"gaussian", DistributionModel::gaussian()},
      {"rademacher", DistributionModel::rademacher()},
      {"weibull_0.7", DistributionModel::weibull_sym(0.7)},
      {"trunc_0.7_3", DistributionModel::trunc_weibull_sym(0.7, 3.0)},
      {"custom", DistributionModel::custom_tail(
                     {{0.0, 1.0, 3.0, 9.0}, {0.0, 1.0, 2.4, 6.0}})},
  };
}

// Models that exercise the generic dual path (non-unit scales).
std::vector<std::pair<std::string, DistributionModel>> scaled_catalog() {
  return {
      {"gaussian_s0.5", DistributionModel::gaussian(0.5)},
      {"gaussian_s1.3", DistributionModel::gaussian(1.3)},
      {"square_s2", DistributionModel::square_tail(2.0)},
      {"weibull_s2", DistributionModel::weibull_sym(0.7, 2.0)},
      {"trunc_s0.8", DistributionModel::trunc_weibull_sym(0.7, 3.0, 0.8)},
  };
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed,
                                  bool signed_entries = true) {
  RngStream rng(seed, 0xab, 0);
  std::vector<double> a(n);
  for (auto& v : a) {
    v = rng.next_gaussian();
    if (!signed_entries) v = std::abs(v);
  }
  return a;
}

std::vector<double> random_sorted(std::size_t n, std::uint64_t seed) {
  auto a = random_vector(n, seed, false);
  std::sort(a.begin(), a.end(), std::greater<double>());
  return a;
}

void expect_certificate_consistent(const NormSolution& sol,
                                   const std::vector<double>& a,
                                   const ConstraintBudget& budget) {
  double v = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) v += a[i] * sol.certificate_x[i];
  EXPECT_NEAR(v, sol.value, 1e-9 * std::max(1.0, std::abs(sol.value)));
  const double cost = budget_cost_sum(budget.model, sol.certificate_x);
  EXPECT_LE(cost, budget.p * (1.0 + 1e-9) + 1e-12);
  EXPECT_LE(sol.feasibility_slack, 1e-9 * budget.p + 1e-12);
  EXPECT_LE(sol.value, sol.upper * (1.0 + 1e-12) + 1e-12);
}

}  // namespace

// ---------------------------------------------------------------------------
// Budget costs and enclosures

TEST(Budget, CostMatchesTailExceptSurrogates) {
  const auto g = DistributionModel::gaussian();
  EXPECT_DOUBLE_EQ(budget_cost(g, 0.5), 0.25);
  EXPECT_DOUBLE_EQ(budget_cost(g, -0.5), 0.25);
  EXPECT_DOUBLE_EQ(budget_cost(g, 2.0), g.tail_exponent(2.0));

  // Truncated power law: surrogate (t/s)^r inside the support, +inf beyond.
  const auto tw = DistributionModel::trunc_weibull_sym(0.5, 3.0, 2.0);
  EXPECT_DOUBLE_EQ(budget_cost(tw, 4.0), std::pow(2.0, 0.5));
  EXPECT_DOUBLE_EQ(budget_cost(tw, 6.0), std::pow(3.0, 0.5));
  EXPECT_EQ(budget_cost(tw, 6.0 + 1e-9), kInf);

  // Tabulated tails price the uncovered range as unaffordable, not an error.
  const auto c =
      DistributionModel::custom_tail({{0.0, 1.0, 2.0}, {0.0, 1.0, 4.0}});
  EXPECT_EQ(budget_cost(c, 2.5), kInf);
  EXPECT_NO_THROW(budget_cost(c, 100.0));

  // Two-point law above unit scale: free up to the scale, impossible past.
  const auto rad2 = DistributionModel::rademacher(2.0);
  EXPECT_DOUBLE_EQ(budget_cost(rad2, 1.5), 0.0);
  EXPECT_EQ(budget_cost(rad2, 2.5), kInf);
}

TEST(Budget, BoxEdgeSolvesCostEqualsP) {
  const std::vector<DistributionModel> models = {
      DistributionModel::square_tail(), DistributionModel::gaussian(),
      DistributionModel::weibull_sym(0.5),
      DistributionModel::trunc_weibull_sym(0.5, 3.0),
      DistributionModel::custom_tail(
          {{0.0, 1.0, 3.0, 9.0}, {0.0, 1.0, 2.4, 6.0}})};
  for (const auto& m : models) {
    for (double p : {1.0, 2.0, 4.0}) {
      const double edge = budget_box_edge(m, p);
      EXPECT_LE(budget_cost(m, edge), p * (1.0 + 1e-9)) << m.name();
      const double beyond = budget_cost(m, edge * (1.0 + 1e-6));
      EXPECT_TRUE(beyond >= p * (1.0 - 1e-5)) << m.name() << " p=" << p;
    }
  }
  EXPECT_DOUBLE_EQ(budget_box_edge(DistributionModel::square_tail(), 4.0), 2.0);
  EXPECT_DOUBLE_EQ(budget_box_edge(DistributionModel::rademacher(), 9.0), 1.0);
  EXPECT_DOUBLE_EQ(
      budget_box_edge(DistributionModel::weibull_sym(0.5), 4.0), 16.0);
  EXPECT_DOUBLE_EQ(
      budget_box_edge(DistributionModel::trunc_weibull_sym(0.5, 3.0), 4.0),
      3.0);
}

TEST(Budget, EnclosureContainsRandomFeasiblePoints) {
  // Any feasible point must satisfy both the ball and the box of the
  // enclosure; probe with boundary-scaled random directions.
  for (const auto& [name, model] : catalog()) {
    for (double p : {1.0, 4.0, 16.0}) {
      const auto enc = budget_enclosure(model, p, 6);
      for (std::uint64_t s = 0; s < 20; ++s) {
        RngStream rng(0xe9c1u, s);
        std::vector<double> dir(6);
        for (auto& v : dir) v = std::abs(rng.next_gaussian());
        // Scale onto the boundary by bisection on the cost.
        double tau_hi = 1.0;
        auto cost_at = [&](double tau) {
          std::vector<double> x(dir);
          for (auto& v : x) v *= tau;
          return budget_cost_sum(model, x);
        };
        while (cost_at(tau_hi) <= p && tau_hi < 1e6) tau_hi *= 2.0;
        const double tau = bisect_level(cost_at, p, 0.0, tau_hi);
        double ball = 0.0, box = 0.0;
        for (double v : dir) {
          ball += tau * v * tau * v;
          box = std::max(box, tau * v);
        }
        EXPECT_LE(ball, enc.ball2 * (1.0 + 1e-6)) << name << " p=" << p;
        EXPECT_LE(box, enc.box * (1.0 + 1e-6)) << name << " p=" << p;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Exact solvers

TEST(Ell2Ellinf, ClosedFormWhenBoxSlack) {
  const std::vector<double> a = {2.0, 1.0};
  const auto sol = ell2_ellinf_sup(a, 1.0, 1.0);
  EXPECT_NEAR(sol.value, std::sqrt(5.0), 1e-12);
  EXPECT_EQ(sol.method, SolveMethod::closed_form);
}

TEST(Ell2Ellinf, CapBindsPartially) {
  // max 2 t1 + t2 with t1^2 + t2^2 <= 1.5, box 1: t = (1, sqrt(0.5)).
  const std::vector<double> a = {2.0, 1.0};
  const auto sol = ell2_ellinf_sup(a, 1.5, 1.0);
  EXPECT_NEAR(sol.value, 2.0 + std::sqrt(0.5), 1e-10);
  EXPECT_NEAR(sol.certificate_x[0], 1.0, 1e-9);
  EXPECT_NEAR(sol.certificate_x[1], std::sqrt(0.5), 1e-9);
}

TEST(Ell2Ellinf, AllCapped) {
  const std::vector<double> a = {3.0, 2.0, 1.0};
  const auto sol = ell2_ellinf_sup(a, 10.0, 1.0);
  EXPECT_NEAR(sol.value, 6.0, 1e-12);
}

TEST(Ell2Ellinf, MatchesCappedQuadOnRandoms) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto a = random_sorted(1 + seed % 9, seed);
    const detail::CappedQuadValue light(a);
    RngStream rng(seed, 99);
    const double b = 0.3 + 10.0 * rng.next_uniform();
    const auto sol = ell2_ellinf_sup(a, b, 1.0);
    EXPECT_NEAR(sol.value, light.value(0, b),
                1e-10 * std::max(1.0, sol.value))
        << "seed=" << seed;
    // Certificates of both implementations must be feasible.
    const auto cert = light.certificate(0, b);
    double cost = 0.0, cval = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_LE(cert[i], 1.0 + 1e-12);
      cost += cert[i] * cert[i];
      cval += a[i] * cert[i];
    }
    EXPECT_LE(cost, b * (1.0 + 1e-9));
    EXPECT_NEAR(cval, light.value(0, b), 1e-9 * std::max(1.0, cval));
  }
}

TEST(Ell2Ellinf, RadSandwich) {
  // F = sum_{i <= p} a_i + sqrt(p) sqrt(sum_{i > p} a_i^2); the exact value
  // lies in [F/2, F].
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto a = random_sorted(2 + seed % 12, seed * 3 + 1);
    RngStream rng(seed, 7);
    const double p = 1.0 + 31.0 * rng.next_uniform();
    const double value = ell2_ellinf_sup(a, p, 1.0).value;
    const std::size_t head =
        std::min(a.size(), static_cast<std::size_t>(std::floor(p + 1e-12)));
    double hs = 0.0, t2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i < head) {
        hs += a[i];
      } else {
        t2 += a[i] * a[i];
      }
    }
    const double f = hs + std::sqrt(p) * std::sqrt(t2);
    EXPECT_GE(value, 0.5 * f - 1e-12) << "seed=" << seed;
    EXPECT_LE(value, f + 1e-12) << "seed=" << seed;
  }
}

TEST(MixedBudget, PinnedValues) {
  // r = 1, a = (1, 0), p = 4: one heavy coordinate at 4.
  EXPECT_NEAR(mixed_budget_sup({1.0, 0.0}, 4.0, 1.0, kInf).value, 4.0, 1e-9);
  // r = 1, a = (1, 1), p = 4: heavy at 3.75 plus light sqrt(0.25).
  EXPECT_NEAR(mixed_budget_sup({1.0, 1.0}, 4.0, 1.0, kInf).value, 4.25, 1e-7);
  // Box at 2 stops the heavy coordinate: both at the cap.
  EXPECT_NEAR(mixed_budget_sup({1.0, 1.0}, 4.0, 1.0, 2.0).value, 4.0, 1e-9);
}

TEST(MixedBudget, AgreesWithGenericSolver) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const std::size_t n = 1 + seed % 6;
    const auto a = random_sorted(n, seed * 11);
    const double r = seed % 2 ? 0.7 : 1.0;
    const auto model = r == 1.0 ? DistributionModel::weibull_sym(1.0)
                                : DistributionModel::weibull_sym(0.7);
    for (double p : {1.0, 3.0, 9.0}) {
      const double exact = mixed_budget_sup(a, p, r, kInf).value;
      const double numeric = generic_linear_sup(a, p, model).value;
      // The numeric path is feasible, so it can only undershoot.
      EXPECT_LE(numeric, exact * (1.0 + 1e-8)) << "seed=" << seed;
      EXPECT_GE(numeric, exact * (1.0 - 2e-4)) << "seed=" << seed
                                               << " p=" << p << " n=" << n;
    }
  }
}

// ---------------------------------------------------------------------------
// linear_norm: pinned examples and oracle comparisons

TEST(LinearNorm, PinnedExamples) {
  const ConstraintBudget sq4(4.0, DistributionModel::square_tail());
  EXPECT_NEAR(linear_norm({1.0, 1.0}, sq4).value, 2.0 * std::sqrt(2.0), 1e-10);

  const ConstraintBudget rad1(1.0, DistributionModel::rademacher());
  EXPECT_NEAR(linear_norm({1.0, 1.0}, rad1).value, std::sqrt(2.0), 1e-10);

  const ConstraintBudget rad2(2.0, DistributionModel::rademacher());
  EXPECT_NEAR(linear_norm({1.0, 1.0, 1.0, 1.0}, rad2).value,
              2.0 * std::sqrt(2.0), 1e-10);

  const ConstraintBudget w4(4.0, DistributionModel::weibull_sym(1.0));
  EXPECT_NEAR(linear_norm({1.0, 0.0}, w4).value, 4.0, 1e-9);
  EXPECT_NEAR(linear_norm({1.0, 1.0}, w4).value, 4.25, 1e-7);

  // Scaled two-point law: everything rides at the scale.
  const ConstraintBudget rads(2.0, DistributionModel::rademacher(1.5));
  const auto sol = linear_norm({1.0, -2.0}, rads);
  EXPECT_NEAR(sol.value, 1.5 * 3.0, 1e-12);
  EXPECT_EQ(sol.method, SolveMethod::closed_form);

  // Zero vector: zero norm, zero certificate.
  EXPECT_DOUBLE_EQ(linear_norm({0.0, 0.0}, sq4).value, 0.0);
}

TEST(LinearNorm, SignsAndPermutationsHandled) {
  const ConstraintBudget b(3.0, DistributionModel::weibull_sym(0.7));
  const std::vector<double> a = {0.4, -1.2, 0.0, 2.0};
  const auto sol = linear_norm(a, b);
  expect_certificate_consistent(sol, a, b);
  // Permuting and flipping signs leaves the value unchanged.
  const std::vector<double> perm = {2.0, 0.0, 1.2, -0.4};
  EXPECT_NEAR(linear_norm(perm, b).value, sol.value, 1e-12);
}

TEST(LinearNorm, WithinGridOracleEveryCatalogModel) {
  for (const auto& [name, model] : catalog()) {
    for (std::uint64_t k = 0; k < 10; ++k) {
      RngStream rng(0x0a11u, k);
      const std::size_t n = 1 + rng.next_below(4);
      std::vector<double> a(n);
      for (auto& v : a) v = rng.next_gaussian();
      for (double p : {1.0, 2.0, 4.0, 8.0}) {
        const ConstraintBudget budget(p, model);
        const auto sol = linear_norm(a, budget);
        const auto orc = grid_linear_sup(a, budget);
        EXPECT_GE(sol.value, orc.lower * 0.99)
            << name << " k=" << k << " p=" << p;
        EXPECT_LE(sol.value, orc.upper * 1.01)
            << name << " k=" << k << " p=" << p;
        expect_certificate_consistent(sol, a, budget);
      }
    }
  }
}

TEST(LinearNorm, ScaledModelsWithinGridOracle) {
  for (const auto& [name, model] : scaled_catalog()) {
    for (std::uint64_t k = 0; k < 6; ++k) {
      RngStream rng(0x5ca1u, k);
      const std::size_t n = 1 + rng.next_below(4);
      std::vector<double> a(n);
      for (auto& v : a) v = rng.next_gaussian();
      for (double p : {1.0, 4.0}) {
        const ConstraintBudget budget(p, model);
        const auto sol = linear_norm(a, budget);
        const auto orc = grid_linear_sup(a, budget);
        EXPECT_GE(sol.value, orc.lower * 0.99)
            << name << " k=" << k << " p=" << p;
        EXPECT_LE(sol.value, orc.upper * 1.01)
            << name << " k=" << k << " p=" << p;
        expect_certificate_consistent(sol, a, budget);
      }
    }
  }
}

TEST(LinearNorm, MonotoneInP) {
  for (const auto& [name, model] : catalog()) {
    const auto a = random_vector(5, 0x3030u);
    double prev = 0.0;
    for (double p : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
      const double v = linear_norm(a, ConstraintBudget(p, model)).value;
      EXPECT_GE(v, prev * (1.0 - 1e-9)) << name << " p=" << p;
      prev = v;
    }
  }
}

TEST(LinearNorm, EnvelopesContainValue) {
  const std::vector<std::pair<std::string, DistributionModel>> models = {
      {"square_tail", DistributionModel::square_tail()},
      {"rademacher", DistributionModel::rademacher()},
      {"weibull_0.7", DistributionModel::weibull_sym(0.7)},
      {"trunc_0.7_3", DistributionModel::trunc_weibull_sym(0.7, 3.0)},
  };
  for (const auto& [name, model] : models) {
    for (std::uint64_t k = 0; k < 30; ++k) {
      RngStream rng(0xe4e0u, k);
      const std::size_t n = 1 + rng.next_below(12);
      std::vector<double> a(n);
      for (auto& v : a) v = rng.next_gaussian();
      const double p = 1.0 + 31.0 * rng.next_uniform();
      const ConstraintBudget budget(p, model);
      const auto env = linear_norm_envelope(a, budget);
      const double v = linear_norm(a, budget).value;
      EXPECT_GE(v, env.lower * (1.0 - 1e-9)) << name << " k=" << k;
      EXPECT_LE(v, env.upper * (1.0 + 1e-9)) << name << " k=" << k;
    }
  }
  EXPECT_THROW(
      linear_norm_envelope({1.0}, ConstraintBudget(
                                      2.0, DistributionModel::gaussian())),
      std::invalid_argument);
  EXPECT_THROW(
      linear_norm_envelope({1.0},
                           ConstraintBudget(
                               2.0, DistributionModel::square_tail(2.0))),
      std::invalid_argument);
}

TEST(LinearNorm, NormAxioms) {
  // Positive homogeneity and the triangle inequality, the properties that
  // make the solver output an actual norm in the weights.
  for (const auto& [name, model] : catalog()) {
    for (std::uint64_t k = 0; k < 100; ++k) {
      RngStream rng(0xa110u, k);
      const std::size_t n = 1 + rng.next_below(6);
      std::vector<double> a(n), b(n);
      for (auto& v : a) v = rng.next_gaussian();
      for (auto& v : b) v = rng.next_gaussian();
      const double p = 1.0 + 15.0 * rng.next_uniform();
      const double c = 0.1 + 5.0 * rng.next_uniform();
      const ConstraintBudget budget(p, model);

      const double na = linear_norm(a, budget).value;
      const double nb = linear_norm(b, budget).value;
      std::vector<double> ca(n), ab(n);
      for (std::size_t i = 0; i < n; ++i) {
        ca[i] = c * a[i];
        ab[i] = a[i] + b[i];
      }
      const double nca = linear_norm(ca, budget).value;
      const double nab = linear_norm(ab, budget).value;
      const double scale = std::max({1.0, na, nb});
      EXPECT_NEAR(nca, c * na, 1e-9 * scale * std::max(1.0, c))
          << name << " k=" << k;
      EXPECT_LE(nab, na + nb + 1e-9 * scale) << name << " k=" << k;
    }
  }
}

// ---------------------------------------------------------------------------
// Bilinear norms

TEST(Bilinear, SquareTailClosedForm) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = 2 + seed % 15, m = 2 + (seed * 5) % 15;
    const auto A = generate_matrix(MatrixFamily::random_full, n, m, seed);
    const double p = 1.0 + (seed % 8);
    const ConstraintBudget b(p, DistributionModel::square_tail());
    const auto sol = bilinear_norm(A, b, b);
    const double sigma = testsupport::jacobi_sigma_max(A);
    EXPECT_NEAR(sol.value, p * sigma, 1e-8 * p * sigma) << "seed=" << seed;
    EXPECT_EQ(sol.method, SolveMethod::closed_form);
    EXPECT_LE(sol.feasibility_slack, 1e-9 * p);
    EXPECT_GE(sol.upper, sol.value * (1.0 - 1e-12));
  }
}

TEST(Bilinear, RademacherIdentityExact) {
  // sup sum x_i y_i over two rademacher budgets at p = 2 is 2: caps at one,
  // quadratic budgets 2 per side, Cauchy-Schwarz is attained.
  const auto I4 = CoeffMatrix::from_rows(
      {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}, true, false);
  const ConstraintBudget rad(2.0, DistributionModel::rademacher());
  const auto sol = bilinear_norm(I4, rad, rad);
  EXPECT_NEAR(sol.value, 2.0, 1e-8);
}

TEST(Bilinear, WithinGridOracle2x2) {
  for (const auto& [name, model] : catalog()) {
    for (std::uint64_t k = 0; k < 5; ++k) {
      RngStream rng(0xb17u, k);
      std::vector<double> entries(4);
      for (auto& v : entries) v = rng.next_gaussian();
      const CoeffMatrix A(2, 2, entries);
      for (double p : {1.0, 4.0}) {
        const ConstraintBudget budget(p, model);
        const auto sol = bilinear_norm(A, budget, budget);
        const auto orc = grid_bilinear_sup(A, budget, budget);
        EXPECT_GE(sol.value, orc.lower * 0.99)
            << name << " k=" << k << " p=" << p;
        EXPECT_LE(sol.value, orc.upper * 1.01)
            << name << " k=" << k << " p=" << p;
        EXPECT_LE(std::max(budget_cost_sum(model, sol.certificate_x),
                           budget_cost_sum(model, sol.certificate_y)),
                  p * (1.0 + 1e-9))
            << name;
      }
    }
  }
}

TEST(Bilinear, TransposeSymmetry) {
  const auto A = generate_matrix(MatrixFamily::random_full, 3, 5, 77);
  std::vector<double> tdata(5 * 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 5; ++j) tdata[j * 3 + i] = A(i, j);
  }
  const CoeffMatrix At(5, 3, tdata);
  const ConstraintBudget bx(2.0, DistributionModel::weibull_sym(0.8));
  const ConstraintBudget by(5.0, DistributionModel::gaussian());
  const auto sol = bilinear_norm(A, bx, by);
  const auto tol = bilinear_norm(At, by, bx);
  EXPECT_NEAR(sol.value, tol.value, 1e-6 * std::max(1.0, sol.value));
}

TEST(Bilinear, UpperCompanionDominates) {
  for (const auto& [name, model] : catalog()) {
    const auto A = generate_matrix(MatrixFamily::sparse, 6, 6, 5);
    const ConstraintBudget b(3.0, model);
    const auto sol = bilinear_norm(A, b, b);
    EXPECT_GE(sol.upper, sol.value * (1.0 - 1e-12)) << name;
    EXPECT_GT(sol.value, 0.0) << name;
  }
}

TEST(Bilinear, ZeroMatrix) {
  const CoeffMatrix Z(2, 3, std::vector<double>(6, 0.0));
  const ConstraintBudget b(2.0, DistributionModel::gaussian());
  const auto sol = bilinear_norm(Z, b, b);
  EXPECT_DOUBLE_EQ(sol.value, 0.0);
}

// ---------------------------------------------------------------------------
// SquareTail exactness at scale (criterion-2 shape)

TEST(LinearNorm, SquareTailExactUpTo16) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    RngStream rng(0x59a2u, seed);
    const std::size_t n = 1 + rng.next_below(16);
    std::vector<double> a(n);
    for (auto& v : a) v = rng.next_gaussian();
    const double p = 1.0 + 15.0 * rng.next_uniform();
    double s2 = 0.0;
    for (double v : a) s2 += v * v;
    const double want = std::sqrt(p) * std::sqrt(s2);
    const auto sol =
        linear_norm(a, ConstraintBudget(p, DistributionModel::square_tail()));
    EXPECT_NEAR(sol.value, want, 1e-8 * want) << "seed=" << seed;
  }
}
