#pragma once

// Brute-force reference computations, kept deliberately independent of the
// solver module: the only shared ingredient is the budget cost function, so
// a bug in the water-filling machinery cannot hide here. Everything in this
// header is exponential or grid-based and meant for small instances inside
// tests and the verification harness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "quadchaos/matrix.hpp"
#include "quadchaos/norms.hpp"

namespace quadchaos {

struct OracleResult {
  double value = 0.0;  // exact for enumeration, best grid point otherwise
  double lower = 0.0;  // attained, hence a true lower bound
  double upper = 0.0;  // certified bound on the true supremum
  std::uint64_t enumeration_size = 0;
  double grid_resolution = 0.0;  // absolute grid step, 0 for exact results
};

namespace detail {

// The grid arguments below snap coordinates down onto grid points without
// leaving the budget set. The two-point law above unit scale defeats that:
// its cost collapses to zero past the unit interval, every interior point is
// dominated, and the solver already covers it in closed form, so the grid
// refuses it rather than pretending to add information.
inline void require_monotone_cost(const DistributionModel& model) {
  if (model.kind() == DistKind::rademacher && model.scale() > 1.0) {
    throw std::invalid_argument(
        "grid oracle needs a monotone budget cost; the two-point law above "
        "unit scale is handled in closed form by the solver");
  }
}

struct BudgetGrid {
  std::vector<double> value;  // ascending, a Pareto front of the raw grid
  std::vector<double> cost;   // matching per-coordinate costs, ascending
  double delta = 0.0;
  double edge = 0.0;

  // Largest affordable grid value for a residual budget, -1 if none.
  int max_affordable(double budget) const {
    if (budget < 0.0) return -1;
    const auto it = std::upper_bound(cost.begin(), cost.end(), budget);
    return static_cast<int>(it - cost.begin()) - 1;
  }
};

// Uniform grid over [0, edge] reduced to its Pareto front (cost and value
// both ascending). The hybrid cost is quadratic up to one and follows the
// tail exponent beyond, and for scales above one the tail branch restarts
// BELOW the quadratic endpoint; an extra point just past the handover covers
// the bottom of that step. Snapping any feasible coordinate down to the
// nearest front point on its own branch then keeps feasibility and loses at
// most delta, which is what the certified upper bounds rely on.
inline BudgetGrid build_budget_grid(const DistributionModel& model, double p,
                                    int steps = 100) {
  require_monotone_cost(model);
  BudgetGrid g;
  g.edge = budget_box_edge(model, p);
  g.delta = g.edge / steps;
  std::vector<std::pair<double, double>> pts;  // (cost, value)
  pts.reserve(steps + 2);
  auto add = [&](double t) {
    const double c = budget_cost(model, t);
    if (c <= p) pts.emplace_back(c, t);
  };
  for (int i = 0; i <= steps; ++i) {
    add(g.edge * static_cast<double>(i) / steps);
  }
  if (g.edge > 1.0) add(std::nextafter(1.0, 2.0));
  std::sort(pts.begin(), pts.end());
  g.value.reserve(pts.size());
  g.cost.reserve(pts.size());
  for (const auto& [c, t] : pts) {
    if (g.value.empty() || t > g.value.back()) {
      g.cost.push_back(c);
      g.value.push_back(t);
    }
  }
  return g;
}

}  // namespace detail

// Exhaustive grid search for the linear norm, n <= 4. Coordinates range over
// multiples of one percent of the single-coordinate edge; the search is
// exact on that grid, and snapping an optimal point down to the grid loses
// at most delta per coordinate, so
//   grid best <= sup <= grid best + delta * sum |a_i|.
inline OracleResult grid_linear_sup(const std::vector<double>& a,
                                    const ConstraintBudget& budget,
                                    int steps = 100) {
  if (a.size() > 4) {
    throw std::invalid_argument("grid oracle supports at most 4 coordinates");
  }
  const auto grid = detail::build_budget_grid(budget.model, budget.p, steps);
  OracleResult res;
  double abs_sum = 0.0;
  std::vector<double> w(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    w[i] = std::abs(a[i]);  // signs fold away because the budget is even
    abs_sum += w[i];
  }

  // Depth-first over coordinates with running-cost pruning and an
  // admissible optimistic bound on the unexplored suffix.
  std::vector<double> suffix_bound(a.size() + 1, 0.0);
  for (std::size_t i = a.size(); i-- > 0;) {
    suffix_bound[i] = suffix_bound[i + 1] + w[i] * grid.edge;
  }

  double best = 0.0;
  std::uint64_t evals = 0;
  auto dfs = [&](auto&& self, std::size_t i, double cost, double value) -> void {
    if (i == a.size()) {
      ++evals;
      best = std::max(best, value);
      return;
    }
    if (value + suffix_bound[i] < best) return;
    for (std::size_t k = 0; k < grid.value.size(); ++k) {
      const double c = cost + grid.cost[k];
      if (c > budget.p) break;
      self(self, i + 1, c, value + w[i] * grid.value[k]);
    }
  };
  dfs(dfs, 0, 0.0, 0.0);

  res.value = res.lower = best;
  res.upper = best + grid.delta * abs_sum;
  res.enumeration_size = evals;
  res.grid_resolution = grid.delta;
  return res;
}

// Exhaustive grid search for the bilinear norm of a 2x2 matrix. The y side
// is enumerated over the full signed grid; for each y the x side reduces to
// one pass over the first coordinate with the second filled greedily, which
// is exact because the budget is separable and even. Snapping an optimal
// pair down to the grids loses at most delta_x per x coordinate and delta_y
// per y coordinate, giving the certified upper bound.
inline OracleResult grid_bilinear_sup(const CoeffMatrix& A,
                                      const ConstraintBudget& bx,
                                      const ConstraintBudget& by,
                                      int steps = 100) {
  if (A.rows() != 2 || A.cols() != 2) {
    throw std::invalid_argument("grid oracle supports 2x2 matrices only");
  }
  const auto gx = detail::build_budget_grid(bx.model, bx.p, steps);
  const auto gy = detail::build_budget_grid(by.model, by.p, steps);

  double best = 0.0;
  std::uint64_t evals = 0;
  for (std::size_t j1 = 0; j1 < gy.value.size(); ++j1) {
    for (int s1 = -1; s1 <= 1; s1 += 2) {
      const double y1 = s1 * gy.value[j1];
      const double rem_y = by.p - gy.cost[j1];
      for (std::size_t j2 = 0; j2 < gy.value.size(); ++j2) {
        if (gy.cost[j2] > rem_y) break;
        for (int s2 = -1; s2 <= 1; s2 += 2) {
          const double y2 = s2 * gy.value[j2];
          // Optimal x signs align with v = A y, so x reduces to magnitudes.
          const double v1 = std::abs(A(0, 0) * y1 + A(0, 1) * y2);
          const double v2 = std::abs(A(1, 0) * y1 + A(1, 1) * y2);
          for (std::size_t i1 = 0; i1 < gx.value.size(); ++i1) {
            const int i2 = gx.max_affordable(bx.p - gx.cost[i1]);
            if (i2 < 0) break;
            ++evals;
            const double cand =
                v1 * gx.value[i1] + v2 * gx.value[static_cast<std::size_t>(i2)];
            best = std::max(best, cand);
          }
        }
      }
    }
  }

  OracleResult res;
  res.value = res.lower = best;
  res.upper = best + A.abs_sum() * (gx.delta * gy.edge + gy.delta * gx.edge);
  res.enumeration_size = evals;
  res.grid_resolution = std::max(gx.delta, gy.delta);
  return res;
}

namespace detail {

// Shared two-pass moment accumulator: callers enumerate values of |S| and
// feed them through once to locate the maximum, then once to accumulate
// rescaled powers. Keeps |S|^p finite for p in the hundreds.
template <typename Enumerate>
double graycode_moment(double p, std::uint64_t count, Enumerate&& enumerate) {
  double smax = 0.0;
  enumerate([&](double s) { smax = std::max(smax, std::abs(s)); });
  if (smax == 0.0) return 0.0;
  double acc = 0.0;
  enumerate([&](double s) { acc += std::pow(std::abs(s) / smax, p); });
  return smax * std::pow(acc / static_cast<double>(count), 1.0 / p);
}

}  // namespace detail

// Exact p-th moment (its p-th root) of sum_ij a_ij e_i f_j over independent
// uniform signs e, f, by full enumeration. rows + cols <= 24. The outer loop
// walks e in Gray-code order updating the column image in O(cols); the inner
// loop walks f updating the scalar sum in O(1).
inline double rademacher_exact_moment_decoupled(const CoeffMatrix& A,
                                                double p) {
  const std::size_t n = A.rows(), m = A.cols();
  if (n + m > 24) {
    throw std::invalid_argument("exact sign enumeration capped at 24 signs");
  }
  if (!(p >= 1.0)) throw std::invalid_argument("moment order must be >= 1");

  const std::uint64_t en = 1ull << n, em = 1ull << m;
  auto enumerate = [&](auto&& emit) {
    std::vector<double> eps(n, 1.0);
    std::vector<double> v(m, 0.0);  // v_j = sum_i a_ij eps_i
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) v[j] += A(i, j);
    }
    for (std::uint64_t ge = 0; ge < en; ++ge) {
      if (ge > 0) {
        const std::size_t i = static_cast<std::size_t>(__builtin_ctzll(ge));
        eps[i] = -eps[i];
        for (std::size_t j = 0; j < m; ++j) v[j] += 2.0 * eps[i] * A(i, j);
      }
      std::vector<double> eta(m, 1.0);
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += v[j];
      for (std::uint64_t gf = 0; gf < em; ++gf) {
        if (gf > 0) {
          const std::size_t j = static_cast<std::size_t>(__builtin_ctzll(gf));
          eta[j] = -eta[j];
          s += 2.0 * eta[j] * v[j];
        }
        emit(s);
      }
    }
  };
  return detail::graycode_moment(p, en * em, enumerate);
}

// Exact p-th moment (its p-th root) of sum_{i != j} a_ij e_i e_j over one
// set of uniform signs, for symmetric zero-diagonal coefficients. n <= 24.
// Flipping sign k changes the sum by -4 e_k g_k with g_k the k-th row image,
// and the row images themselves shift in O(n).
inline double rademacher_exact_moment_undecoupled(const CoeffMatrix& A,
                                                  double p) {
  if (!A.symmetric() || !A.zero_diag()) {
    throw std::invalid_argument(
        "undecoupled enumeration needs symmetric zero-diagonal coefficients");
  }
  const std::size_t n = A.rows();
  if (n > 24) {
    throw std::invalid_argument("exact sign enumeration capped at 24 signs");
  }
  if (!(p >= 1.0)) throw std::invalid_argument("moment order must be >= 1");

  const std::uint64_t en = 1ull << n;
  auto enumerate = [&](auto&& emit) {
    std::vector<double> eps(n, 1.0);
    std::vector<double> g(n, 0.0);  // g_k = sum_j a_kj eps_j
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t j = 0; j < n; ++j) g[k] += A(k, j);
      s += g[k];  // counts each pair twice, matching sum_{i != j}
    }
    for (std::uint64_t gc = 0; gc < en; ++gc) {
      if (gc > 0) {
        const std::size_t k = static_cast<std::size_t>(__builtin_ctzll(gc));
        const double old = eps[k];
        s -= 4.0 * old * g[k];
        eps[k] = -old;
        for (std::size_t j = 0; j < n; ++j) {
          g[j] += 2.0 * eps[k] * A(j, k);
        }
      }
      emit(s);
    }
  };
  return detail::graycode_moment(p, en, enumerate);
}

// Unified front for the sign enumerations, reporting the enumeration size.
inline OracleResult rademacher_exact_moment(const CoeffMatrix& A, double p,
                                            bool decoupled) {
  OracleResult res;
  if (decoupled) {
    res.value = rademacher_exact_moment_decoupled(A, p);
    res.enumeration_size = 1ull << (A.rows() + A.cols());
  } else {
    res.value = rademacher_exact_moment_undecoupled(A, p);
    res.enumeration_size = 1ull << A.rows();
  }
  res.lower = res.upper = res.value;
  return res;
}

// Unified front for the grid searches. resolution is the grid step as a
// fraction of the feasible box edge, at most 0.01.
inline OracleResult grid_norm_oracle(const std::vector<double>& a,
                                     const ConstraintBudget& budget,
                                     double resolution = 0.01) {
  if (!(resolution > 0.0) || resolution > 0.01) {
    throw std::invalid_argument("grid resolution must be in (0, 0.01]");
  }
  return grid_linear_sup(a, budget,
                         static_cast<int>(std::ceil(1.0 / resolution)));
}

inline OracleResult grid_norm_oracle(const CoeffMatrix& A,
                                     const ConstraintBudget& bx,
                                     const ConstraintBudget& by,
                                     double resolution = 0.01) {
  if (!(resolution > 0.0) || resolution > 0.01) {
    throw std::invalid_argument("grid resolution must be in (0, 0.01]");
  }
  return grid_bilinear_sup(A, bx, by,
                           static_cast<int>(std::ceil(1.0 / resolution)));
}

}  // namespace quadchaos
