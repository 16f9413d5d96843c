#pragma once

// Constrained-supremum norms of vectors and matrices.
//
// The linear norm of a vector a under a model X at level p is
//
//   sup { sum_i a_i x_i  :  sum_i cost(x_i) <= p },
//
// where cost is the per-coordinate budget derived from the model tail
// (quadratic inside the unit interval, the tail exponent outside). The
// bilinear norm runs the same budget independently over the two sides of
// x^T A y. Each solver returns a feasible certificate together with the
// value, so every reported number is attained by an explicit point.
//
// Dispatch: models whose budget has closed water-filling structure are
// solved exactly (pure quadratic, quadratic with a box, quadratic plus a
// concave power law). Everything else goes through a dual water-filling
// routine on the budget-split formulation, followed by a primal repair and,
// at small dimension, a pairwise polish. The truncated power-law family is
// budgeted through the raw power law with a hard box rather than its exact
// tail exponent; the exact exponent diverges at the cutoff and would pin
// the supremum away from it, while the power-law surrogate is the set the
// closed-form estimates describe. The oracle module prices feasibility with
// the same cost function, so the two routes stay comparable.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "quadchaos/distribution.hpp"
#include "quadchaos/matrix.hpp"
#include "quadchaos/numerics.hpp"
#include "quadchaos/rng.hpp"

namespace quadchaos {

enum class SolveMethod { closed_form, kkt_exact, dual_numeric, alternating };

inline const char* solve_method_name(SolveMethod m) {
  switch (m) {
    case SolveMethod::closed_form: return "closed_form";
    case SolveMethod::kkt_exact: return "kkt_exact";
    case SolveMethod::dual_numeric: return "dual_numeric";
    case SolveMethod::alternating: return "alternating";
  }
  return "?";
}

struct ConstraintBudget {
  double p;
  DistributionModel model;

  ConstraintBudget(double p_, DistributionModel model_)
      : p(p_), model(std::move(model_)) {
    if (!(p >= 1.0) || !std::isfinite(p)) {
      throw std::invalid_argument("budget level p must be finite and >= 1");
    }
  }
};

struct NormSolution {
  double value = 0.0;
  std::vector<double> certificate_x;
  std::vector<double> certificate_y;  // bilinear solutions only
  SolveMethod method = SolveMethod::closed_form;
  double feasibility_slack = 0.0;  // max(0, cost(certificate) - p)
  double upper = 0.0;  // certified upper companion; equals value on exact paths
};

// ---------------------------------------------------------------------------
// Budget cost

// Per-coordinate budget cost for the model. Equals nhat everywhere except
// the truncated power-law family (see the header comment) and tabulated
// tails, where coordinates outside the tabulated range are priced +inf
// instead of raising, so optimizers can probe freely.
inline double budget_cost(const DistributionModel& model, double t) {
  const double a = std::abs(t);
  if (a <= 1.0) return a * a;
  switch (model.kind()) {
    case DistKind::trunc_weibull_sym: {
      const double u = a / model.scale();
      if (u > model.cutoff()) return kInf;
      return std::pow(u, model.weibull_r());
    }
    case DistKind::custom_tail: {
      const double u = a / model.scale();
      const auto& tab = model.table();
      if (u < tab.t.front() || u > tab.t.back()) return kInf;
      return model.tail_exponent(a);
    }
    default:
      return model.tail_exponent(a);
  }
}

inline double budget_cost_sum(const DistributionModel& model,
                              const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) {
    const double c = budget_cost(model, v);
    if (c == kInf) return kInf;
    s += c;
  }
  return s;
}

// Largest single affordable coordinate, sup { t >= 0 : cost(t) <= p }.
inline double budget_box_edge(const DistributionModel& model, double p) {
  if (!(p >= 0.0)) throw std::invalid_argument("budget level must be >= 0");
  const double s = model.scale();
  const double quad_edge = std::min(1.0, std::sqrt(p));
  double heavy_edge = 0.0;
  switch (model.kind()) {
    case DistKind::square_tail:
      heavy_edge = s * std::sqrt(p);
      break;
    case DistKind::rademacher:
      heavy_edge = s;  // the tail is free up to s and impossible beyond
      break;
    case DistKind::weibull_sym:
      heavy_edge = s * std::pow(p, 1.0 / model.weibull_r());
      break;
    case DistKind::trunc_weibull_sym:
      heavy_edge =
          s * std::min(model.cutoff(), std::pow(p, 1.0 / model.weibull_r()));
      break;
    case DistKind::gaussian:
    case DistKind::custom_tail: {
      double hi = 2.0;
      while (budget_cost(model, hi) <= p && hi < 1e12) hi *= 2.0;
      heavy_edge = bisect_level(
          [&](double t) { return budget_cost(model, t); }, p, 1.0, hi);
      break;
    }
  }
  return std::max(quad_edge, heavy_edge);
}

// Smallest product of a centered euclidean ball and a box that contains the
// budget set: ||x||_2^2 <= ball2 and ||x||_inf <= box. Used to price the
// bilinear relaxation. n is the ambient dimension (the heavy-coordinate
// count bound needs it for degenerate tails).
struct BudgetEnclosure {
  double ball2 = 0.0;
  double box = 0.0;
};

inline BudgetEnclosure budget_enclosure(const DistributionModel& model,
                                        double p, std::size_t n) {
  const double s = model.scale();
  const double c = budget_box_edge(model, p);
  double ball2;
  switch (model.kind()) {
    case DistKind::square_tail:
      ball2 = s == 1.0 ? p : p * (1.0 + s * s);
      break;
    case DistKind::gaussian:
      // The gaussian tail exponent dominates t^2/2, so heavy coordinates
      // cost at least t^2 / (2 s^2).
      ball2 = p * std::max(1.0, 2.0 * s * s);
      break;
    case DistKind::rademacher:
      ball2 = s <= 1.0 ? p : p + static_cast<double>(n) * s * s;
      break;
    case DistKind::weibull_sym: {
      const double r = model.weibull_r();
      ball2 = p + s * s * std::pow(p, 2.0 / r);
      break;
    }
    case DistKind::trunc_weibull_sym: {
      const double r = model.weibull_r();
      const double cap = model.cutoff();
      ball2 = p + s * s *
                      std::min(std::pow(cap, 2.0 - r) * p,
                               std::pow(p, 2.0 / r));
      break;
    }
    case DistKind::custom_tail: {
      const double nu = budget_cost(model, std::nextafter(1.0, 2.0));
      const double count =
          nu > 1e-12 ? std::min(static_cast<double>(n), p / nu)
                     : static_cast<double>(n);
      ball2 = p + count * c * c;
      break;
    }
    default:
      ball2 = p + static_cast<double>(n) * c * c;
      break;
  }
  return {ball2, c};
}

// ---------------------------------------------------------------------------
// Exact water-filling pieces

namespace detail {

inline void require_sorted_nonneg(const std::vector<double>& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] >= 0.0) || !std::isfinite(a[i])) {
      throw std::invalid_argument("weights must be finite and >= 0");
    }
    if (i > 0 && a[i] > a[i - 1]) {
      throw std::invalid_argument("weights must be sorted nonincreasing");
    }
  }
}

// Exact value of sup { sum a_i t_i : sum t_i^2 <= b, 0 <= t_i <= 1 } over
// the suffix a[start..], via prefix sums. O(n) per query; used inside the
// one-dimensional budget-split searches where the bisection solver would be
// too slow. The two implementations are cross-checked in the tests.
class CappedQuadValue {
 public:
  explicit CappedQuadValue(const std::vector<double>& a) : a_(a) {
    pref_.resize(a.size() + 1, 0.0);
    pref2_.resize(a.size() + 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      pref_[i + 1] = pref_[i] + a[i];
      pref2_[i + 1] = pref2_[i] + a[i] * a[i];
    }
  }

  double value(std::size_t start, double b) const {
    const std::size_t n = a_.size();
    if (start >= n || b <= 0.0) return 0.0;
    const std::size_t len = n - start;
    if (b >= static_cast<double>(len)) return pref_[n] - pref_[start];
    // k coordinates pinned at the box, the rest proportional to a.
    std::size_t k = 0;
    for (; k < len; ++k) {
      const double rem = b - static_cast<double>(k);
      if (rem <= 0.0) break;
      const double tail2 = pref2_[n] - pref2_[start + k];
      if (tail2 <= 0.0) break;
      const double mu = std::sqrt(tail2 / rem);
      const bool upper_ok = k == 0 || a_[start + k - 1] >= mu;
      const bool lower_ok = a_[start + k] <= mu;
      if (upper_ok && lower_ok) {
        return (pref_[start + k] - pref_[start]) + std::sqrt(rem * tail2);
      }
      if (!upper_ok) break;  // mu too large already; no further k works
    }
    // All weight sits in the first k coordinates.
    const std::size_t kk = std::min(
        len, static_cast<std::size_t>(std::floor(b + 1e-12)));
    double v = pref_[start + kk] - pref_[start];
    const double rem = b - static_cast<double>(kk);
    if (kk < len && rem > 0.0) {
      v += a_[start + kk] * std::sqrt(rem);
    }
    return v;
  }

  // Reconstructs an exactly feasible maximizer for the same subproblem.
  std::vector<double> certificate(std::size_t start, double b) const {
    const std::size_t n = a_.size();
    std::vector<double> t(n - std::min(start, n), 0.0);
    if (start >= n || b <= 0.0) return t;
    const std::size_t len = n - start;
    if (b >= static_cast<double>(len)) {
      for (std::size_t i = 0; i < len; ++i) t[i] = a_[start + i] > 0.0 ? 1.0 : 0.0;
      return t;
    }
    for (std::size_t k = 0; k <= len; ++k) {
      const double rem = b - static_cast<double>(k);
      if (rem < 0.0) break;
      const double tail2 = pref2_[n] - pref2_[start + k];
      if (k == len || tail2 <= 0.0 || rem == 0.0) {
        const std::size_t kk =
            std::min(len, static_cast<std::size_t>(std::floor(b + 1e-12)));
        for (std::size_t i = 0; i < kk; ++i) t[i] = 1.0;
        const double left = b - static_cast<double>(kk);
        if (kk < len && left > 0.0) t[kk] = std::sqrt(left);
        return t;
      }
      const double mu = std::sqrt(tail2 / rem);
      const bool upper_ok = k == 0 || a_[start + k - 1] >= mu;
      const bool lower_ok = a_[start + k] <= mu;
      if (upper_ok && lower_ok) {
        for (std::size_t i = 0; i < k; ++i) t[i] = 1.0;
        for (std::size_t i = k; i < len; ++i) t[i] = a_[start + i] / mu;
        return t;
      }
      if (!upper_ok) break;
    }
    const std::size_t kk =
        std::min(len, static_cast<std::size_t>(std::floor(b + 1e-12)));
    for (std::size_t i = 0; i < kk; ++i) t[i] = 1.0;
    const double left = b - static_cast<double>(kk);
    if (kk < len && left > 0.0) t[kk] = std::sqrt(left);
    return t;
  }

 private:
  const std::vector<double>& a_;
  std::vector<double> pref_, pref2_;
};

}  // namespace detail

// sup { sum a_i t_i : sum t_i^2 <= p, 0 <= t_i <= cap } for a sorted
// nonincreasing nonnegative. KKT water-filling t_i = min(cap, a_i / mu) with
// the multiplier located by bisection, then an exact rescale of the free
// coordinates so the certificate is feasible to machine precision.
inline NormSolution ell2_ellinf_sup(const std::vector<double>& a, double p,
                                    double cap) {
  detail::require_sorted_nonneg(a);
  if (!(p >= 0.0) || !std::isfinite(p)) {
    throw std::invalid_argument("quadratic budget must be finite and >= 0");
  }
  if (!(cap > 0.0)) throw std::invalid_argument("cap must be positive");

  NormSolution sol;
  sol.method = SolveMethod::kkt_exact;
  sol.certificate_x.assign(a.size(), 0.0);
  if (a.empty() || a[0] == 0.0 || p == 0.0) {
    sol.upper = sol.value;
    return sol;
  }

  const double norm2 = std::sqrt(
      std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
  std::size_t n_pos = 0;
  while (n_pos < a.size() && a[n_pos] > 0.0) ++n_pos;

  const double mu0 = norm2 / std::sqrt(p);
  if (a[0] / mu0 <= cap) {
    // The box never binds; pure Cauchy-Schwarz point.
    for (std::size_t i = 0; i < a.size(); ++i) {
      sol.certificate_x[i] = a[i] / mu0;
    }
    sol.value = std::sqrt(p) * norm2;
    sol.method = SolveMethod::closed_form;
  } else if (static_cast<double>(n_pos) * cap * cap <= p) {
    // Budget slack: every active coordinate sits on the box.
    double v = 0.0;
    for (std::size_t i = 0; i < n_pos; ++i) {
      sol.certificate_x[i] = cap;
      v += a[i] * cap;
    }
    sol.value = v;
  } else {
    auto weight = [&](double mu) {
      double s = 0.0;
      for (std::size_t i = 0; i < n_pos; ++i) {
        const double t = std::min(cap, a[i] / mu);
        s += t * t;
      }
      return s;
    };
    const double mu_lo = std::min(a[n_pos - 1] / cap, mu0) * 0.5;
    const double mu = bisect_decreasing_root(
        [&](double m) { return weight(m) - p; }, mu_lo, mu0);
    // Snap the capped prefix, then rescale the free coordinates so the
    // quadratic budget is met exactly.
    std::size_t k = 0;
    while (k < n_pos && a[k] / mu >= cap * (1.0 - 1e-12)) ++k;
    while (k > 0 &&
           static_cast<double>(k) * cap * cap >= p) {
      --k;  // keep the capped block strictly affordable
    }
    const double rem = p - static_cast<double>(k) * cap * cap;
    double tail2 = 0.0;
    for (std::size_t i = k; i < n_pos; ++i) tail2 += a[i] * a[i];
    double v = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      sol.certificate_x[i] = cap;
      v += a[i] * cap;
    }
    if (tail2 > 0.0 && rem > 0.0) {
      const double mu_exact = std::sqrt(tail2 / rem);
      for (std::size_t i = k; i < n_pos; ++i) {
        const double t = std::min(cap, a[i] / mu_exact);
        sol.certificate_x[i] = t;
        v += a[i] * t;
      }
    }
    sol.value = v;
  }

  double cost = 0.0;
  for (double t : sol.certificate_x) cost += t * t;
  sol.feasibility_slack = std::max(0.0, cost - p);
  sol.upper = sol.value;
  return sol;
}

// sup { sum a_i t_i : sum f(t_i) <= p, 0 <= t_i <= cap } where f is t^2 on
// [0,1] and t^r above, r in (0,1]. cap may be +inf. The concave power law
// concentrates: an optimal point has some prefix pinned at the cap, at most
// one partial heavy coordinate, and a capped-quadratic tail. The heavy
// count is enumerated exactly; the partial coordinate's budget is a
// one-dimensional search.
inline NormSolution mixed_budget_sup(const std::vector<double>& a, double p,
                                     double r, double cap) {
  detail::require_sorted_nonneg(a);
  if (!(p >= 1.0)) throw std::invalid_argument("budget level must be >= 1");
  if (!(r > 0.0) || !(r <= 1.0)) {
    throw std::invalid_argument("power-law exponent must be in (0, 1]");
  }
  if (!(cap > 1.0)) throw std::invalid_argument("cap must exceed 1");

  NormSolution sol;
  sol.method = SolveMethod::kkt_exact;
  sol.certificate_x.assign(a.size(), 0.0);
  if (a.empty() || a[0] == 0.0) {
    sol.upper = sol.value;
    return sol;
  }

  const detail::CappedQuadValue light(a);
  const double cap_cost = std::isfinite(cap) ? std::pow(cap, r) : kInf;

  struct Plan {
    double value = -1.0;
    std::size_t full = 0;    // coordinates pinned at the cap
    double partial = 0.0;    // heavy budget of the next coordinate, 0 if none
  };
  Plan best;

  auto consider = [&](std::size_t full, double partial_u) {
    // full is 0 whenever cap_cost is infinite; avoid the 0 * inf = NaN trap.
    const double base_cost =
        (full > 0 ? static_cast<double>(full) * cap_cost : 0.0) + partial_u;
    if (base_cost > p * (1.0 + 1e-12)) return;
    double v = 0.0;
    for (std::size_t i = 0; i < full && i < a.size(); ++i) v += a[i] * cap;
    std::size_t next = full;
    if (partial_u > 0.0 && next < a.size()) {
      v += a[next] * std::pow(partial_u, 1.0 / r);
      ++next;
    }
    v += light.value(next, p - base_cost);
    if (v > best.value) best = {v, full, partial_u};
  };

  consider(0, 0.0);  // purely light
  const std::size_t kmax =
      std::isfinite(cap)
          ? static_cast<std::size_t>(
                std::min(static_cast<double>(a.size()),
                         std::floor(p / cap_cost + 1e-12)))
          : 0;
  for (std::size_t k = 1; k <= kmax; ++k) consider(k, 0.0);
  for (std::size_t k = 0; k <= kmax && k < a.size(); ++k) {
    const double rem =
        p - (k > 0 ? static_cast<double>(k) * cap_cost : 0.0);
    const double u_hi = std::min(rem, cap_cost);
    if (!(u_hi >= 1.0)) continue;
    const double ak = a[k];
    auto objective = [&](double u) {
      return ak * std::pow(u, 1.0 / r) + light.value(k + 1, rem - u);
    };
    auto [u_best, v_best] = grid_refine_max(objective, 1.0, u_hi);
    (void)v_best;
    consider(k, u_best);
    consider(k, 1.0);
    consider(k, u_hi);
  }

  // Materialize the winning plan.
  double used = 0.0;
  double v = 0.0;
  std::size_t next = 0;
  for (; next < best.full && next < a.size(); ++next) {
    sol.certificate_x[next] = cap;
    used += cap_cost;
    v += a[next] * cap;
  }
  if (best.partial > 0.0 && next < a.size()) {
    const double t = std::pow(best.partial, 1.0 / r);
    sol.certificate_x[next] = t;
    used += best.partial;
    v += a[next] * t;
    ++next;
  }
  const auto tail = light.certificate(next, p - used);
  for (std::size_t i = 0; i < tail.size(); ++i) {
    sol.certificate_x[next + i] = tail[i];
    v += a[next + i] * tail[i];
  }
  sol.value = v;

  double cost = used;
  for (std::size_t i = next; i < sol.certificate_x.size(); ++i) {
    cost += sol.certificate_x[i] * sol.certificate_x[i];
  }
  sol.feasibility_slack = std::max(0.0, cost - p);
  sol.upper = sol.value;
  return sol;
}

// ---------------------------------------------------------------------------
// Generic dual water-filling path

namespace detail {

// Candidate point of a per-coordinate maximization: budget share s buys the
// coordinate value t.
struct BranchPoint {
  double s = 0.0;
  double t = 0.0;
  double gain = 0.0;  // w * t - mu * s at the multiplier that produced it
};

enum class TailShape { none, convex_smooth, concave_smooth, piecewise_linear };

// Heavy-branch description for the generic path: affordable coordinate
// values above 1 with their costs, sampled once per solve.
struct TailBranch {
  TailShape shape = TailShape::none;
  std::vector<double> t;  // increasing
  std::vector<double> c;  // increasing, c.back() <= p
  double edge = 0.0;

  bool empty() const { return shape == TailShape::none || t.empty(); }
};

inline TailBranch build_tail_branch(const DistributionModel& model, double p) {
  TailBranch branch;
  const double lo = std::nextafter(1.0, 2.0);
  if (budget_cost(model, lo) > p) return branch;
  const double edge = budget_box_edge(model, p);
  if (!(edge > 1.0)) return branch;
  branch.edge = edge;

  switch (model.kind()) {
    case DistKind::gaussian:
    case DistKind::square_tail:
      branch.shape = TailShape::convex_smooth;
      break;
    case DistKind::weibull_sym:
    case DistKind::trunc_weibull_sym:
      branch.shape = TailShape::concave_smooth;
      break;
    case DistKind::custom_tail:
      branch.shape = TailShape::piecewise_linear;
      break;
    default:
      branch.shape = TailShape::convex_smooth;
      break;
  }

  if (branch.shape == TailShape::piecewise_linear) {
    const auto& tab = model.table();
    const double s = model.scale();
    branch.t.push_back(lo);
    branch.c.push_back(budget_cost(model, lo));
    for (std::size_t i = 0; i < tab.t.size(); ++i) {
      const double tv = tab.t[i] * s;
      if (tv <= lo || tv >= edge) continue;
      branch.t.push_back(tv);
      branch.c.push_back(budget_cost(model, tv));
    }
    branch.t.push_back(edge);
    branch.c.push_back(budget_cost(model, edge));
  } else {
    constexpr int kKnots = 257;
    const double ratio = edge / lo;
    for (int i = 0; i < kKnots; ++i) {
      const double tv =
          lo * std::pow(ratio, static_cast<double>(i) / (kKnots - 1));
      branch.t.push_back(tv);
      branch.c.push_back(budget_cost(model, tv));
    }
  }
  return branch;
}

// argmax over s >= 0 of w * h(s) - mu * s for one coordinate, where h is
// the affordable-value function of the budget. Returns the best candidate;
// exact for the quadratic branch and the piecewise-linear tails, knot-level
// plus golden refinement for smooth tails.
inline BranchPoint coordinate_argmax(const DistributionModel& model,
                                     const TailBranch& branch, double w,
                                     double mu, double p) {
  BranchPoint best;  // s = 0, gain 0 baseline
  // Quadratic branch: value w sqrt(s) - mu s, stationary at sqrt(s) = w/(2mu).
  {
    double tq = std::min(1.0, w / (2.0 * mu));
    double sq = std::min(tq * tq, p);
    tq = std::sqrt(sq);
    const double gain = w * tq - mu * sq;
    if (gain > best.gain) best = {sq, tq, gain};
  }
  if (!branch.empty()) {
    auto consider_t = [&](double tv) {
      const double c = budget_cost(model, tv);
      if (!(c <= p)) return;
      const double gain = w * tv - mu * c;
      if (gain > best.gain) best = {c, tv, gain};
    };
    switch (branch.shape) {
      case TailShape::concave_smooth:
        // Linear gain minus a concave cost is convex in t: ends only.
        consider_t(branch.t.front());
        consider_t(branch.edge);
        break;
      case TailShape::piecewise_linear:
        for (double tv : branch.t) consider_t(tv);
        break;
      case TailShape::convex_smooth: {
        // Concave objective in t; find the bracketing knots by the sign of
        // the discrete slope, then refine on the true cost.
        const auto& ts = branch.t;
        const auto& cs = branch.c;
        std::size_t lo = 0, hi = ts.size() - 1;
        auto slope_up = [&](std::size_t k) {
          // d/dt (w t - mu c) > 0 across [k, k+1]?
          return w * (ts[k + 1] - ts[k]) - mu * (cs[k + 1] - cs[k]) > 0.0;
        };
        if (!slope_up(0)) {
          consider_t(ts.front());
        } else if (slope_up(ts.size() - 2)) {
          consider_t(branch.edge);
        } else {
          while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (slope_up(mid)) {
              lo = mid;
            } else {
              hi = mid;
            }
          }
          const double a = ts[lo];
          const double b = ts[std::min(hi + 1, ts.size() - 1)];
          auto [t_ref, g_ref] = golden_max(
              [&](double tv) { return w * tv - mu * budget_cost(model, tv); },
              a, b, 60);
          (void)g_ref;
          consider_t(t_ref);
          consider_t(ts[lo]);
          consider_t(ts[hi]);
        }
        break;
      }
      case TailShape::none:
        break;
    }
  }
  return best;
}

// Best value of one coordinate alone under budget b (used by the repair and
// polish stages). Exact up to the one-dimensional searches it delegates to.
inline BranchPoint coordinate_best_under(const DistributionModel& model,
                                         const TailBranch& branch, double w,
                                         double b) {
  BranchPoint best;
  if (!(b > 0.0)) return best;
  {
    const double sq = std::min(b, 1.0);
    const double tq = std::sqrt(sq);
    best = {sq, tq, w * tq};
  }
  if (!branch.empty() && budget_cost(model, branch.t.front()) <= b) {
    // Largest affordable heavy value; cost is nondecreasing above 1.
    const double t_best = bisect_level(
        [&](double tv) { return budget_cost(model, tv); }, b,
        branch.t.front(), branch.edge);
    const double c = budget_cost(model, t_best);
    if (c <= b && w * t_best > best.gain) best = {c, t_best, w * t_best};
  }
  return best;
}

}  // namespace detail

// Generic solver for sorted nonnegative weights: dual water-filling over
// the budget-split formulation, feasible repair, greedy top-up, and (at
// small n) a pairwise exchange polish. Returns a feasible certificate whose
// value lower-bounds the supremum and matches it to solver precision away
// from degenerate ties.
inline NormSolution generic_linear_sup(const std::vector<double>& a, double p,
                                       const DistributionModel& model) {
  detail::require_sorted_nonneg(a);
  NormSolution sol;
  sol.method = SolveMethod::dual_numeric;
  sol.certificate_x.assign(a.size(), 0.0);
  if (a.empty() || a[0] == 0.0) {
    sol.upper = sol.value;
    return sol;
  }
  const std::size_t n = a.size();
  const auto branch = detail::build_tail_branch(model, p);

  std::vector<detail::BranchPoint> pts(n);
  auto fill = [&](double mu) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pts[i] = detail::coordinate_argmax(model, branch, a[i], mu, p);
      total += pts[i].s;
    }
    return total;
  };

  // Bracket the multiplier in log space; the share sum is nonincreasing.
  double mu_lo = 1e-12 * a[0], mu_hi = 1e12 * a[0];
  for (int it = 0; it < 200; ++it) {
    const double mu = std::sqrt(mu_lo * mu_hi);
    if (!(mu > mu_lo) || !(mu < mu_hi)) break;
    if (fill(mu) >= p) {
      mu_lo = mu;
    } else {
      mu_hi = mu;
    }
  }
  double total = fill(mu_hi);  // feasible side
  if (total > p) total = fill(mu_hi * (1.0 + 1e-9));

  // Greedy top-up of the leftover budget, one coordinate at a time.
  for (int round = 0; round < 64; ++round) {
    double used = 0.0;
    for (const auto& q : pts) used += q.s;
    const double leftover = p - used;
    if (!(leftover > 1e-13 * std::max(1.0, p))) break;
    double best_gain = 0.0;
    std::size_t best_i = n;
    detail::BranchPoint best_pt;
    for (std::size_t i = 0; i < n; ++i) {
      const auto cand = detail::coordinate_best_under(
          model, branch, a[i], pts[i].s + leftover);
      const double gain = cand.gain - a[i] * pts[i].t;
      if (gain > best_gain + 1e-15) {
        best_gain = gain;
        best_i = i;
        best_pt = cand;
      }
    }
    if (best_i == n) break;
    pts[best_i] = best_pt;
  }

  // Pairwise exchange polish at small n; exactly re-solves every
  // two-coordinate subproblem, which removes the residual duality gap the
  // water level can leave when the budget lands inside a nonconcave stretch.
  if (n <= 8) {
    for (int pass = 0; pass < 6; ++pass) {
      double improved = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          const double b = pts[i].s + pts[j].s;
          if (!(b > 0.0)) continue;
          const double cur = a[i] * pts[i].t + a[j] * pts[j].t;
          auto objective = [&](double u) {
            const auto pi =
                detail::coordinate_best_under(model, branch, a[i], u);
            const auto pj =
                detail::coordinate_best_under(model, branch, a[j], b - u);
            return pi.gain + pj.gain;
          };
          auto [u_best, v_best] = grid_refine_max(objective, 0.0, b, 65);
          if (v_best > cur + 1e-14 * std::max(1.0, cur)) {
            pts[i] = detail::coordinate_best_under(model, branch, a[i], u_best);
            pts[j] =
                detail::coordinate_best_under(model, branch, a[j], b - u_best);
            improved += v_best - cur;
          }
        }
      }
      if (!(improved > 1e-13)) break;
    }
  }

  for (std::size_t i = 0; i < n; ++i) sol.certificate_x[i] = pts[i].t;

  // Exact feasibility: shrink globally if rounding pushed the cost over.
  double cost = budget_cost_sum(model, sol.certificate_x);
  if (cost > p) {
    const double gamma = bisect_level(
        [&](double g) {
          double s = 0.0;
          for (double t : sol.certificate_x) {
            const double c = budget_cost(model, g * t);
            if (c == kInf) return kInf;
            s += c;
          }
          return s;
        },
        p, 0.0, 1.0);
    for (double& t : sol.certificate_x) t *= gamma;
    cost = budget_cost_sum(model, sol.certificate_x);
  }
  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) v += a[i] * sol.certificate_x[i];
  sol.value = v;
  sol.feasibility_slack = std::max(0.0, cost - p);

  // Cheap certified upper companion from the enclosing ball and box.
  const auto enc = budget_enclosure(model, p, n);
  const double norm2 =
      std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
  double norm1 = 0.0;
  for (double w : a) norm1 += w;
  sol.upper = std::max(sol.value,
                       std::min(std::sqrt(enc.ball2) * norm2, enc.box * norm1));
  return sol;
}

// ---------------------------------------------------------------------------
// Linear norm dispatch

namespace detail {

struct SortedView {
  std::vector<double> mags;        // |a| sorted nonincreasing
  std::vector<std::size_t> order;  // original index of each sorted slot
  std::vector<double> signs;       // sign per original index
  double amax = 0.0;
};

inline SortedView sort_by_magnitude(const std::vector<double>& a) {
  SortedView v;
  v.signs.resize(a.size());
  v.order.resize(a.size());
  std::iota(v.order.begin(), v.order.end(), std::size_t{0});
  std::stable_sort(v.order.begin(), v.order.end(),
                   [&](std::size_t i, std::size_t j) {
                     return std::abs(a[i]) > std::abs(a[j]);
                   });
  v.mags.resize(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a[v.order[k]];
    if (!std::isfinite(x)) {
      throw std::invalid_argument("weights must be finite");
    }
    v.mags[k] = std::abs(x);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    v.signs[i] = a[i] < 0.0 ? -1.0 : 1.0;
  }
  v.amax = v.mags.empty() ? 0.0 : v.mags.front();
  return v;
}

}  // namespace detail

// sup { sum a_i x_i : sum cost(x_i) <= p } for an arbitrary signed weight
// vector. Weights are reduced by sign and magnitude (the budget is even per
// coordinate) and rescaled to unit leading weight, which makes the solver
// exactly positively homogeneous.
inline NormSolution linear_norm(const std::vector<double>& a,
                                const ConstraintBudget& budget) {
  const auto view = detail::sort_by_magnitude(a);
  NormSolution sol;
  sol.certificate_x.assign(a.size(), 0.0);
  if (view.amax == 0.0) {
    sol.upper = 0.0;
    return sol;
  }
  std::vector<double> unit(view.mags.size());
  for (std::size_t i = 0; i < unit.size(); ++i) unit[i] = view.mags[i] / view.amax;

  const auto& model = budget.model;
  const double p = budget.p;
  const bool unit_scale = model.scale() == 1.0;

  NormSolution inner;
  switch (model.kind()) {
    case DistKind::square_tail:
      if (unit_scale) {
        inner = ell2_ellinf_sup(unit, p, kInf);
        inner.method = SolveMethod::closed_form;
      } else {
        inner = generic_linear_sup(unit, p, model);
      }
      break;
    case DistKind::rademacher:
      if (model.scale() > 1.0) {
        // Coordinates up to the scale cost nothing, so every active weight
        // rides at the scale.
        inner.method = SolveMethod::closed_form;
        inner.certificate_x.assign(unit.size(), 0.0);
        for (std::size_t i = 0; i < unit.size(); ++i) {
          if (unit[i] > 0.0) {
            inner.certificate_x[i] = model.scale();
            inner.value += unit[i] * model.scale();
          }
        }
        inner.upper = inner.value;
      } else {
        inner = ell2_ellinf_sup(unit, p, 1.0);
      }
      break;
    case DistKind::weibull_sym:
      if (unit_scale) {
        inner = mixed_budget_sup(unit, p, model.weibull_r(), kInf);
      } else {
        inner = generic_linear_sup(unit, p, model);
      }
      break;
    case DistKind::trunc_weibull_sym:
      if (unit_scale) {
        inner = mixed_budget_sup(unit, p, model.weibull_r(), model.cutoff());
      } else {
        inner = generic_linear_sup(unit, p, model);
      }
      break;
    case DistKind::gaussian:
    case DistKind::custom_tail:
      inner = generic_linear_sup(unit, p, model);
      break;
  }

  sol.method = inner.method;
  sol.value = inner.value * view.amax;
  sol.upper = inner.upper * view.amax;
  for (std::size_t k = 0; k < view.order.size(); ++k) {
    const std::size_t i = view.order[k];
    sol.certificate_x[i] = view.signs[i] * inner.certificate_x[k];
  }
  sol.feasibility_slack = inner.feasibility_slack;
  return sol;
}

struct EnvelopePair {
  double lower = 0.0;
  double upper = 0.0;
};

// Closed-form two-sided envelope for the linear norm, models with explicit
// formulas only. The sandwich constants are 1/2 below and 1 above in every
// case: the box-constrained quadratic estimate carries them directly, and
// the split into a quadratic part plus a power-law part costs at most the
// sum upward while each part alone stays feasible downward.
inline EnvelopePair linear_norm_envelope(const std::vector<double>& a,
                                         const ConstraintBudget& budget) {
  if (budget.model.scale() != 1.0) {
    throw std::invalid_argument("envelope formulas assume unit scale");
  }
  const auto view = detail::sort_by_magnitude(a);
  const auto& s = view.mags;  // sorted magnitudes
  const double p = budget.p;
  double sum2 = 0.0;
  for (double v : s) sum2 += v * v;
  const double norm2 = std::sqrt(sum2);

  switch (budget.model.kind()) {
    case DistKind::square_tail: {
      const double v = std::sqrt(p) * norm2;
      return {v, v};
    }
    case DistKind::rademacher: {
      const std::size_t head = std::min(
          s.size(), static_cast<std::size_t>(std::floor(p + 1e-12)));
      double head_sum = 0.0, tail2 = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i < head) {
          head_sum += s[i];
        } else {
          tail2 += s[i] * s[i];
        }
      }
      const double f = head_sum + std::sqrt(p) * std::sqrt(tail2);
      return {0.5 * f, f};
    }
    case DistKind::weibull_sym: {
      const double r = budget.model.weibull_r();
      const double s1 = std::sqrt(p) * norm2;
      const double s2 = s.empty() ? 0.0 : std::pow(p, 1.0 / r) * s[0];
      return {0.5 * (s1 + s2), s1 + s2};
    }
    case DistKind::trunc_weibull_sym: {
      const double r = budget.model.weibull_r();
      const double cap = budget.model.cutoff();
      const double s1 = ell2_ellinf_sup(s, p, cap).value;
      // Exact supremum over the pure power-law budget with the box.
      const double cap_cost = std::pow(cap, r);
      const std::size_t full = std::min(
          s.size(), static_cast<std::size_t>(std::floor(p / cap_cost + 1e-12)));
      double s2 = 0.0;
      for (std::size_t i = 0; i < full; ++i) s2 += s[i] * cap;
      const double rem = p - static_cast<double>(full) * cap_cost;
      if (full < s.size() && rem > 0.0) {
        s2 += s[full] * std::pow(rem, 1.0 / r);
      }
      return {0.5 * (s1 + s2), s1 + s2};
    }
    default:
      throw std::invalid_argument(
          "no closed-form envelope for this model kind");
  }
}

// ---------------------------------------------------------------------------
// Bilinear norm

namespace detail {

// One side of a bilinear budget: either a full model budget or one of the
// explicit cap sets used by the truncated-family estimate.
struct SideBudget {
  enum class Type { model, quad_cap, power_cap };
  Type type = Type::model;
  double p = 1.0;
  double cap = kInf;                 // box, quad_cap / power_cap types
  double r = 1.0;                    // power_cap exponent
  const DistributionModel* model = nullptr;

  static SideBudget from_model(const ConstraintBudget& b) {
    SideBudget s;
    s.type = Type::model;
    s.p = b.p;
    s.model = &b.model;
    return s;
  }
  static SideBudget quad(double p, double cap) {
    SideBudget s;
    s.type = Type::quad_cap;
    s.p = p;
    s.cap = cap;
    return s;
  }
  static SideBudget power(double p, double r, double cap) {
    SideBudget s;
    s.type = Type::power_cap;
    s.p = p;
    s.r = r;
    s.cap = cap;
    return s;
  }

  double cost(double t) const {
    const double x = std::abs(t);
    switch (type) {
      case Type::model:
        return budget_cost(*model, x);
      case Type::quad_cap:
        return x > cap ? kInf : x * x;
      case Type::power_cap:
        return x > cap ? kInf : std::pow(x, r);
    }
    return kInf;
  }

  double cost_sum(const std::vector<double>& x) const {
    double s = 0.0;
    for (double v : x) {
      const double c = cost(v);
      if (c == kInf) return kInf;
      s += c;
    }
    return s;
  }

  BudgetEnclosure enclosure(std::size_t n) const {
    switch (type) {
      case Type::model:
        return budget_enclosure(*model, p, n);
      case Type::quad_cap:
        return {p, std::min(cap, std::sqrt(p))};
      case Type::power_cap: {
        const double box = std::min(cap, std::pow(p, 1.0 / r));
        return {std::pow(box, 2.0 - r) * p, box};
      }
    }
    return {p, std::sqrt(p)};
  }

  NormSolution solve(const std::vector<double>& w) const {
    switch (type) {
      case Type::model:
        return linear_norm(w, ConstraintBudget(p, *model));
      case Type::quad_cap: {
        const auto view = sort_by_magnitude(w);
        NormSolution out;
        out.certificate_x.assign(w.size(), 0.0);
        if (view.amax == 0.0) return out;
        auto inner = ell2_ellinf_sup(view.mags, p, cap);
        out.value = inner.value;
        out.method = inner.method;
        out.feasibility_slack = inner.feasibility_slack;
        for (std::size_t k = 0; k < view.order.size(); ++k) {
          out.certificate_x[view.order[k]] =
              view.signs[view.order[k]] * inner.certificate_x[k];
        }
        out.upper = out.value;
        return out;
      }
      case Type::power_cap: {
        // Concave cost concentrates exactly: fill the largest weights at
        // the box, then one partial coordinate.
        const auto view = sort_by_magnitude(w);
        NormSolution out;
        out.method = SolveMethod::kkt_exact;
        out.certificate_x.assign(w.size(), 0.0);
        if (view.amax == 0.0) return out;
        const double cap_cost = std::pow(cap, r);
        const std::size_t full = std::min(
            view.mags.size(),
            static_cast<std::size_t>(std::floor(p / cap_cost + 1e-12)));
        double used = 0.0;
        for (std::size_t k = 0; k < full; ++k) {
          const std::size_t i = view.order[k];
          out.certificate_x[i] = view.signs[i] * cap;
          out.value += view.mags[k] * cap;
          used += cap_cost;
        }
        if (full < view.mags.size()) {
          const double rem = p - used;
          if (rem > 0.0) {
            const double t = std::pow(rem, 1.0 / r);
            const std::size_t i = view.order[full];
            out.certificate_x[i] = view.signs[i] * t;
            out.value += view.mags[full] * t;
          }
        }
        out.feasibility_slack =
            std::max(0.0, cost_sum(out.certificate_x) - p);
        out.upper = out.value;
        return out;
      }
    }
    throw std::logic_error("unreachable");
  }

  // Scales the direction onto the budget boundary (or leaves it if the
  // whole ray is affordable within the box limits).
  std::vector<double> feasible_point(const std::vector<double>& dir) const {
    double mag = 0.0;
    for (double v : dir) mag = std::max(mag, std::abs(v));
    std::vector<double> out(dir.size(), 0.0);
    if (mag == 0.0) return out;
    double tau_hi = 1.0 / mag;
    auto cost_at = [&](double tau) {
      double s = 0.0;
      for (double v : dir) {
        const double c = cost(tau * v);
        if (c == kInf) return kInf;
        s += c;
      }
      return s;
    };
    while (cost_at(tau_hi) <= p && tau_hi < 1e9 / mag) tau_hi *= 2.0;
    const double tau = bisect_level(cost_at, p, 0.0, tau_hi);
    for (std::size_t i = 0; i < dir.size(); ++i) out[i] = tau * dir[i];
    return out;
  }
};

}  // namespace detail

// Alternating maximization of x^T A y over a product of budget sets.
// Each half-step is an exact (or near-exact) linear-norm solve, so the
// objective is nondecreasing along the iteration; multiple deterministic
// starts guard against secondary fixed points. The reported value is the
// certificate's objective (a guaranteed lower bound); `upper` carries the
// enclosing ball-and-box relaxation.
inline NormSolution bilinear_general(const CoeffMatrix& A,
                                     const detail::SideBudget& bx,
                                     const detail::SideBudget& by,
                                     int starts = 16, int max_iters = 200,
                                     double rel_tol = 1e-8) {
  NormSolution best;
  best.method = SolveMethod::alternating;
  best.certificate_x.assign(A.rows(), 0.0);
  best.certificate_y.assign(A.cols(), 0.0);
  if (A.frobenius() == 0.0) return best;

  // Start directions for y: top singular direction, dominant columns,
  // then seeded random draws. All deterministic.
  std::vector<std::vector<double>> dirs;
  dirs.push_back(operator_norm(A).right_vector);
  {
    const auto cn = A.col_l2_norms();
    std::vector<std::size_t> idx(cn.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t i, std::size_t j) { return cn[i] > cn[j]; });
    for (std::size_t k = 0; k < idx.size() && dirs.size() < 8; ++k) {
      std::vector<double> e(A.cols(), 0.0);
      e[idx[k]] = 1.0;
      dirs.push_back(std::move(e));
    }
  }
  while (static_cast<int>(dirs.size()) < starts) {
    RngStream rng(0xb111u, 0x57a7u, dirs.size());
    std::vector<double> d(A.cols());
    for (auto& v : d) v = rng.next_gaussian();
    dirs.push_back(std::move(d));
  }

  for (const auto& dir : dirs) {
    std::vector<double> y = by.feasible_point(dir);
    double value = -kInf;
    std::vector<double> x;
    for (int it = 0; it < max_iters; ++it) {
      const auto xs = bx.solve(A.matvec(y));
      x = xs.certificate_x;
      const auto ys = by.solve(A.tmatvec(x));
      y = ys.certificate_x;
      const double v = ys.value;
      if (!(v > value + rel_tol * std::max(1.0, std::abs(v)))) {
        value = std::max(value, v);
        break;
      }
      value = v;
    }
    const double exact = A.quad_form(x, y);
    if (exact > best.value) {
      best.value = exact;
      best.certificate_x = x;
      best.certificate_y = y;
    }
  }

  best.feasibility_slack =
      std::max({0.0, bx.cost_sum(best.certificate_x) - bx.p,
                by.cost_sum(best.certificate_y) - by.p});

  // Upper companion from the enclosing ball-and-box product.
  const auto ex = bx.enclosure(A.rows());
  const auto ey = by.enclosure(A.cols());
  const double sigma_up = operator_norm_upper(A);
  double row_abs = 0.0, col_abs = 0.0;
  {
    const auto rn = A.row_l2_norms();
    for (double v : rn) row_abs += v;
    const auto cn = A.col_l2_norms();
    for (double v : cn) col_abs += v;
  }
  const double u1 = std::sqrt(ex.ball2 * ey.ball2) * sigma_up;
  const double u2 = ex.box * ey.box * A.abs_sum();
  const double u3 = ex.box * std::sqrt(ey.ball2) * row_abs;
  const double u4 = ey.box * std::sqrt(ex.ball2) * col_abs;
  best.upper = std::max(best.value, std::min(std::min(u1, u2), std::min(u3, u4)));
  return best;
}

// Bilinear norm under two model budgets. The pure quadratic case is the
// scaled top singular value and is dispatched in closed form.
inline NormSolution bilinear_norm(const CoeffMatrix& A,
                                  const ConstraintBudget& bx,
                                  const ConstraintBudget& by) {
  if (bx.model.kind() == DistKind::square_tail && bx.model.scale() == 1.0 &&
      by.model.kind() == DistKind::square_tail && by.model.scale() == 1.0) {
    const auto on = operator_norm(A);
    NormSolution sol;
    sol.method = SolveMethod::closed_form;
    const double scale = std::sqrt(bx.p * by.p);
    sol.value = scale * on.value;
    sol.certificate_y = on.right_vector;
    for (auto& v : sol.certificate_y) v *= std::sqrt(by.p);
    auto Av = A.matvec(on.right_vector);
    double nav = std::sqrt(
        std::inner_product(Av.begin(), Av.end(), Av.begin(), 0.0));
    sol.certificate_x.assign(A.rows(), 0.0);
    if (nav > 0.0) {
      for (std::size_t i = 0; i < Av.size(); ++i) {
        sol.certificate_x[i] = Av[i] / nav * std::sqrt(bx.p);
      }
    }
    sol.value = A.quad_form(sol.certificate_x, sol.certificate_y);
    sol.feasibility_slack = std::max(
        {0.0, budget_cost_sum(bx.model, sol.certificate_x) - bx.p,
         budget_cost_sum(by.model, sol.certificate_y) - by.p});
    sol.upper = scale * operator_norm_upper(A);
    return sol;
  }
  return bilinear_general(A, detail::SideBudget::from_model(bx),
                          detail::SideBudget::from_model(by));
}

}  // namespace quadchaos
