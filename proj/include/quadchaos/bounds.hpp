#pragma once

// Deterministic two-sided moment estimates for quadratic and bilinear
// chaoses, assembled from the constrained-supremum norms, plus the sharp
// linear-form moment estimate used as a cross-check. Every estimate here is
// two-sided only up to universal constants; the Monte-Carlo layer measures
// the actual ratios and the calibration pack freezes them.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quadchaos/calibration.hpp"
#include "quadchaos/distribution.hpp"
#include "quadchaos/matrix.hpp"
#include "quadchaos/norms.hpp"
#include "quadchaos/numerics.hpp"

namespace quadchaos {

// Moment bound decomposition: a bilinear piece plus one constrained norm of
// the row lengths per independent side.
struct BoundReport {
  double p = 1.0;
  double bilinear_term = 0.0;
  double row_term = 0.0;
  double col_term = 0.0;  // zero for the single-sequence chaos
  double total = 0.0;
  std::vector<std::pair<std::string, std::string>> component_methods;
  // Full solutions for diagnostics; `bilinear.upper` carries the relaxation
  // upper companion of the non-convex bilinear solve.
  NormSolution bilinear;
  NormSolution row;
  NormSolution col;
};

// Moment bound for sum_ij a_ij X_i Y_j with independent sequences X, Y.
inline BoundReport decoupled_moment_bound(const CoeffMatrix& A,
                                          const DistributionModel& model_x,
                                          const DistributionModel& model_y,
                                          double p) {
  ConstraintBudget bx(p, model_x), by(p, model_y);
  BoundReport rep;
  rep.p = p;
  rep.bilinear = bilinear_norm(A, bx, by);
  rep.row = linear_norm(A.row_l2_norms(), bx);
  rep.col = linear_norm(A.col_l2_norms(), by);
  rep.bilinear_term = rep.bilinear.value;
  rep.row_term = rep.row.value;
  rep.col_term = rep.col.value;
  rep.total = rep.bilinear_term + rep.row_term + rep.col_term;
  rep.component_methods = {
      {"bilinear", solve_method_name(rep.bilinear.method)},
      {"row", solve_method_name(rep.row.method)},
      {"col", solve_method_name(rep.col.method)}};
  return rep;
}

// Moment bound for sum_{i != j} a_ij X_i X_j, symmetric zero-diagonal
// coefficients. One row term only; the column term would duplicate it.
inline BoundReport undecoupled_moment_bound(const CoeffMatrix& A,
                                            const DistributionModel& model,
                                            double p) {
  if (!A.symmetric() || !A.zero_diag()) {
    throw std::invalid_argument(
        "single-sequence bound needs symmetric zero-diagonal coefficients");
  }
  ConstraintBudget b(p, model);
  BoundReport rep;
  rep.p = p;
  rep.bilinear = bilinear_norm(A, b, b);
  rep.row = linear_norm(A.row_l2_norms(), b);
  rep.bilinear_term = rep.bilinear.value;
  rep.row_term = rep.row.value;
  rep.total = rep.bilinear_term + rep.row_term;
  rep.component_methods = {
      {"bilinear", solve_method_name(rep.bilinear.method)},
      {"row", solve_method_name(rep.row.method)}};
  return rep;
}

// Tail levels implied by a moment bound. Chebyshev at order p gives
// P(|S| >= threshold_up) <= e^{-p} once C_up absorbs the constant between
// the bound and the true moment; the lower level is the calibrated
// anti-concentration counterpart. With the identity pack both thresholds
// degenerate to the bound itself.
struct TailThresholds {
  double threshold_up = 0.0;
  double threshold_low = 0.0;
  double prob_up = 0.0;   // e^{-p}
  double prob_low = 0.0;  // e^{-c_exp * p}
};

inline TailThresholds tail_threshold(const BoundReport& report,
                                     const CalibrationPack& calib) {
  TailThresholds out;
  out.threshold_up = calib.C_up * report.total;
  out.threshold_low = calib.c_low * report.total;
  out.prob_up = std::exp(-report.p);
  out.prob_low = std::exp(-calib.c_exp * report.p);
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form model-specific estimates (single-sequence chaoses)

namespace detail {

inline void require_chaos_matrix(const CoeffMatrix& A) {
  if (!A.symmetric() || !A.zero_diag()) {
    throw std::invalid_argument(
        "closed-form chaos estimates need symmetric zero-diagonal "
        "coefficients");
  }
}

inline void require_order(double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("moment order must be >= 1");
}

inline void require_shape(double r) {
  if (!(r > 0.0) || !(r <= 1.0)) {
    throw std::invalid_argument("shape parameter must be in (0, 1]");
  }
}

}  // namespace detail

// p * operator norm + sqrt(p) * frobenius. Valid for any coefficient
// matrix; the spectral term is the bilinear supremum over euclidean balls.
inline double gaussian_closed_form(const CoeffMatrix& A, double p) {
  detail::require_order(p);
  return p * operator_norm(A).value + std::sqrt(p) * A.frobenius();
}

// Box-constrained bilinear supremum plus the head/tail split of the
// rearranged row lengths at index p.
inline double rademacher_closed_form(const CoeffMatrix& A, double p) {
  detail::require_chaos_matrix(A);
  detail::require_order(p);
  const auto bil = bilinear_general(A, detail::SideBudget::quad(p, 1.0),
                                    detail::SideBudget::quad(p, 1.0));
  const auto rows = nonincreasing_rearrangement(A.row_l2_norms());
  const std::size_t head =
      std::min(rows.size(), static_cast<std::size_t>(std::floor(p + 1e-12)));
  double head_sum = 0.0, tail2 = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i < head) {
      head_sum += rows[i];
    } else {
      tail2 += rows[i] * rows[i];
    }
  }
  return bil.value + head_sum + std::sqrt(p) * std::sqrt(tail2);
}

// p^{2/r} |a|_max + p^{1/r + 1/2} max row length + p * operator norm +
// sqrt(p) * frobenius.
inline double weibull_closed_form(const CoeffMatrix& A, double r, double p) {
  detail::require_chaos_matrix(A);
  detail::require_shape(r);
  detail::require_order(p);
  const auto rows = A.row_l2_norms();
  const double max_row = *std::max_element(rows.begin(), rows.end());
  return std::pow(p, 2.0 / r) * A.abs_max() +
         std::pow(p, 1.0 / r + 0.5) * max_row +
         p * operator_norm(A).value + std::sqrt(p) * A.frobenius();
}

// Three-regime estimate for the box-truncated power-law family. The
// bilinear block is the sum of three mixed cap suprema (quadratic or r-th
// power budget at level p, box at the cutoff, on each side); the row block
// switches shape as p crosses R^r and R^2, with regime boundaries taken as
// the half-open intervals [1, R^r], (R^r, R^2], (R^2, inf).
inline double truncweibull_closed_form(const CoeffMatrix& A, double r,
                                       double R, double p) {
  detail::require_chaos_matrix(A);
  detail::require_shape(r);
  detail::require_order(p);
  if (!(R > 1.0)) throw std::invalid_argument("cutoff must exceed 1");

  const auto quad = detail::SideBudget::quad(p, R);
  const auto powr = detail::SideBudget::power(p, r, R);
  const double triple = bilinear_general(A, quad, quad).value +
                        bilinear_general(A, powr, quad).value +
                        bilinear_general(A, powr, powr).value;

  const auto rows = nonincreasing_rearrangement(A.row_l2_norms());
  double sum2_all = 0.0;
  for (double v : rows) sum2_all += v * v;

  const double rr = std::pow(R, r);
  if (p <= rr) {
    const double heavy = std::pow(p, 1.0 / r) * (rows.empty() ? 0.0 : rows[0]);
    return triple + std::sqrt(p) * std::sqrt(sum2_all) + heavy;
  }

  // Heavy block: the largest floor(p / R^r) rows ride at the cutoff.
  const std::size_t head = std::min(
      rows.size(), static_cast<std::size_t>(std::floor(p / rr + 1e-12)));
  double head_sum = 0.0;
  for (std::size_t i = 0; i < head; ++i) head_sum += rows[i];
  const double heavy = R * head_sum;

  if (p <= R * R) {
    return triple + std::sqrt(p) * std::sqrt(sum2_all) + heavy;
  }

  // Beyond R^2 the light block keeps only the rows the quadratic budget
  // cannot pin at the cutoff: one-based indices at or past p / R^2.
  const std::size_t start = static_cast<std::size_t>(
      std::max(1.0, std::ceil(p / (R * R) - 1e-12)));
  double tail2 = 0.0;
  for (std::size_t i = start - 1; i < rows.size(); ++i) {
    tail2 += rows[i] * rows[i];
  }
  return triple + std::sqrt(p) * std::sqrt(tail2) + heavy;
}

// ---------------------------------------------------------------------------
// Sharp linear-form moment estimate

namespace detail {

// -log P(|X| >= t) under the actual law, +inf past the support. Differs
// from the budget cost: no quadratic floor near zero, and the truncated
// family keeps its exact survival function.
inline double survival_exponent(const DistributionModel& model, double t) {
  if (model.kind() == DistKind::custom_tail) {
    const double u = t / model.scale();
    if (u > model.table().t.back()) return kInf;
  }
  return model.tail_exponent(t);
}

// log E |1 + kappa X|^p for symmetric X, via the derivative identity
//   E h(|X|) = h(0) + integral h'(s) P(|X| >= s) ds
// with h(s) = ((1 + kappa s)^p + |1 - kappa s|^p) / 2. The integrand is
// assembled in the log domain so orders p in the hundreds stay finite.
inline double log_abs_plus_moment(const DistributionModel& model, double kappa,
                                  double p) {
  if (kappa == 0.0) return 0.0;
  if (model.kind() == DistKind::rademacher) {
    const double ks = kappa * model.scale();
    const double ap = p * std::log1p(ks);
    const double am = p * std::log(std::abs(1.0 - ks));
    if (!std::isfinite(am)) return ap - std::log(2.0);
    return ap + std::log1p(std::exp(am - ap)) - std::log(2.0);
  }

  auto phi = [&](double s) {
    if (s <= 0.0) return -kInf;
    const double n0 = survival_exponent(model, s);
    if (n0 == kInf) return -kInf;
    const double ks = kappa * s;
    const double ap = (p - 1.0) * std::log1p(ks);
    // At p = 1 the exponent is exactly zero, so the factor is one even where
    // the base vanishes; the plain product would be 0 * -inf = nan there.
    const double am =
        p == 1.0 ? 0.0 : (p - 1.0) * std::log(std::abs(1.0 - ks));
    const double sign = 1.0 - ks >= 0.0 ? 1.0 : -1.0;
    const double ratio = sign * std::exp(am - ap);
    const double logd = ratio >= 1.0 ? -kInf : ap + std::log1p(-ratio);
    return std::log(p * kappa / 2.0) + logd - n0;
  };

  // Upper end: the support boundary when there is one, otherwise a doubling
  // probe until the integrand has fallen 80 nats below its peak. The running
  // peak is seeded on a geometric grid down to s = 2^-40 first, because for
  // small kappa the maximum sits right next to the origin and a probe that
  // only walks upward would measure decay against the wrong level.
  double s_hi;
  switch (model.kind()) {
    case DistKind::trunc_weibull_sym:
      s_hi = model.scale() * model.cutoff();
      break;
    case DistKind::custom_tail:
      s_hi = model.scale() * model.table().t.back();
      break;
    default: {
      double peak = -kInf;
      for (double s = 1.0; s > 0x1p-40; s *= 0.5) {
        peak = std::max(peak, phi(s));
      }
      s_hi = 1.0;
      for (int it = 0; it < 2000; ++it) {
        peak = std::max(peak, phi(s_hi));
        if (phi(2.0 * s_hi) < peak - 80.0) break;
        s_hi *= 2.0;
      }
      s_hi *= 2.0;
      break;
    }
  }

  // Integrate in log s. For small kappa the mass hugs the origin while the
  // range stretches far past 1/kappa; on a linear grid the scan straddles
  // the peak and the refinement pass pays for it dearly. The substitution
  // spends the same scan points per decade instead.
  const double s_lo = 1e-12 * std::min({1.0, 1.0 / kappa, s_hi});
  auto psi = [&](double u) { return phi(std::exp(u)) + u; };
  const double integral =
      log_integral_exp(psi, std::log(s_lo), std::log(s_hi), 1e-11, 513);
  if (integral == -kInf) return 0.0;
  if (integral > 0.0) return integral + std::log1p(std::exp(-integral));
  return std::log1p(std::exp(integral));
}

}  // namespace detail

// Sharp two-sided moment estimate for sum_i a_i X_i: the level t at which
// sum_i log E |1 + a_i X / t|^p crosses p, located by bisection in log t.
// Exactly positively homogeneous in a and nondecreasing in p. Signs of the
// weights are immaterial because X is symmetric.
inline double latala_linear_moment(const DistributionModel& model,
                                   const std::vector<double>& a, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("moment order must be >= 1");
  std::vector<double> mags;
  mags.reserve(a.size());
  double amax = 0.0;
  for (double v : a) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("weights must be finite");
    }
    if (v != 0.0) {
      mags.push_back(std::abs(v));
      amax = std::max(amax, std::abs(v));
    }
  }
  if (mags.empty()) return 0.0;
  for (double& v : mags) v /= amax;  // solve at unit leading weight
  // Largest first, so the early break below fires after a few terms
  // whenever the sum is already far past the crossing.
  std::sort(mags.rbegin(), mags.rend());

  auto excess = [&](double t) {
    double sum = 0.0;
    for (double w : mags) {
      sum += detail::log_abs_plus_moment(model, w / t, p);
      if (sum > 4.0 * p) break;  // already far above the crossing
    }
    return sum - p;
  };

  double t_hi = 1.0;
  int guard = 0;
  while (excess(t_hi) > 0.0) {
    t_hi *= 2.0;
    if (++guard > 200) {
      throw std::runtime_error("failed to bracket the moment level");
    }
  }
  double t_lo = t_hi * 0.5;
  while (!(excess(t_lo) > 0.0)) {
    t_lo *= 0.5;
    if (++guard > 400) return 0.0;  // degenerate: the form vanishes
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = std::sqrt(t_lo * t_hi);
    if (!(mid > t_lo) || !(mid < t_hi)) break;
    if (excess(mid) > 0.0) {
      t_lo = mid;
    } else {
      t_hi = mid;
    }
  }
  return amax * t_hi;
}

}  // namespace quadchaos
