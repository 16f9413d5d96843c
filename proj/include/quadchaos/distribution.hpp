#pragma once

// Symmetric scalar distribution models described through their tail
// exponent n(t) = -ln P(|X| >= t). Everything downstream (norm budgets,
// moment quadrature, sampling) is driven by this one function, so each model
// only has to supply its tail and an inverse-CDF sampler.
//
// A model is a base law plus a positive scale: X = scale * X0. Tail queries
// rescale the argument, moments pick up scale^q, and samples are multiplied
// through.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quadchaos/numerics.hpp"
#include "quadchaos/rng.hpp"

namespace quadchaos {

enum class DistKind {
  square_tail,       // P(|X| >= t) = exp(-t^2), the pure quadratic budget
  gaussian,          // standard normal
  rademacher,        // |X| = 1 with a random sign
  weibull_sym,       // P(|X| >= t) = exp(-t^r), r in (0, 1]
  trunc_weibull_sym, // the Weibull law zeroed outside [-cutoff, cutoff]
  custom_tail,       // tabulated tail exponent, linear between knots
};

inline const char* dist_kind_name(DistKind k) {
  switch (k) {
    case DistKind::square_tail: return "square_tail";
    case DistKind::gaussian: return "gaussian";
    case DistKind::rademacher: return "rademacher";
    case DistKind::weibull_sym: return "weibull_sym";
    case DistKind::trunc_weibull_sym: return "trunc_weibull_sym";
    case DistKind::custom_tail: return "custom_tail";
  }
  return "?";
}

// Tabulated tail exponent. Knots must be strictly increasing in both
// coordinates; queries between knots interpolate linearly and queries
// outside the covered range are errors. Sampling and moment evaluation
// additionally require the table to start at (0, 0) and treat the residual
// mass exp(-n_back) as sitting exactly at the last knot, which makes the
// described law self-contained.
struct TailTable {
  std::vector<double> t;
  std::vector<double> n;
};

class DistributionModel {
 public:
  static DistributionModel square_tail(double scale = 1.0) {
    return DistributionModel(DistKind::square_tail, scale);
  }
  static DistributionModel gaussian(double scale = 1.0) {
    return DistributionModel(DistKind::gaussian, scale);
  }
  static DistributionModel rademacher(double scale = 1.0) {
    return DistributionModel(DistKind::rademacher, scale);
  }
  static DistributionModel weibull_sym(double r, double scale = 1.0) {
    DistributionModel m(DistKind::weibull_sym, scale);
    if (!(r > 0.0) || !(r <= 1.0)) {
      throw std::invalid_argument("weibull_sym requires r in (0, 1]");
    }
    m.r_ = r;
    return m;
  }
  static DistributionModel trunc_weibull_sym(double r, double cutoff,
                                             double scale = 1.0) {
    DistributionModel m(DistKind::trunc_weibull_sym, scale);
    if (!(r > 0.0) || !(r <= 1.0)) {
      throw std::invalid_argument("trunc_weibull_sym requires r in (0, 1]");
    }
    if (!(cutoff > 1.0) || !std::isfinite(cutoff)) {
      throw std::invalid_argument("trunc_weibull_sym requires cutoff > 1");
    }
    m.r_ = r;
    m.cutoff_ = cutoff;
    return m;
  }
  static DistributionModel custom_tail(TailTable table, double scale = 1.0) {
    DistributionModel m(DistKind::custom_tail, scale);
    const auto& t = table.t;
    const auto& n = table.n;
    if (t.size() != n.size() || t.size() < 2) {
      throw std::invalid_argument("tail table needs >= 2 aligned knots");
    }
    if (!(t.front() >= 0.0) || !(n.front() >= 0.0)) {
      throw std::invalid_argument("tail table knots must be nonnegative");
    }
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      if (!(t[i + 1] > t[i]) || !(n[i + 1] > n[i])) {
        throw std::invalid_argument(
            "tail table must be strictly increasing in both columns");
      }
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!std::isfinite(t[i]) || !std::isfinite(n[i])) {
        throw std::invalid_argument("tail table knots must be finite");
      }
    }
    m.table_ = std::move(table);
    return m;
  }

  DistKind kind() const noexcept { return kind_; }
  double scale() const noexcept { return scale_; }
  double weibull_r() const noexcept { return r_; }
  double cutoff() const noexcept { return cutoff_; }
  const TailTable& table() const noexcept { return table_; }
  std::string name() const { return dist_kind_name(kind_); }

  DistributionModel with_scale(double s) const {
    DistributionModel m = *this;
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("scale must be positive and finite");
    }
    m.scale_ = s;
    return m;
  }

  // Rescaled copy whose L2 norm (E X^2)^(1/2) equals the given target.
  DistributionModel with_l2_norm(double target) const {
    if (!(target > 0.0)) {
      throw std::invalid_argument("target L2 norm must be positive");
    }
    return with_scale(scale_ * target / moment_lp(2.0));
  }

  // -ln P(|X| >= t) for t >= 0; +inf where the tail vanishes.
  double tail_exponent(double t) const {
    if (!(t >= 0.0)) {
      throw std::invalid_argument("tail_exponent requires t >= 0");
    }
    return base_tail(t / scale_);
  }

  // t^2 inside the unit interval, the tail exponent outside. Even in t.
  double nhat(double t) const {
    const double a = std::abs(t);
    if (a <= 1.0) return a * a;
    return tail_exponent(a);
  }

  // ln E|X|^q for q >= 1, through the tail-integral representation
  // E|X|^q = integral of q t^(q-1) P(|X| >= t) dt. Computed in the log
  // domain so very large moments stay representable.
  double log_abs_moment(double q) const {
    if (!(q >= 1.0)) throw std::invalid_argument("moment order must be >= 1");
    if (kind_ == DistKind::rademacher) return q * std::log(scale_);
    if (kind_ == DistKind::custom_tail && table_.t.front() != 0.0) {
      throw std::invalid_argument(
          "moment evaluation needs a tail table anchored at t = 0");
    }
    // Integrate in u = ln t: d(t^q) becomes q e^{qu} du. exp(ln t_back) can
    // overshoot the last knot by an ulp, and past it the law carries no
    // mass, so that region reads as zero rather than a range error.
    const auto phi = [&](double u) {
      const double t = std::exp(u);
      if (kind_ == DistKind::custom_tail && t > table_.t.back()) return -kInf;
      const double nv = base_tail(t);
      if (nv == kInf) return -kInf;
      return std::log(q) + q * u - nv;
    };
    double u_hi;
    double run_max = -kInf;
    if (kind_ == DistKind::trunc_weibull_sym) {
      u_hi = std::log(cutoff_);
    } else if (kind_ == DistKind::custom_tail) {
      u_hi = std::log(table_.t.back());
    } else {
      // Step outward until the integrand has decayed 80 e-folds below the
      // running peak; the peak sits where q matches t n'(t).
      u_hi = 0.0;
      for (int it = 0; it < 4000; ++it) {
        const double v = phi(u_hi);
        if (std::isfinite(v) && v > run_max) run_max = v;
        if (std::isfinite(run_max) && v < run_max - 80.0) break;
        u_hi += 0.5;
      }
    }
    double u_lo = std::min(0.0, u_hi - 1.0);
    for (int it = 0; it < 4000; ++it) {
      const double v = phi(u_lo);
      if (std::isfinite(v) && v > run_max) run_max = v;
      if (!std::isfinite(v) || v < run_max - 80.0) break;
      u_lo -= 2.0;
    }
    const double log_base = log_integral_exp(phi, u_lo, u_hi, 1e-12, 513);
    if (log_base == -kInf) {
      throw std::runtime_error("moment quadrature failed to converge");
    }
    return log_base + q * std::log(scale_);
  }

  // (E|X|^q)^(1/q).
  double moment_lp(double q) const {
    return std::exp(log_abs_moment(q) / q);
  }

  // Largest ratio moment_lp(2p) / moment_lp(p) over a geometric grid of
  // moment orders, and the matching dyadic doubling exponent
  // d = ceil(log2 alpha). Models whose ratio never exceeds 1 report d = 0.
  std::pair<double, int> alpha_estimate(double p_lo = 1.0, double p_hi = 256.0,
                                        int points = 64) const {
    if (!(p_lo >= 1.0) || !(p_hi > p_lo) || points < 2) {
      throw std::invalid_argument("bad moment-ratio grid");
    }
    double alpha = 1.0;
    const double step = std::log(p_hi / p_lo) / (points - 1);
    for (int i = 0; i < points; ++i) {
      const double p = p_lo * std::exp(step * i);
      const double ratio = std::exp(log_abs_moment(2.0 * p) / (2.0 * p) -
                                    log_abs_moment(p) / p);
      alpha = std::max(alpha, ratio);
    }
    int d = 0;
    if (alpha > 1.0 + 1e-9) {
      d = static_cast<int>(std::ceil(std::log2(alpha) - 1e-12));
      d = std::max(d, 0);
    }
    return {alpha, d};
  }

  // Verifies n(K t x) >= t^beta n(x) over the given grids (all entries must
  // be >= 1). This is the regularity that keeps doubling moment orders from
  // outrunning the tail.
  bool check_tail_growth(double K, double beta,
                         const std::vector<double>& t_grid,
                         const std::vector<double>& x_grid) const {
    if (!(K >= 1.0) || !(beta > 0.0)) {
      throw std::invalid_argument("growth check needs K >= 1, beta > 0");
    }
    for (double t : t_grid) {
      if (!(t >= 1.0)) throw std::invalid_argument("t grid entries must be >= 1");
      for (double x : x_grid) {
        if (!(x >= 1.0)) {
          throw std::invalid_argument("x grid entries must be >= 1");
        }
        const double rhs_base = tail_exponent(x);
        const double lhs = tail_exponent(K * t * x);
        if (rhs_base == kInf) {
          if (lhs != kInf) return false;
          continue;
        }
        const double rhs = std::pow(t, beta) * rhs_base;
        if (lhs == kInf) continue;
        if (lhs + 1e-9 * std::max(1.0, rhs) + 1e-12 < rhs) return false;
      }
    }
    return true;
  }

  // One draw. The sign is consumed first, then the magnitude, so replaying a
  // stream reproduces the sequence exactly.
  double sample(RngStream& rng) const {
    switch (kind_) {
      case DistKind::gaussian:
        return scale_ * rng.next_gaussian();
      case DistKind::rademacher:
        return scale_ * rng.next_sign();
      case DistKind::square_tail: {
        const double s = rng.next_sign();
        return scale_ * s * std::sqrt(rng.next_exponential());
      }
      case DistKind::weibull_sym: {
        const double s = rng.next_sign();
        return scale_ * s * std::pow(rng.next_exponential(), 1.0 / r_);
      }
      case DistKind::trunc_weibull_sym: {
        const double s = rng.next_sign();
        const double w = std::pow(rng.next_exponential(), 1.0 / r_);
        return w <= cutoff_ ? scale_ * s * w : 0.0;
      }
      case DistKind::custom_tail: {
        if (table_.t.front() != 0.0) {
          throw std::invalid_argument(
              "sampling needs a tail table anchored at t = 0");
        }
        const double s = rng.next_sign();
        const double e = rng.next_exponential();
        return scale_ * s * invert_table(e);
      }
    }
    throw std::logic_error("unreachable");
  }

 private:
  explicit DistributionModel(DistKind kind, double scale) : kind_(kind) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw std::invalid_argument("scale must be positive and finite");
    }
    scale_ = scale;
  }

  // Tail exponent of the unscaled base law.
  double base_tail(double u) const {
    switch (kind_) {
      case DistKind::square_tail:
        return u * u;
      case DistKind::gaussian: {
        if (u > 36.0) {
          // erfc underflows around here; switch to the standard expansion
          // ln P(|X| >= u) ~ -u^2/2 - ln u - ln sqrt(pi/2).
          return 0.5 * u * u + std::log(u) + 0.5 * std::log(1.5707963267948966);
        }
        return -std::log(std::erfc(u * 0.7071067811865476));
      }
      case DistKind::rademacher:
        return u <= 1.0 ? 0.0 : kInf;
      case DistKind::weibull_sym:
        return std::pow(u, r_);
      case DistKind::trunc_weibull_sym: {
        if (u == 0.0) return 0.0;
        if (u >= cutoff_) return kInf;
        // -ln(exp(-u^r) - exp(-R^r)), written to stay accurate as u -> R.
        const double a = std::pow(u, r_);
        const double b = std::pow(cutoff_, r_);
        return a - std::log1p(-std::exp(-(b - a)));
      }
      case DistKind::custom_tail: {
        const auto& t = table_.t;
        const auto& n = table_.n;
        if (u < t.front() || u > t.back()) {
          throw std::domain_error("tail query outside the tabulated range");
        }
        const auto it = std::upper_bound(t.begin(), t.end(), u);
        if (it == t.end()) return n.back();
        const std::size_t k = static_cast<std::size_t>(it - t.begin());
        if (k == 0) return n.front();
        const double w = (u - t[k - 1]) / (t[k] - t[k - 1]);
        return n[k - 1] + w * (n[k] - n[k - 1]);
      }
    }
    throw std::logic_error("unreachable");
  }

  // Inverse of the tabulated exponent; exponents past the last knot clamp
  // to it (that is where the residual mass lives).
  double invert_table(double e) const {
    const auto& t = table_.t;
    const auto& n = table_.n;
    if (e >= n.back()) return t.back();
    const auto it = std::upper_bound(n.begin(), n.end(), e);
    const std::size_t k = static_cast<std::size_t>(it - n.begin());
    if (k == 0) return t.front();
    const double w = (e - n[k - 1]) / (n[k] - n[k - 1]);
    return t[k - 1] + w * (t[k] - t[k - 1]);
  }

  DistKind kind_;
  double scale_ = 1.0;
  double r_ = 1.0;
  double cutoff_ = kInf;
  TailTable table_;
};

}  // namespace quadchaos
