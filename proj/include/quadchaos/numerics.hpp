#pragma once

// Small numeric kernels shared across the library: bracketing searches,
// one-dimensional maximization, log-domain quadrature and summation, and
// binomial confidence intervals. Everything here is deterministic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace quadchaos {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Largest x in [lo, hi] with f(x) <= target, for nondecreasing f which may
// take +inf. Assumes f(lo) <= target; returns lo otherwise. The loop runs to
// the floating-point fixpoint, so the result is as tight as doubles allow.
template <class F>
double bisect_level(F&& f, double target, double lo, double hi) {
  if (!(f(lo) <= target)) return lo;
  if (f(hi) <= target) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) <= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

// Root of a continuous nonincreasing function g on [lo, hi] with
// g(lo) >= 0 >= g(hi), to floating-point precision.
template <class F>
double bisect_decreasing_root(F&& g, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Golden-section maximization on [lo, hi]. Exact only for unimodal f; the
// callers that face possibly multimodal objectives seed it with a coarse
// grid scan first. Returns (argmax, max).
template <class F>
std::pair<double, double> golden_max(F&& f, double lo, double hi,
                                     int iters = 90) {
  constexpr double kPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kPhi * (b - a);
  double x2 = a + kPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iters && b - a > 0.0; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kPhi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kPhi * (b - a);
      f1 = f(x1);
    }
  }
  const double xm = 0.5 * (a + b);
  const double fm = f(xm);
  if (fm >= f1 && fm >= f2) return {xm, fm};
  return f1 >= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

// Grid scan followed by golden refinement around every local maximum of the
// scan. Handles the convex-plus-concave objectives that show up in the
// budget-split searches, where plain golden section could lock onto the
// wrong hump.
template <class F>
std::pair<double, double> grid_refine_max(F&& f, double lo, double hi,
                                          int grid = 129) {
  if (!(hi > lo)) return {lo, f(lo)};
  std::vector<double> xs(grid), fs(grid);
  for (int i = 0; i < grid; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / (grid - 1);
    fs[i] = f(xs[i]);
  }
  double best_x = xs[0], best_f = fs[0];
  for (int i = 0; i < grid; ++i) {
    const bool local_max = (i == 0 || fs[i] >= fs[i - 1]) &&
                           (i == grid - 1 || fs[i] >= fs[i + 1]);
    if (!local_max) continue;
    const double a = xs[std::max(0, i - 1)];
    const double b = xs[std::min(grid - 1, i + 1)];
    auto [x, v] = golden_max(f, a, b);
    if (v > best_f) {
      best_f = v;
      best_x = x;
    }
  }
  return {best_x, best_f};
}

namespace detail {

template <class F>
double adaptive_simpson(F&& f, double a, double m, double b, double fa,
                        double fm, double fb, double whole, double tol,
                        int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Second condition is a floating-point noise floor: once the correction is
  // at the rounding level of the panel integrals themselves, further splits
  // only chase noise, and with a misjudged tol they would do so on every
  // panel at once.
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol ||
      std::abs(delta) <= 1e-14 * (std::abs(left) + std::abs(right))) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, lm, m, fa, flm, fm, left, 0.5 * tol,
                          depth - 1) +
         adaptive_simpson(f, m, rm, b, fm, frm, fb, right, 0.5 * tol,
                          depth - 1);
}

}  // namespace detail

// Integral of f over [a, b] by adaptive Simpson with an absolute tolerance.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double abs_tol,
                          int depth = 48) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson(f, a, m, b, fa, fm, fb, whole, abs_tol,
                                  depth);
}

// log of the integral of exp(phi) over [lo, hi]. phi may return -inf. The
// integrand is shifted by the maximum found on a scan grid, so the result is
// immune to overflow; adaptive refinement then resolves peaks narrower than
// the scan spacing. Returns -inf when the integrand vanishes.
template <class F>
double log_integral_exp(F&& phi, double lo, double hi, double rel_tol = 1e-11,
                        int scan = 257) {
  if (!(hi > lo)) return -kInf;
  std::vector<double> scanned(scan);
  auto rescan = [&](double a, double b) {
    double peak = -kInf;
    for (int i = 0; i < scan; ++i) {
      const double x = a + (b - a) * static_cast<double>(i) / (scan - 1);
      scanned[i] = phi(x);
      if (std::isfinite(scanned[i]) && scanned[i] > peak) peak = scanned[i];
    }
    return peak;
  };
  double shift = rescan(lo, hi);
  if (!std::isfinite(shift)) return -kInf;
  // Clip to the scan hull of points within 60 nats of the peak, padded by
  // one spacing. What lies outside contributes under e^-60 of the total,
  // yet dead stretches are not free: when the mass hides in the corner of
  // one panel, the refinement stage pays heavily to resolve it.
  {
    int i0 = 0, i1 = scan - 1;
    while (scanned[i0] < shift - 60.0) ++i0;
    while (scanned[i1] < shift - 60.0) --i1;
    if (i0 > 0 || i1 < scan - 1) {
      const double step = (hi - lo) / (scan - 1);
      const double clipped_lo = lo + step * std::max(0, i0 - 1);
      const double clipped_hi = lo + step * std::min(scan - 1, i1 + 1);
      lo = clipped_lo;
      hi = clipped_hi;
      shift = rescan(lo, hi);
    }
  }
  auto g = [&](double x) {
    const double v = phi(x) - shift;
    return v < -745.0 ? 0.0 : std::exp(v);
  };
  // Scale estimate from the scan itself; it only needs to be right to a
  // small factor, since it just sets the stopping tolerance below.
  double trap = 0.0;
  for (int i = 0; i < scan; ++i) {
    const double v = scanned[i] - shift;
    const double gi = v < -745.0 ? 0.0 : std::exp(v);
    trap += (i == 0 || i == scan - 1) ? 0.5 * gi : gi;
  }
  trap *= (hi - lo) / (scan - 1);
  const double tol = std::max(trap, 1e-300) * rel_tol;
  // Composite pass with the scan points as panel boundaries. A lone panel
  // spanning the whole range can put all of its samples past a narrow peak
  // and pass its own error test without ever seeing the mass; anchoring the
  // panels to the scan guarantees the resolution the caller asked for.
  const double ptol = tol / static_cast<double>(scan - 1);
  double val = 0.0;
  for (int i = 0; i + 1 < scan; ++i) {
    const double x0 = lo + (hi - lo) * static_cast<double>(i) / (scan - 1);
    const double x1 =
        lo + (hi - lo) * static_cast<double>(i + 1) / (scan - 1);
    val += integrate_adaptive(g, x0, x1, ptol);
  }
  if (!(val > 0.0)) return -kInf;
  return shift + std::log(val);
}

// Streaming log-sum-exp; order-dependent but deterministic for a fixed
// sequence. add(-inf) is a no-op by construction.
class LogSumExp {
 public:
  void add(double x) noexcept {
    if (x == -kInf) return;
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = (max_ == -kInf) ? 1.0 : sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }

  // log(sum of exp(x_k)); -inf when nothing was added.
  double value() const noexcept {
    if (max_ == -kInf) return -kInf;
    return max_ + std::log(sum_);
  }

 private:
  double max_ = -kInf;
  double sum_ = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for a binomial proportion, 95% by default.
inline Interval wilson_interval(std::uint64_t hits, std::uint64_t n,
                                double z = 1.959963984540054) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = ph + z2 / (2.0 * nn);
  const double half =
      z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn));
  // center and half agree exactly at the degenerate counts, so the bound is
  // zero (or one) in exact arithmetic; the subtraction just leaves dust.
  const double lo = hits == 0 ? 0.0 : std::max(0.0, (center - half) / denom);
  const double hi = hits == n ? 1.0 : std::min(1.0, (center + half) / denom);
  return {lo, hi};
}

// Linear-interpolation quantile (the common "type 7" rule) of an unsorted
// sample. q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  const double w = pos - static_cast<double>(i);
  return v[i] * (1.0 - w) + v[i + 1] * w;
}

inline double median_sorted(const std::vector<double>& sorted) {
  const std::size_t n = sorted.size();
  if (n == 0) throw std::invalid_argument("median of empty sample");
  return (n % 2 == 1) ? sorted[n / 2]
                      : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

}  // namespace quadchaos
