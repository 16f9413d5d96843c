#pragma once

// Frozen empirical constants. The deterministic estimates are two-sided
// only up to unspecified universal constants, so the artifact measures the
// actual ratios once on a training sweep, freezes them here, and validates
// held-out instances against the recorded windows. The identity defaults
// make tail_threshold a plain Markov statement until a pack is loaded.

#include <cstdint>
#include <map>
#include <string>

namespace quadchaos {

struct RatioWindow {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x, double slack = 0.0) const {
    return x >= lo * (1.0 - slack) && x <= hi * (1.0 + slack);
  }
  double spread() const { return lo > 0.0 ? hi / lo : 0.0; }
};

struct CalibrationPack {
  // Tail conversion constants: P(|S| >= C_up * total) <= e^{-p} and
  // P(|S| >= c_low * total) >= e^{-c_exp * p} on held-out instances.
  double C_up = 1.0;
  double c_low = 1.0;
  double c_exp = 1.0;

  // Allowed Monte-Carlo overshoot when re-checking frozen windows.
  double mc_margin = 1.25;

  // Deterministic moment growth: total(2p) <= K * total(p), per model.
  std::map<std::string, double> growth_K;

  // MC moment / deterministic total, per "model/family" cell.
  std::map<std::string, RatioWindow> ratio_windows;

  // Single-sequence vs two-sequence MC moment ratio.
  RatioWindow decoupling_window;

  // MC moment of linear forms / linear_norm value (log-concave-tail check).
  RatioWindow linear_window;

  // Sharp linear estimator / MC moment of linear forms.
  RatioWindow latala_window;

  // Provenance of the calibration run.
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;
};

}  // namespace quadchaos
