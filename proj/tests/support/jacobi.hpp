#pragma once

// Test-only singular value oracle: one-sided Jacobi rotations on the
// columns. Slow and simple on purpose, so the power-iteration code in the
// library is checked against something with a different failure mode.

#include <cmath>
#include <cstddef>
#include <vector>

#include "quadchaos/matrix.hpp"

namespace quadchaos::testsupport {

inline double jacobi_sigma_max(const CoeffMatrix& A, int sweeps = 60) {
  const std::size_t n = A.rows(), m = A.cols();
  // Work on B = A as column vectors; rotations orthogonalize column pairs.
  std::vector<std::vector<double>> col(m, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) col[j][i] = A(i, j);
  }
  auto dot = [&](std::size_t p, std::size_t q) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += col[p][i] * col[q][i];
    return s;
  };
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        const double apq = dot(p, q);
        const double app = dot(p, p), aqq = dot(q, q);
        off = std::max(off, std::abs(apq));
        if (std::abs(apq) <= 1e-15 * std::sqrt(app * aqq) || apq == 0.0) {
          continue;
        }
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = col[p][i], vq = col[q][i];
          col[p][i] = c * vp - s * vq;
          col[q][i] = s * vp + c * vq;
        }
      }
    }
    if (off < 1e-14) break;
  }
  double best = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    best = std::max(best, std::sqrt(dot(j, j)));
  }
  return best;
}

}  // namespace quadchaos::testsupport
