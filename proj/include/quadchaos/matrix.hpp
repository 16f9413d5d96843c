#pragma once

// Dense coefficient matrices at desk scale (hundreds of rows), plus the
// handful of linear-algebra pieces the estimators need: row and column
// norms, the nonincreasing rearrangement, and a power-iteration operator
// norm with a residual certificate. Structure flags (symmetric, zero
// diagonal) are declared by the caller and validated here, never inferred.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadchaos/rng.hpp"

namespace quadchaos {

class CoeffMatrix {
 public:
  CoeffMatrix(std::size_t rows, std::size_t cols, std::vector<double> data,
              bool symmetric = false, bool zero_diag = false)
      : rows_(rows), cols_(cols), a_(std::move(data)),
        symmetric_(symmetric), zero_diag_(zero_diag) {
    if (rows_ == 0 || cols_ == 0) {
      throw std::invalid_argument("matrix must be nonempty");
    }
    if (a_.size() != rows_ * cols_) {
      throw std::invalid_argument("matrix data size mismatch");
    }
    for (double v : a_) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("matrix entries must be finite");
      }
    }
    if (symmetric_) {
      if (rows_ != cols_) {
        throw std::invalid_argument("symmetric flag on a non-square matrix");
      }
      for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = i + 1; j < cols_; ++j) {
          if ((*this)(i, j) != (*this)(j, i)) {
            throw std::invalid_argument("symmetric flag contradicts entries");
          }
        }
      }
    }
    if (zero_diag_) {
      if (rows_ != cols_) {
        throw std::invalid_argument("zero_diag flag on a non-square matrix");
      }
      for (std::size_t i = 0; i < rows_; ++i) {
        if ((*this)(i, i) != 0.0) {
          throw std::invalid_argument("zero_diag flag contradicts entries");
        }
      }
    }
  }

  static CoeffMatrix from_rows(const std::vector<std::vector<double>>& rows,
                               bool symmetric = false, bool zero_diag = false) {
    if (rows.empty() || rows.front().empty()) {
      throw std::invalid_argument("matrix must be nonempty");
    }
    const std::size_t m = rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * m);
    for (const auto& r : rows) {
      if (r.size() != m) throw std::invalid_argument("ragged matrix rows");
      data.insert(data.end(), r.begin(), r.end());
    }
    return CoeffMatrix(rows.size(), m, std::move(data), symmetric, zero_diag);
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool symmetric() const noexcept { return symmetric_; }
  bool zero_diag() const noexcept { return zero_diag_; }
  const std::vector<double>& data() const noexcept { return a_; }

  double operator()(std::size_t i, std::size_t j) const noexcept {
    return a_[i * cols_ + j];
  }

  std::vector<double> row_l2_norms() const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * (*this)(i, j);
      out[i] = std::sqrt(s);
    }
    return out;
  }

  std::vector<double> col_l2_norms() const {
    std::vector<double> out(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) {
        out[j] += (*this)(i, j) * (*this)(i, j);
      }
    }
    for (double& v : out) v = std::sqrt(v);
    return out;
  }

  double frobenius() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
  }

  double abs_max() const {
    double s = 0.0;
    for (double v : a_) s = std::max(s, std::abs(v));
    return s;
  }

  double abs_sum() const {
    double s = 0.0;
    for (double v : a_) s += std::abs(v);
    return s;
  }

  std::vector<double> matvec(const std::vector<double>& x) const {
    if (x.size() != cols_) throw std::invalid_argument("matvec size mismatch");
    std::vector<double> y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  std::vector<double> tmatvec(const std::vector<double>& x) const {
    if (x.size() != rows_) throw std::invalid_argument("tmatvec size mismatch");
    std::vector<double> y(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) y[j] += (*this)(i, j) * x[i];
    }
    return y;
  }

  double quad_form(const std::vector<double>& x,
                   const std::vector<double>& y) const {
    if (x.size() != rows_ || y.size() != cols_) {
      throw std::invalid_argument("quad_form size mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) row += (*this)(i, j) * y[j];
      s += x[i] * row;
    }
    return s;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> a_;
  bool symmetric_, zero_diag_;
};

// Magnitudes sorted nonincreasing; ties keep their original order.
inline std::vector<double> nonincreasing_rearrangement(
    const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]);
  std::stable_sort(out.begin(), out.end(), std::greater<double>());
  return out;
}

struct OperatorNormResult {
  double value = 0.0;
  std::vector<double> right_vector;  // unit vector attaining ||A v|| = value
  int iterations = 0;
  double residual = 0.0;  // ||A^T A v - value^2 v||, a convergence certificate
};

// Largest singular value by power iteration on A^T A. Three deterministic
// restarts guard against an unlucky start that is orthogonal to the top
// singular space; the best certificate wins.
inline OperatorNormResult operator_norm(const CoeffMatrix& A,
                                        double tol = 1e-13,
                                        int max_iters = 10000) {
  const std::size_t m = A.cols();
  OperatorNormResult best;
  best.right_vector.assign(m, 0.0);
  best.right_vector[0] = 1.0;
  if (A.frobenius() == 0.0) return best;

  for (int restart = 0; restart < 3; ++restart) {
    std::vector<double> v(m);
    if (restart == 0) {
      // Column norms make a good deterministic start.
      v = A.col_l2_norms();
    } else {
      RngStream rng(0x5eedu, 0xa11du, static_cast<std::uint64_t>(restart));
      for (auto& x : v) x = rng.next_gaussian();
    }
    double nv = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (!(nv > 0.0)) continue;
    for (auto& x : v) x /= nv;

    double sigma = 0.0;
    int it = 0;
    for (; it < max_iters; ++it) {
      std::vector<double> w = A.tmatvec(A.matvec(v));
      const double nw =
          std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
      if (!(nw > 0.0)) break;
      for (auto& x : w) x /= nw;
      const double new_sigma = std::sqrt(nw);
      const bool done = std::abs(new_sigma - sigma) <=
                        tol * std::max(1.0, new_sigma);
      sigma = new_sigma;
      v.swap(w);
      if (done && it > 2) break;
    }

    std::vector<double> Av = A.matvec(v);
    const double val =
        std::sqrt(std::inner_product(Av.begin(), Av.end(), Av.begin(), 0.0));
    std::vector<double> res = A.tmatvec(Av);
    double rnorm = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = res[j] - val * val * v[j];
      rnorm += d * d;
    }
    rnorm = std::sqrt(rnorm);
    if (val > best.value) {
      best.value = val;
      best.right_vector = v;
      best.iterations = it;
      best.residual = rnorm;
    }
  }
  return best;
}

// Cheap certified upper bound on the operator norm:
// min(frobenius, sqrt(max column sum * max row sum)) dominates sigma_max.
inline double operator_norm_upper(const CoeffMatrix& A) {
  double max_row = 0.0;
  std::vector<double> col_sums(A.cols(), 0.0);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < A.cols(); ++j) {
      const double v = std::abs(A(i, j));
      row += v;
      col_sums[j] += v;
    }
    max_row = std::max(max_row, row);
  }
  const double max_col = *std::max_element(col_sums.begin(), col_sums.end());
  return std::min(A.frobenius(), std::sqrt(max_row * max_col));
}

enum class MatrixFamily { diagonal, rank1, random_full, sparse };

inline const char* matrix_family_name(MatrixFamily f) {
  switch (f) {
    case MatrixFamily::diagonal: return "diagonal";
    case MatrixFamily::rank1: return "rank1";
    case MatrixFamily::random_full: return "random_full";
    case MatrixFamily::sparse: return "sparse";
  }
  return "?";
}

inline MatrixFamily matrix_family_from_name(const std::string& s) {
  if (s == "diagonal") return MatrixFamily::diagonal;
  if (s == "rank1") return MatrixFamily::rank1;
  if (s == "random_full") return MatrixFamily::random_full;
  if (s == "sparse") return MatrixFamily::sparse;
  throw std::invalid_argument("unknown matrix family: " + s);
}

// Seeded test-matrix generator. Every family produces a nonzero matrix;
// the symmetric variant returns a symmetric zero-diagonal matrix (and
// rejects the diagonal family, whose symmetric zero-diagonal version would
// be identically zero).
inline CoeffMatrix generate_matrix(MatrixFamily family, std::size_t n,
                                   std::size_t m, std::uint64_t seed,
                                   bool symmetric_zero_diag = false) {
  if (symmetric_zero_diag && n != m) {
    throw std::invalid_argument("symmetric generator needs a square shape");
  }
  if (symmetric_zero_diag && n < 2) {
    throw std::invalid_argument("symmetric zero-diagonal needs n >= 2");
  }
  RngStream rng(seed, 0xc0ffu, static_cast<std::uint64_t>(family));
  std::vector<double> data(n * m, 0.0);
  auto at = [&](std::size_t i, std::size_t j) -> double& {
    return data[i * m + j];
  };
  switch (family) {
    case MatrixFamily::diagonal: {
      if (symmetric_zero_diag) {
        throw std::invalid_argument(
            "diagonal family has no symmetric zero-diagonal variant");
      }
      const std::size_t k = std::min(n, m);
      for (std::size_t i = 0; i < k; ++i) at(i, i) = rng.next_gaussian();
      // A zero matrix would make ratio statistics meaningless downstream.
      if (std::all_of(data.begin(), data.end(),
                      [](double v) { return v == 0.0; })) {
        at(0, 0) = 1.0;
      }
      break;
    }
    case MatrixFamily::rank1: {
      std::vector<double> u(n), v(m);
      for (auto& x : u) x = rng.next_gaussian();
      if (symmetric_zero_diag) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            at(i, j) = i == j ? 0.0 : u[i] * u[j];
          }
        }
      } else {
        for (auto& x : v) x = rng.next_gaussian();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) at(i, j) = u[i] * v[j];
        }
      }
      break;
    }
    case MatrixFamily::random_full: {
      for (auto& x : data) x = rng.next_gaussian();
      if (symmetric_zero_diag) {
        for (std::size_t i = 0; i < n; ++i) {
          at(i, i) = 0.0;
          for (std::size_t j = i + 1; j < m; ++j) {
            const double v = 0.5 * (at(i, j) + at(j, i));
            at(i, j) = v;
            at(j, i) = v;
          }
        }
      }
      break;
    }
    case MatrixFamily::sparse: {
      const double density = std::min(1.0, 4.0 / static_cast<double>(
                                                     std::max(n, m)));
      bool any = false;
      if (symmetric_zero_diag) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = i + 1; j < m; ++j) {
            const bool keep = rng.next_uniform() < density;
            const double g = rng.next_gaussian();
            if (keep) {
              at(i, j) = g;
              at(j, i) = g;
              any = true;
            }
          }
        }
        if (!any) {
          at(0, 1) = 1.0;
          at(1, 0) = 1.0;
        }
      } else {
        for (auto& x : data) {
          const bool keep = rng.next_uniform() < density;
          const double g = rng.next_gaussian();
          if (keep) {
            x = g;
            any = true;
          }
        }
        if (!any) at(0, 0) = 1.0;
      }
      break;
    }
  }
  return CoeffMatrix(n, m, std::move(data), symmetric_zero_diag,
                     symmetric_zero_diag);
}

}  // namespace quadchaos
