#include "quadchaos/matrix.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "quadchaos/rng.hpp"
#include "support/jacobi.hpp"

using namespace quadchaos;

TEST(Matrix, ConstructionAndFlags) {
  const auto A = CoeffMatrix::from_rows({{0, 1}, {1, 0}}, true, true);
  EXPECT_EQ(A.rows(), 2u);
  EXPECT_TRUE(A.symmetric());
  EXPECT_TRUE(A.zero_diag());
  EXPECT_THROW(CoeffMatrix::from_rows({{0, 1}, {2, 0}}, true, false),
               std::invalid_argument);
  EXPECT_THROW(CoeffMatrix::from_rows({{1, 0}, {0, 1}}, false, true),
               std::invalid_argument);
  EXPECT_THROW(CoeffMatrix::from_rows({{1, 2}, {3}}), std::invalid_argument);
  EXPECT_THROW(CoeffMatrix(1, 1, {std::nan("")}), std::invalid_argument);
}

TEST(Matrix, NormsAndProducts) {
  const auto A = CoeffMatrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_NEAR(A.frobenius(), std::sqrt(30.0), 1e-12);
  EXPECT_DOUBLE_EQ(A.abs_max(), 4.0);
  EXPECT_DOUBLE_EQ(A.abs_sum(), 10.0);
  const auto rn = A.row_l2_norms();
  EXPECT_NEAR(rn[0], std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(rn[1], 5.0, 1e-12);
  const auto cn = A.col_l2_norms();
  EXPECT_NEAR(cn[0], std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(cn[1], std::sqrt(20.0), 1e-12);

  const auto y = A.matvec({1.0, -1.0});
  EXPECT_DOUBLE_EQ(y[0], -1.0);
  EXPECT_DOUBLE_EQ(y[1], -1.0);
  const auto yt = A.tmatvec({1.0, -1.0});
  EXPECT_DOUBLE_EQ(yt[0], -2.0);
  EXPECT_DOUBLE_EQ(yt[1], -2.0);
  EXPECT_DOUBLE_EQ(A.quad_form({1.0, 1.0}, {1.0, 1.0}), 10.0);
}

TEST(Matrix, FrobeniusDecomposesOverRows) {
  const auto A = generate_matrix(MatrixFamily::random_full, 7, 5, 3);
  double sum = 0.0;
  for (double r : A.row_l2_norms()) sum += r * r;
  EXPECT_NEAR(A.frobenius(), std::sqrt(sum), 1e-12);
}

TEST(Matrix, RearrangementSorted) {
  const auto r = nonincreasing_rearrangement({-3.0, 1.0, -2.0, 0.0});
  const std::vector<double> want = {3.0, 2.0, 1.0, 0.0};
  EXPECT_EQ(r, want);
}

TEST(Matrix, OperatorNormKnownCases) {
  const auto I = CoeffMatrix::from_rows({{1, 0}, {0, 1}}, true, false);
  EXPECT_NEAR(operator_norm(I).value, 1.0, 1e-10);
  const auto D = CoeffMatrix::from_rows({{3, 0}, {0, -2}});
  EXPECT_NEAR(operator_norm(D).value, 3.0, 1e-10);
  // Rank one: sigma_max = |u||v|.
  const auto R = CoeffMatrix::from_rows({{2, 4}, {1, 2}});
  EXPECT_NEAR(operator_norm(R).value, std::sqrt(5.0) * std::sqrt(5.0), 1e-9);
}

TEST(Matrix, OperatorNormMatchesJacobi) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto family = seed % 2 ? MatrixFamily::random_full
                                 : MatrixFamily::sparse;
    const std::size_t n = 2 + seed % 15;
    const std::size_t m = 2 + (seed * 7) % 15;
    const auto A = generate_matrix(family, n, m, seed);
    const double want = testsupport::jacobi_sigma_max(A);
    const auto got = operator_norm(A);
    EXPECT_NEAR(got.value, want, 1e-8 * std::max(1.0, want))
        << "seed=" << seed << " n=" << n << " m=" << m;
    // The iteration stops once the value stalls at tol = 1e-13; that leaves
    // a vector residual of order sqrt(tol) * sigma^2, not tol * sigma^2
    // (the Rayleigh quotient squares the vector error, the residual does
    // not).
    EXPECT_LE(got.residual, 1e-6 * std::max(1.0, want * want));
  }
}

TEST(Matrix, OperatorNormBounds) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto A = generate_matrix(MatrixFamily::random_full, 6, 9, seed);
    const double op = operator_norm(A).value;
    const double frob = A.frobenius();
    EXPECT_LE(op, frob * (1.0 + 1e-12));
    EXPECT_GE(frob, op);
    EXPECT_LE(frob, std::sqrt(6.0) * op * (1.0 + 1e-9));
    EXPECT_GE(operator_norm_upper(A), op * (1.0 - 1e-12));
  }
}

TEST(Matrix, GeneratorDeterministicAndNonzero) {
  for (const auto family :
       {MatrixFamily::diagonal, MatrixFamily::rank1, MatrixFamily::random_full,
        MatrixFamily::sparse}) {
    const auto A = generate_matrix(family, 5, 5, 42);
    const auto B = generate_matrix(family, 5, 5, 42);
    EXPECT_EQ(A.data(), B.data()) << matrix_family_name(family);
    EXPECT_GT(A.frobenius(), 0.0) << matrix_family_name(family);
    const auto C = generate_matrix(family, 5, 5, 43);
    EXPECT_NE(A.data(), C.data()) << matrix_family_name(family);
  }
}

TEST(Matrix, GeneratorSymmetricVariant) {
  for (const auto family :
       {MatrixFamily::rank1, MatrixFamily::random_full, MatrixFamily::sparse}) {
    const auto A = generate_matrix(family, 6, 6, 9, true);
    EXPECT_TRUE(A.symmetric());
    EXPECT_TRUE(A.zero_diag());
    EXPECT_GT(A.frobenius(), 0.0);
  }
  EXPECT_THROW(generate_matrix(MatrixFamily::diagonal, 4, 4, 1, true),
               std::invalid_argument);
  EXPECT_THROW(generate_matrix(MatrixFamily::random_full, 4, 5, 1, true),
               std::invalid_argument);
}

TEST(Matrix, FamilyNamesRoundTrip) {
  for (const auto family :
       {MatrixFamily::diagonal, MatrixFamily::rank1, MatrixFamily::random_full,
        MatrixFamily::sparse}) {
    EXPECT_EQ(matrix_family_from_name(matrix_family_name(family)), family);
  }
  EXPECT_THROW(matrix_family_from_name("dense"), std::invalid_argument);
}
