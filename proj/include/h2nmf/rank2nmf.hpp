#pragma once

#include <array>
#include <cstddef>

#include "h2nmf/linalg.hpp"
#include "h2nmf/matrix.hpp"

namespace h2nmf {

// Nonnegative rank-two factorization M ~ W H.
struct Rank2Factors {
  linalg::Matrix2 w;                      // m x 2, entrywise >= 0
  Matrix h;                               // 2 x n, entrywise >= 0
  std::array<std::size_t, 2> selected{};  // columns of M that seeded W
  double residual_fro = 0.0;              // ||M - W H||_F
};

// Rank-two NMF for data following the linear mixing model:
//   1. project M on its best rank-two subspace, X = U^T M (= S V^T);
//   2. pick two columns of X with SPA;
//   3. W = max(0, U X(:, K)), the clamped rank-two approximation of those
//      columns;
//   4. H = argmin_{Y >= 0} ||M - W Y||_F, one 2-variable NNLS per column.
// Exact (zero residual) when M has rank two and its columns sum to one, or
// when M = W [I_2, H'] Pi with the columns of H' summing to at most one.
//
// Throws kDomain for fewer than two columns and kDegenerateFactors when both
// selected columns clamp to zero.
Rank2Factors rank2_nmf(const Matrix& m, const linalg::IterationOptions& opts = {});

// Sufficient condition for the best rank-two approximation A of
// a nonnegative M to be nonnegative: min_ij M_ij >= sigma_3(M).
struct NonnegRank2Report {
  double min_entry = 0.0;
  double sigma3_bound = 0.0;   // ||M - A||_2, which is >= sigma_3(M)
  bool condition_holds = false;
  double fraction_nonneg = 0.0;  // of the entries of A
};

NonnegRank2Report check_nonneg_rank2_condition(const Matrix& m,
                                               const linalg::IterationOptions& opts = {});

}  // namespace h2nmf
