#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "h2nmf/matrix.hpp"

namespace h2nmf::linalg {

// Stopping policy shared by the power and subspace iterations.
struct IterationOptions {
  double tolerance = 1e-10;  // relative change of the sigma estimate
  int max_iterations = 1000;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

// Leading k singular triplets, sigma sorted in decreasing order.
struct TruncatedSvd {
  Matrix u;      // m x k, orthonormal columns
  Vector sigma;  // k
  Matrix v;      // n x k, orthonormal columns
  bool converged = true;
  int iterations = 0;
};

struct Svd2 {
  Vector u1, u2;
  Vector v1, v2;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  bool converged = true;
};

// sigma_1(M)^2, by power iteration on the smaller of M M^T and M^T M.
// Throws kDomain on an empty column set.
double leading_sigma_sq(const Matrix& m, const IterationOptions& opts = {});
double leading_sigma_sq(const Matrix& m, std::span<const std::size_t> cols,
                        const IterationOptions& opts = {});

// Rank-k truncated SVD by block subspace iteration with Rayleigh-Ritz on the
// Gram matrix of the smaller side (M M^T when m <= n, M^T M otherwise).
//
// Working through the Gram matrix costs 2mn + O(m^2) per pass but squares
// the condition number: singular values below ~1e-8 * sigma_1 are resolved
// only to absolute accuracy ~1e-8 * sigma_1. Singular vectors belonging to
// numerically zero singular values are completed to an orthonormal set.
TruncatedSvd truncated_svd(const Matrix& m, int k, const IterationOptions& opts = {});

// Two leading singular triplets. Requires at least 1 row and 2 columns.
// The all-zero matrix yields sigma1 = sigma2 = 0 with arbitrary orthonormal
// vectors.
Svd2 svd2(const Matrix& m, const IterationOptions& opts = {});

// Successive projection algorithm: r times, pick the column of the residual
// with the largest Euclidean norm (smallest index on ties) and project the
// residual onto the orthogonal complement of that column. Returns column
// indices in extraction order; all distinct.
std::vector<std::size_t> spa(const Matrix& x, std::size_t r);

using Matrix2 = Eigen::Matrix<double, Eigen::Dynamic, 2>;

// argmin_{x >= 0} ||A x - b||_2 for a two-column A. A zero column gets a zero
// coefficient.
Eigen::Vector2d nnls2(const Matrix2& a, const Vector& b);

// Same problem expressed through G = A^T A and c = A^T b.
Eigen::Vector2d nnls2_gram(const Eigen::Matrix2d& gram, const Eigen::Vector2d& atb);

// H(:, i) = nnls2(W, M(:, i)) for every column.
Matrix nnls_columns(const Matrix2& w, const Matrix& m);

}  // namespace h2nmf::linalg
