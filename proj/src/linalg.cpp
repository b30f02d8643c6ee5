#include "h2nmf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "h2nmf/error.hpp"

namespace h2nmf::linalg {
namespace {

// Symmetric Gram matrix A A^T, using a rank update (half the flops of a
// general product).
Matrix gram_rows(const Matrix& a) {
  Matrix g = Matrix::Zero(a.rows(), a.rows());
  g.selfadjointView<Eigen::Lower>().rankUpdate(a);
  return g.selfadjointView<Eigen::Lower>();
}

Matrix gram_cols(const Matrix& a) {
  Matrix g = Matrix::Zero(a.cols(), a.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  return g.selfadjointView<Eigen::Lower>();
}

Matrix orthonormalize(const Matrix& z) {
  Eigen::HouseholderQR<Matrix> qr(z);
  return qr.householderQ() * Matrix::Identity(z.rows(), z.cols());
}

struct EigenPairs {
  Matrix vectors;  // d x k
  Vector values;   // k, decreasing
  bool converged = false;
  int iterations = 0;
};

// Top-k eigenpairs of a symmetric positive semidefinite matrix by block
// subspace iteration with Rayleigh-Ritz extraction.
EigenPairs top_eigenpairs(const Matrix& g, int k, const IterationOptions& opts) {
  const Eigen::Index d = g.rows();
  const Eigen::Index p = std::min<Eigen::Index>(d, k + 2);
  EigenPairs out;

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  Matrix q(d, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < d; ++i) q(i, j) = normal(rng);
  q = orthonormalize(q);
  Matrix z = g * q;

  Vector previous = Vector::Constant(k, std::numeric_limits<double>::infinity());
  Vector theta;
  for (int it = 1; it <= std::max(1, opts.max_iterations); ++it) {
    out.iterations = it;
    Matrix t = q.transpose() * z;
    t = 0.5 * (t + t.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(t);
    // Eigen returns ascending eigenvalues; reverse to descending order.
    Matrix s = es.eigenvectors().rowwise().reverse();
    theta = es.eigenvalues().reverse();
    q = (q * s).eval();
    z = (z * s).eval();

    const double top = std::max(theta(0), 0.0);
    double sigma_change = 0.0;
    double residual = 0.0;
    for (int i = 0; i < k; ++i) {
      const double sigma = std::sqrt(std::max(theta(i), 0.0));
      const double prev = std::sqrt(std::max(previous(i), 0.0));
      sigma_change = std::max(sigma_change, std::abs(sigma - prev));
      residual = std::max(residual, (z.col(i) - theta(i) * q.col(i)).norm());
      previous(i) = theta(i);
    }
    // p == d means the Ritz pairs are exact after one pass.
    if (p == d || (sigma_change <= opts.tolerance * std::sqrt(top) &&
                   residual <= opts.tolerance * top)) {
      out.converged = true;
      break;
    }
    q = orthonormalize(z);
    z = g * q;
  }
  out.vectors = q.leftCols(k);
  out.values = theta.head(k).cwiseMax(0.0);
  return out;
}

// Makes the columns of `basis` orthonormal, starting from column `from`.
// Columns whose direction is lost (zero singular value, or swallowed by
// Gram-Schmidt) are replaced with canonical vectors orthogonal to the rest.
void complete_orthonormal(Matrix& basis, Eigen::Index from, const std::vector<bool>& usable) {
  const Eigen::Index d = basis.rows();
  for (Eigen::Index j = from; j < basis.cols(); ++j) {
    Vector v = basis.col(j);
    bool ok = usable[static_cast<std::size_t>(j)];
    if (ok) {
      for (Eigen::Index i = 0; i < j; ++i) v -= basis.col(i).dot(v) * basis.col(i);
      const double nrm = v.norm();
      ok = nrm > 0.5 * basis.col(j).norm() && nrm > 0.0;
      if (ok) v /= nrm;
    }
    if (!ok) {
      for (Eigen::Index e = 0; e < d; ++e) {
        Vector c = Vector::Unit(d, e);
        for (Eigen::Index i = 0; i < j; ++i) c -= basis.col(i).dot(c) * basis.col(i);
        // twice is enough
        for (Eigen::Index i = 0; i < j; ++i) c -= basis.col(i).dot(c) * basis.col(i);
        const double nrm = c.norm();
        if (nrm > 0.5) {
          v = c / nrm;
          break;
        }
      }
    }
    basis.col(j) = v;
  }
}

}  // namespace

double leading_sigma_sq(const Matrix& m, const IterationOptions& opts) {
  if (m.cols() == 0) fail(ErrorCode::kDomain, "empty cluster");
  if (m.rows() == 0) return 0.0;
  if (m.cols() == 1) return m.col(0).squaredNorm();

  const Matrix g = m.rows() <= m.cols() ? gram_rows(m) : gram_cols(m);
  const Eigen::Index d = g.rows();
  if (d == 1) return g(0, 0);

  // The Perron vector of a nonnegative Gram matrix is nonnegative, so a
  // strictly positive start never lies orthogonal to it.
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.5, 1.0);
  Vector x(d);
  for (Eigen::Index i = 0; i < d; ++i) x(i) = unif(rng);
  x.normalize();

  double theta = 0.0;
  for (int it = 0; it < std::max(1, opts.max_iterations); ++it) {
    Vector y = g * x;
    const double next = x.dot(y);
    const double nrm = y.norm();
    if (nrm == 0.0) return 0.0;
    x = y / nrm;
    const bool done = std::abs(next - theta) <= opts.tolerance * std::abs(next);
    theta = next;
    if (done) break;
  }
  return std::max(theta, 0.0);
}

double leading_sigma_sq(const Matrix& m, std::span<const std::size_t> cols,
                        const IterationOptions& opts) {
  if (cols.empty()) fail(ErrorCode::kDomain, "empty cluster");
  return leading_sigma_sq(gather_columns(m, cols), opts);
}

TruncatedSvd truncated_svd(const Matrix& m, int k, const IterationOptions& opts) {
  if (k < 1) fail(ErrorCode::kInvalidArgument, "truncated_svd: k must be >= 1");
  if (m.rows() < 1 || m.cols() < 1) fail(ErrorCode::kDomain, "truncated_svd: empty matrix");
  if (k > std::min(m.rows(), m.cols()))
    fail(ErrorCode::kDomain, "truncated_svd: k exceeds min(m, n)");

  TruncatedSvd out;
  const bool row_side = m.rows() <= m.cols();
  const Matrix g = row_side ? gram_rows(m) : gram_cols(m);
  EigenPairs ep = top_eigenpairs(g, k, opts);
  out.converged = ep.converged;
  out.iterations = ep.iterations;
  out.sigma = ep.values.cwiseSqrt();

  Matrix& known = row_side ? out.u : out.v;
  Matrix& other = row_side ? out.v : out.u;
  known = ep.vectors;
  other = row_side ? Matrix(m.transpose() * known) : Matrix(m * known);

  // Anything below this is indistinguishable from zero through the Gram route.
  const double floor = out.sigma(0) * 1e-12;
  std::vector<bool> usable(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double s = out.sigma(i);
    usable[static_cast<std::size_t>(i)] = s > floor && s > 0.0;
    if (usable[static_cast<std::size_t>(i)]) other.col(i) /= s;
  }
  complete_orthonormal(other, 0, usable);
  return out;
}

Svd2 svd2(const Matrix& m, const IterationOptions& opts) {
  if (m.rows() < 1 || m.cols() < 2)
    fail(ErrorCode::kDomain, "svd2 requires at least 1 row and 2 columns");

  Svd2 out;
  if (m.rows() == 1) {
    // rank <= 1: a single nonzero singular value.
    TruncatedSvd t = truncated_svd(m, 1, opts);
    out.u1 = t.u.col(0);
    out.v1 = t.v.col(0);
    out.sigma1 = t.sigma(0);
    out.u2 = Vector::Zero(1);  // no second unit vector exists in R^1
    Matrix v(m.cols(), 2);
    v.col(0) = out.v1;
    v.col(1).setZero();
    complete_orthonormal(v, 1, {true, false});
    out.v2 = v.col(1);
    out.sigma2 = 0.0;
    out.converged = t.converged;
    return out;
  }
  TruncatedSvd t = truncated_svd(m, 2, opts);
  out.u1 = t.u.col(0);
  out.u2 = t.u.col(1);
  out.v1 = t.v.col(0);
  out.v2 = t.v.col(1);
  out.sigma1 = t.sigma(0);
  out.sigma2 = t.sigma(1);
  out.converged = t.converged;
  return out;
}

std::vector<std::size_t> spa(const Matrix& x, std::size_t r) {
  const std::size_t n = static_cast<std::size_t>(x.cols());
  if (r < 1) fail(ErrorCode::kDomain, "spa: r must be >= 1");
  if (r > n) fail(ErrorCode::kDomain, "spa: r exceeds the number of columns");

  Matrix residual = x;
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> picked;
  picked.reserve(r);
  for (std::size_t step = 0; step < r; ++step) {
    std::size_t best = n;
    double best_norm = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (taken[j]) continue;
      const double nrm = residual.col(static_cast<Eigen::Index>(j)).squaredNorm();
      if (nrm > best_norm) {
        best_norm = nrm;
        best = j;
      }
    }
    taken[best] = true;
    picked.push_back(best);
    if (best_norm > 0.0) {
      const Vector pivot = residual.col(static_cast<Eigen::Index>(best));
      const Eigen::RowVectorXd coeff = (pivot.transpose() * residual) / best_norm;
      residual.noalias() -= pivot * coeff;
    }
  }
  return picked;
}

Eigen::Vector2d nnls2_gram(const Eigen::Matrix2d& gram, const Eigen::Vector2d& atb) {
  const double a = gram(0, 0);
  const double d = gram(1, 1);
  const double off = gram(0, 1);
  const double det = a * d - off * off;
  if (a > 0.0 && d > 0.0 && det > 1e-14 * a * d) {
    const Eigen::Vector2d x((d * atb(0) - off * atb(1)) / det, (a * atb(1) - off * atb(0)) / det);
    if (x(0) >= 0.0 && x(1) >= 0.0) return x;
  }
  // Active sets {x1 = 0} and {x2 = 0}.
  const Eigen::Vector2d y(0.0, d > 0.0 ? std::max(0.0, atb(1) / d) : 0.0);
  const Eigen::Vector2d z(a > 0.0 ? std::max(0.0, atb(0) / a) : 0.0, 0.0);
  // ||Av - b||^2 - ||b||^2
  auto objective = [&](const Eigen::Vector2d& v) {
    return v.dot(gram * v) - 2.0 * v.dot(atb);
  };
  return objective(y) < objective(z) ? y : z;
}

Eigen::Vector2d nnls2(const Matrix2& a, const Vector& b) {
  if (a.rows() != b.size()) fail(ErrorCode::kInvalidArgument, "nnls2: dimension mismatch");
  const Eigen::Matrix2d gram = a.transpose() * a;
  const Eigen::Vector2d atb = a.transpose() * b;
  return nnls2_gram(gram, atb);
}

Matrix nnls_columns(const Matrix2& w, const Matrix& m) {
  if (w.rows() != m.rows()) fail(ErrorCode::kInvalidArgument, "nnls_columns: dimension mismatch");
  const Eigen::Matrix2d gram = w.transpose() * w;
  const Matrix wtm = w.transpose() * m;
  Matrix h(2, m.cols());
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    h.col(i) = nnls2_gram(gram, wtm.col(i));
  }
  return h;
}

}  // namespace h2nmf::linalg
