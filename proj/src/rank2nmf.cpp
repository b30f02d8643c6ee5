#include "h2nmf/rank2nmf.hpp"

#include <algorithm>
#include <cmath>

#include "h2nmf/error.hpp"

namespace h2nmf {
namespace {

// Rank-two basis and coordinates X = U^T M.
struct Projection {
  Matrix u;  // m x 2
  Matrix x;  // 2 x n
};

Projection project_rank2(const Matrix& m, const linalg::IterationOptions& opts) {
  const linalg::Svd2 s = linalg::svd2(m, opts);
  Projection p;
  p.u.resize(m.rows(), 2);
  p.u.col(0) = s.u1;
  p.u.col(1) = s.u2;
  p.x = p.u.transpose() * m;
  return p;
}

// If SPA's two picks are parallel in the projected plane, take the column
// whose direction is farthest from the first pick instead.
std::size_t second_pick(const Matrix& x, std::size_t first, std::size_t proposed) {
  const Vector a = x.col(static_cast<Eigen::Index>(first));
  const Vector b = x.col(static_cast<Eigen::Index>(proposed));
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return proposed;
  if (std::abs(a.dot(b)) / (na * nb) < 1.0 - 1e-12) return proposed;

  std::size_t best = proposed;
  double best_cos = 1.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (static_cast<std::size_t>(j) == first) continue;
    const double nj = x.col(j).norm();
    if (nj == 0.0) continue;
    const double c = std::abs(a.dot(x.col(j))) / (na * nj);
    if (c < best_cos) {
      best_cos = c;
      best = static_cast<std::size_t>(j);
    }
  }
  return best;
}

}  // namespace

Rank2Factors rank2_nmf(const Matrix& m, const linalg::IterationOptions& opts) {
  if (m.cols() < 2) fail(ErrorCode::kDomain, "rank2_nmf requires at least two columns");

  const Projection p = project_rank2(m, opts);
  const std::vector<std::size_t> k = linalg::spa(p.x, 2);

  Rank2Factors f;
  f.selected = {k[0], second_pick(p.x, k[0], k[1])};
  f.w.resize(m.rows(), 2);
  for (int c = 0; c < 2; ++c) {
    f.w.col(c) = (p.u * p.x.col(static_cast<Eigen::Index>(f.selected[static_cast<std::size_t>(c)])))
                     .cwiseMax(0.0);
  }
  if (f.w.col(0).squaredNorm() == 0.0 && f.w.col(1).squaredNorm() == 0.0)
    fail(ErrorCode::kDegenerateFactors, "degenerate factors");

  f.h = linalg::nnls_columns(f.w, m);
  f.residual_fro = (m - f.w * f.h).norm();
  return f;
}

NonnegRank2Report check_nonneg_rank2_condition(const Matrix& m,
                                               const linalg::IterationOptions& opts) {
  NonnegRank2Report rep;
  if (m.size() == 0) return rep;
  rep.min_entry = m.minCoeff();

  Matrix approx;
  if (m.cols() >= 2) {
    const linalg::Svd2 s = linalg::svd2(m, opts);
    approx = s.sigma1 * s.u1 * s.v1.transpose();
    if (m.rows() >= 2) approx += s.sigma2 * s.u2 * s.v2.transpose();
  } else {
    approx = m;
  }

  if (std::min(m.rows(), m.cols()) >= 3) {
    rep.sigma3_bound = std::sqrt(linalg::leading_sigma_sq(Matrix(m - approx), opts));
  }
  rep.condition_holds = rep.min_entry >= rep.sigma3_bound;

  // Entries within roundoff of zero count as nonnegative.
  const double slack = 1e-12 * m.cwiseAbs().maxCoeff();
  const auto nonneg = (approx.array() >= -slack).count();
  rep.fraction_nonneg = static_cast<double>(nonneg) / static_cast<double>(approx.size());
  return rep;
}

}  // namespace h2nmf
