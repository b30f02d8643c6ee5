#include "h2nmf/endmembers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "h2nmf/assignment.hpp"
#include "h2nmf/error.hpp"

namespace h2nmf {

Rank1Pair rank1_signature(const Matrix& m, const IndexSet& cluster, const linalg::IterationOptions& opts) {
  if (cluster.empty()) fail(ErrorCode::kDomain, "empty cluster");
  const Matrix block = gather_columns(m, cluster);
  Rank1Pair p;
  if (block.rows() == 0) fail(ErrorCode::kDomain, "no bands");
  const linalg::TruncatedSvd t = linalg::truncated_svd(block, 1, opts);
  p.u = t.u.col(0);
  p.v = t.sigma(0) * t.v.col(0);
  if (p.u.sum() < 0.0) {
    p.u = -p.u;
    p.v = -p.v;
  }
  // Perron-Frobenius: the exact pair is nonnegative; negatives are roundoff.
  p.u = p.u.cwiseMax(0.0);
  p.v = p.v.cwiseMax(0.0);
  return p;
}

double mrsa(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) fail(ErrorCode::kInvalidArgument, "mrsa: length mismatch");
  if (x.size() == 0) fail(ErrorCode::kDomain, "zero mean-removed norm");
  Vector a = x.array() - x.mean();
  Vector b = y.array() - y.mean();
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::kDomain, "zero mean-removed norm");
  a /= na;
  b /= nb;
  // Same angle as acos(<a, b>) but without its loss of accuracy near 0 and pi.
  const double angle = 2.0 * std::atan2((a - b).norm(), (a + b).norm());
  return std::clamp(angle / std::numbers::pi, 0.0, 1.0);
}

namespace {

bool is_constant(const Vector& v) {
  return v.size() == 0 || (v.array() == v(0)).all();
}

}  // namespace

EndmemberSet extract_pure_pixels(const ClusterTree& tree, const linalg::IterationOptions& opts) {
  const Matrix& m = tree.data();
  EndmemberSet out;
  out.leaf_ids = tree.leaves();
  out.signatures.resize(m.rows(), static_cast<Eigen::Index>(out.leaf_ids.size()));
  for (std::size_t k = 0; k < out.leaf_ids.size(); ++k) {
    const IndexSet& cluster = tree.node(out.leaf_ids[k]).indices;
    const Rank1Pair p = rank1_signature(m, cluster, opts);
    // A flat signature has no mean-removed direction; fall back to the plain angle.
    const bool flat = is_constant(p.u);
    std::size_t best = cluster.front();
    double best_angle = std::numeric_limits<double>::infinity();
    for (std::size_t j : cluster) {
      const Vector col = m.col(static_cast<Eigen::Index>(j));
      if (is_constant(col)) continue;
      const double angle = flat ? std::acos(std::clamp(p.u.dot(col) / col.norm(), -1.0, 1.0)) : mrsa(p.u, col);
      if (angle < best_angle) {
        best_angle = angle;
        best = j;
      }
    }
    out.pixel_indices.push_back(best);
    out.signatures.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(best));
  }
  out.abundances = abundance_maps(m, out.signatures);
  return out;
}

MatchResult match_and_score(const Matrix& extracted, const Matrix& truth) {
  if (extracted.rows() != truth.rows() || extracted.cols() != truth.cols())
    fail(ErrorCode::kInvalidArgument, "match_and_score: dimension mismatch");
  const Eigen::Index r = truth.cols();
  Matrix cost(r, r);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j) cost(i, j) = mrsa(truth.col(i), extracted.col(j));

  MatchResult out;
  out.permutation = min_cost_assignment(cost);
  for (Eigen::Index i = 0; i < r; ++i) {
    out.mrsa.push_back(cost(i, static_cast<Eigen::Index>(out.permutation[static_cast<std::size_t>(i)])));
    out.average += out.mrsa.back();
  }
  if (r > 0) out.average /= static_cast<double>(r);
  return out;
}

Vector nnls_active_set(const Matrix& gram, const Vector& c) {
  const Eigen::Index r = c.size();
  Vector x = Vector::Zero(r);
  std::vector<bool> passive(static_cast<std::size_t>(r), false);
  const double tol = 1e-13 * std::max({1.0, c.cwiseAbs().maxCoeff(), gram.cwiseAbs().maxCoeff()});

  // Solves G_PP z_P = c_P with z = 0 off P.
  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < r; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    const auto p = static_cast<Eigen::Index>(idx.size());
    Matrix gp(p, p);
    Vector cp(p);
    for (Eigen::Index a = 0; a < p; ++a) {
      cp(a) = c(idx[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < p; ++b) gp(a, b) = gram(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    const Vector zp = gp.ldlt().solve(cp);
    Vector z = Vector::Zero(r);
    for (Eigen::Index a = 0; a < p; ++a) z(idx[static_cast<std::size_t>(a)]) = zp(a);
    return z;
  };

  for (int outer = 0; outer < 3 * static_cast<int>(r) + 10; ++outer) {
    const Vector w = c - gram * x;
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < r; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best) {
        best = w(j);
        t = j;
      }
    }
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = true;

    for (int inner = 0; inner < 3 * static_cast<int>(r) + 10; ++inner) {
      const Vector z = solve_passive();
      bool feasible = true;
      for (Eigen::Index j = 0; j < r; ++j)
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
      if (feasible) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < r; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          alpha = std::min(alpha, x(j) / (x(j) - z(j)));
        }
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < r; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
  }
  return x.cwiseMax(0.0);
}

Matrix abundance_maps(const Matrix& m, const Matrix& signatures) {
  if (signatures.cols() < 1) fail(ErrorCode::kDomain, "abundance_maps needs at least one signature");
  if (signatures.rows() != m.rows()) fail(ErrorCode::kInvalidArgument, "abundance_maps: band mismatch");
  const Matrix gram = signatures.transpose() * signatures;
  const Matrix c = signatures.transpose() * m;
  Matrix h(signatures.cols(), m.cols());
  for (Eigen::Index i = 0; i < m.cols(); ++i) h.col(i) = nnls_active_set(gram, c.col(i));
  return h;
}

}  // namespace h2nmf
