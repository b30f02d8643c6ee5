#include "h2nmf/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "h2nmf/error.hpp"
#include "h2nmf/rank2nmf.hpp"

namespace h2nmf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_delta_hat(double delta_hat) {
  if (!(delta_hat > 0.0 && delta_hat < 0.5))
    fail(ErrorCode::kDomain, "delta_hat must lie in (0, 0.5)");
}

double objective_value(double f, double g, SplitObjective objective) {
  if (objective == SplitObjective::kQuadratic) return 4.0 * (f - 0.5) * (f - 0.5) + g * g;
  if (f <= 0.0 || f >= 1.0) return kInf;
  return -std::log(f * (1.0 - f)) + std::exp(g);
}

// F and G evaluated on a sorted copy of x.
struct SortedSample {
  std::vector<double> v;

  double cdf(double delta) const {
    const auto cnt = std::upper_bound(v.begin(), v.end(), delta) - v.begin();
    return static_cast<double>(cnt) / static_cast<double>(v.size());
  }

  double density(double delta, double delta_hat) const {
    const double lo = std::max(0.0, delta - delta_hat);
    const double hi = std::min(1.0, delta + delta_hat);
    const auto cnt = std::upper_bound(v.begin(), v.end(), hi) - std::lower_bound(v.begin(), v.end(), lo);
    return static_cast<double>(cnt) / (static_cast<double>(v.size()) * (hi - lo));
  }
};

void check_cluster(const Matrix& m, const IndexSet& cluster) {
  for (std::size_t j : cluster)
    if (j >= static_cast<std::size_t>(m.cols()))
      fail(ErrorCode::kInvalidArgument, "cluster index out of range");
}

Matrix normalized_columns(const Matrix& data) {
  Matrix out = data;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double nrm = out.col(j).norm();
    if (nrm > 0.0) out.col(j) /= nrm;
  }
  return out;
}

// SPA picks on the rank-two projection of M (the seeding used by H2NMF).
std::vector<std::size_t> rank2_seeds(const Matrix& sub, const linalg::IterationOptions& opts) {
  const linalg::Svd2 s = linalg::svd2(sub, opts);
  Matrix u(sub.rows(), 2);
  u.col(0) = s.u1;
  u.col(1) = s.u2;
  return linalg::spa(Matrix(u.transpose() * sub), 2);
}

}  // namespace

std::string_view to_string(SplitMethod method) {
  switch (method) {
    case SplitMethod::kRank2Nmf: return "rank2nmf";
    case SplitMethod::kKMeans: return "kmeans";
    case SplitMethod::kSphericalKMeans: return "spherical_kmeans";
  }
  return "unknown";
}

SplitMethod parse_split_method(std::string_view name) {
  if (name == "rank2nmf" || name == "h2nmf") return SplitMethod::kRank2Nmf;
  if (name == "kmeans" || name == "hkm") return SplitMethod::kKMeans;
  if (name == "spherical_kmeans" || name == "hspkm") return SplitMethod::kSphericalKMeans;
  fail(ErrorCode::kInvalidArgument, "unknown split method: " + std::string(name));
}

std::vector<double> x_statistic(const Matrix& h) {
  if (h.rows() != 2) fail(ErrorCode::kInvalidArgument, "x_statistic expects a 2 x n matrix");
  std::vector<double> x(static_cast<std::size_t>(h.cols()));
  for (Eigen::Index i = 0; i < h.cols(); ++i) {
    const double total = h(0, i) + h(1, i);
    x[static_cast<std::size_t>(i)] = total > 0.0 ? h(0, i) / total : 0.5;
  }
  return x;
}

double empirical_cdf(std::span<const double> x, double delta) {
  if (x.empty()) fail(ErrorCode::kDomain, "empirical_cdf of an empty sample");
  const auto cnt = std::count_if(x.begin(), x.end(), [&](double v) { return v <= delta; });
  return static_cast<double>(cnt) / static_cast<double>(x.size());
}

double window_density(std::span<const double> x, double delta, double delta_hat) {
  check_delta_hat(delta_hat);
  if (x.empty()) fail(ErrorCode::kDomain, "window_density of an empty sample");
  const double lo = std::max(0.0, delta - delta_hat);
  const double hi = std::min(1.0, delta + delta_hat);
  const auto cnt = std::count_if(x.begin(), x.end(), [&](double v) { return lo <= v && v <= hi; });
  return static_cast<double>(cnt) / (static_cast<double>(x.size()) * (hi - lo));
}

double split_objective(std::span<const double> x, double delta, double delta_hat,
                       SplitObjective objective) {
  return objective_value(empirical_cdf(x, delta), window_density(x, delta, delta_hat), objective);
}

double choose_delta(std::span<const double> x, double delta_hat, SplitObjective objective) {
  check_delta_hat(delta_hat);
  if (x.size() < 2) fail(ErrorCode::kUnsplittable, "unsplittable cluster");
  SortedSample s{{x.begin(), x.end()}};
  std::sort(s.v.begin(), s.v.end());
  const double lo = s.v.front();
  const double hi = s.v.back();
  if (lo == hi) fail(ErrorCode::kUnsplittable, "unsplittable cluster");

  const std::size_t n = s.v.size();
  const double median = n % 2 ? s.v[n / 2] : 0.5 * (s.v[n / 2 - 1] + s.v[n / 2]);

  std::vector<double> candidates;
  candidates.reserve(n + 201);
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (s.v[i] != s.v[i + 1]) candidates.push_back(0.5 * (s.v[i] + s.v[i + 1]));
  for (int t = 0; t <= 200; ++t) candidates.push_back(lo + (hi - lo) * t / 200.0);

  double best = hi;  // only reached if every candidate collapsed onto an endpoint
  double best_value = kInf;
  double best_distance = kInf;
  for (double d : candidates) {
    if (!(lo < d && d < hi)) continue;
    const double value = objective_value(s.cdf(d), s.density(d, delta_hat), objective);
    const double distance = std::abs(d - median);
    const bool better = value < best_value ||
                        (value == best_value &&
                         (distance < best_distance || (distance == best_distance && d < best)));
    if (better) {
      best = d;
      best_value = value;
      best_distance = distance;
    }
  }
  return best;
}

SplitResult split_rank2(const Matrix& m, const IndexSet& cluster, const SplitOptions& opts) {
  check_cluster(m, cluster);
  if (cluster.size() < 2) fail(ErrorCode::kUnsplittable, "unsplittable cluster");
  const Matrix sub = gather_columns(m, cluster);
  const Rank2Factors f = rank2_nmf(sub, opts.iteration);

  SplitResult out;
  out.method = SplitMethod::kRank2Nmf;
  out.x = x_statistic(f.h);
  const double delta = choose_delta(out.x, opts.delta_hat, opts.objective);
  out.delta_star = delta;
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    (out.x[i] >= delta ? out.k1 : out.k2).push_back(cluster[i]);
  }
  return out;
}

SplitResult split_kmeans(const Matrix& m, const IndexSet& cluster, KMeansMode mode,
                         const SplitOptions& opts) {
  check_cluster(m, cluster);
  if (cluster.size() < 2) fail(ErrorCode::kUnsplittable, "unsplittable cluster");
  const Matrix sub = gather_columns(m, cluster);
  const Matrix points = mode == KMeansMode::kSpherical ? normalized_columns(sub) : sub;
  bool identical = true;
  for (Eigen::Index j = 1; j < points.cols() && identical; ++j)
    identical = points.col(j) == points.col(0);
  if (identical) fail(ErrorCode::kUnsplittable, "unsplittable cluster");

  const std::vector<std::size_t> seeds = rank2_seeds(sub, opts.iteration);
  Matrix init(sub.rows(), 2);
  for (int c = 0; c < 2; ++c) init.col(c) = sub.col(static_cast<Eigen::Index>(seeds[static_cast<std::size_t>(c)]));

  const KMeansResult km = lloyd(sub, init, mode, opts.kmeans_max_iterations, opts.kmeans_tolerance);
  SplitResult out;
  out.method = mode == KMeansMode::kSpherical ? SplitMethod::kSphericalKMeans : SplitMethod::kKMeans;
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    (km.labels[i] == 0 ? out.k1 : out.k2).push_back(cluster[i]);
  }
  return out;
}

SplitResult split_cluster(const Matrix& m, const IndexSet& cluster, const SplitOptions& opts) {
  switch (opts.method) {
    case SplitMethod::kRank2Nmf: return split_rank2(m, cluster, opts);
    case SplitMethod::kKMeans: return split_kmeans(m, cluster, KMeansMode::kEuclidean, opts);
    case SplitMethod::kSphericalKMeans:
      return split_kmeans(m, cluster, KMeansMode::kSpherical, opts);
  }
  fail(ErrorCode::kInvalidArgument, "unknown split method");
}

KMeansResult lloyd(const Matrix& data, Matrix centroids, KMeansMode mode, int max_iterations,
                   double tolerance) {
  const bool spherical = mode == KMeansMode::kSpherical;
  const Matrix points = spherical ? normalized_columns(data) : data;
  if (spherical) centroids = normalized_columns(centroids);
  const Eigen::Index n = points.cols();
  const Eigen::Index k = centroids.cols();
  if (k < 1 || n < k) fail(ErrorCode::kDomain, "lloyd: need 1 <= k <= number of points");

  const Vector point_sq = points.colwise().squaredNorm().transpose();
  KMeansResult out;
  out.labels.assign(static_cast<std::size_t>(n), 0);

  // Per-point cost against its assigned centroid.
  auto cost = [&](Eigen::Index j, Eigen::Index c) {
    if (spherical) return 1.0 - centroids.col(c).dot(points.col(j));
    return (points.col(j) - centroids.col(c)).squaredNorm();
  };

  for (int it = 1; it <= std::max(1, max_iterations); ++it) {
    out.iterations = it;
    const Matrix cross = centroids.transpose() * points;  // k x n
    const Vector centroid_sq = centroids.colwise().squaredNorm().transpose();
    bool changed = it == 1;
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::Index best = 0;
      double best_score = kInf;
      for (Eigen::Index c = 0; c < k; ++c) {
        const double score = spherical ? -cross(c, j) : point_sq(j) - 2.0 * cross(c, j) + centroid_sq(c);
        if (score < best_score) {
          best_score = score;
          best = c;
        }
      }
      if (out.labels[static_cast<std::size_t>(j)] != static_cast<std::size_t>(best)) changed = true;
      out.labels[static_cast<std::size_t>(j)] = static_cast<std::size_t>(best);
    }

    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t l : out.labels) ++counts[l];
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      double far_cost = -kInf;
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto l = static_cast<Eigen::Index>(out.labels[static_cast<std::size_t>(j)]);
        if (counts[static_cast<std::size_t>(l)] < 2) continue;
        const double cj = cost(j, l);
        if (cj > far_cost) {
          far_cost = cj;
          far = j;
        }
      }
      if (far < 0) continue;
      --counts[out.labels[static_cast<std::size_t>(far)]];
      out.labels[static_cast<std::size_t>(far)] = static_cast<std::size_t>(c);
      counts[static_cast<std::size_t>(c)] = 1;
      changed = true;
    }

    Matrix sums = Matrix::Zero(points.rows(), k);
    for (Eigen::Index j = 0; j < n; ++j)
      sums.col(static_cast<Eigen::Index>(out.labels[static_cast<std::size_t>(j)])) += points.col(j);
    for (Eigen::Index c = 0; c < k; ++c) {
      const auto cnt = counts[static_cast<std::size_t>(c)];
      if (cnt == 0) continue;
      if (spherical) {
        const double nrm = sums.col(c).norm();
        if (nrm > 0.0) centroids.col(c) = sums.col(c) / nrm;
      } else {
        centroids.col(c) = sums.col(c) / static_cast<double>(cnt);
      }
    }

    double objective = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      objective += cost(j, static_cast<Eigen::Index>(out.labels[static_cast<std::size_t>(j)]));
    const double previous = out.objective.empty() ? kInf : out.objective.back();
    out.objective.push_back(objective);
    if (!changed) break;
    if (std::abs(previous - objective) <= tolerance * std::abs(previous)) break;
  }
  out.centroids = centroids;
  return out;
}

std::vector<int> flat_kmeans(const Matrix& m, std::size_t r, KMeansMode mode, const SplitOptions& opts) {
  const auto n = static_cast<std::size_t>(m.cols());
  if (r < 1 || r > n) fail(ErrorCode::kDomain, "flat_kmeans: need 1 <= r <= n");
  if (r > static_cast<std::size_t>(m.rows())) fail(ErrorCode::kDomain, "flat_kmeans: r exceeds the number of bands");

  const linalg::TruncatedSvd t = linalg::truncated_svd(m, static_cast<int>(r), opts.iteration);
  const std::vector<std::size_t> seeds = linalg::spa(Matrix(t.u.transpose() * m), r);
  Matrix init(m.rows(), static_cast<Eigen::Index>(r));
  for (std::size_t c = 0; c < r; ++c) init.col(static_cast<Eigen::Index>(c)) = m.col(static_cast<Eigen::Index>(seeds[c]));

  const KMeansResult km = lloyd(m, init, mode, opts.kmeans_max_iterations, opts.kmeans_tolerance);
  std::vector<int> labels(n);
  for (std::size_t j = 0; j < n; ++j) labels[j] = static_cast<int>(km.labels[j]) + 1;
  return labels;
}

}  // namespace h2nmf
