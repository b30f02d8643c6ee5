#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "h2nmf/linalg.hpp"
#include "h2nmf/matrix.hpp"

namespace h2nmf {

enum class SplitMethod { kRank2Nmf, kKMeans, kSphericalKMeans };

// Threshold criterion minimized over delta.
//   kLogBalance: -log(F(1 - F)) + exp(G)   (never yields an empty side)
//   kQuadratic:  4 (F - 1/2)^2 + G^2
enum class SplitObjective { kLogBalance, kQuadratic };

std::string_view to_string(SplitMethod method);
SplitMethod parse_split_method(std::string_view name);  // rank2nmf|kmeans|spherical_kmeans

struct SplitOptions {
  SplitMethod method = SplitMethod::kRank2Nmf;
  SplitObjective objective = SplitObjective::kLogBalance;
  double delta_hat = 0.05;
  int kmeans_max_iterations = 100;
  double kmeans_tolerance = 1e-6;
  linalg::IterationOptions iteration;
};

struct SplitResult {
  IndexSet k1;  // x >= delta_star for rank-two splits
  IndexSet k2;
  std::optional<double> delta_star;  // rank-two splits only
  std::vector<double> x;             // rank-two splits only, aligned with the input cluster
  SplitMethod method = SplitMethod::kRank2Nmf;
  double score = 0.0;  // sigma1^2(k1) + sigma1^2(k2) - sigma1^2(k1 u k2), set by the hierarchy
};

// x_i = H(1,i) / (H(1,i) + H(2,i)); 0.5 for an all-zero column.
std::vector<double> x_statistic(const Matrix& h);

// Fraction of x_i <= delta.
double empirical_cdf(std::span<const double> x, double delta);

// Point density in [max(0, delta - delta_hat), min(1, delta + delta_hat)],
// normalized by the clipped window width so a uniform sample scores ~1.
double window_density(std::span<const double> x, double delta, double delta_hat);

// Threshold objective at delta; +inf when the log-balance term is undefined.
double split_objective(std::span<const double> x, double delta, double delta_hat,
                       SplitObjective objective = SplitObjective::kLogBalance);

// Minimizer of split_objective over the candidate thresholds: midpoints of
// consecutive distinct sorted values plus 201 evenly spaced points on
// [min x, max x], keeping only those strictly inside (min x, max x). Ties go
// to the candidate closest to the median of x. Throws kUnsplittable when all
// values are equal.
double choose_delta(std::span<const double> x, double delta_hat,
                    SplitObjective objective = SplitObjective::kLogBalance);

// Rank-two NMF split of M(:, cluster). Throws kUnsplittable.
SplitResult split_rank2(const Matrix& m, const IndexSet& cluster, const SplitOptions& opts = {});

enum class KMeansMode { kEuclidean, kSpherical };

// 2-means split seeded with the SPA picks of the rank-two projection.
SplitResult split_kmeans(const Matrix& m, const IndexSet& cluster, KMeansMode mode,
                         const SplitOptions& opts = {});

// Dispatches on opts.method.
SplitResult split_cluster(const Matrix& m, const IndexSet& cluster, const SplitOptions& opts);

struct KMeansResult {
  std::vector<std::size_t> labels;  // 0-based cluster of each column
  Matrix centroids;                 // m x k
  std::vector<double> objective;    // after each Lloyd iteration
  int iterations = 0;
};

// Lloyd iterations from the given centroids. Euclidean mode minimizes the sum
// of squared distances; spherical mode works on unit-normalized columns and
// minimizes sum(1 - cos). A cluster that empties receives the point farthest
// from its current centroid.
KMeansResult lloyd(const Matrix& data, Matrix centroids, KMeansMode mode, int max_iterations,
                   double tolerance);

// Flat k-means with r clusters, seeded by SPA on the rank-r SVD
// approximation of M. Labels are 1-based.
std::vector<int> flat_kmeans(const Matrix& m, std::size_t r, KMeansMode mode,
                             const SplitOptions& opts = {});

}  // namespace h2nmf
