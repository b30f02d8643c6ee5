#include <doctest.h>

#include <cmath>
#include <set>

#include "h2nmf/error.hpp"
#include "h2nmf/splitter.hpp"
#include "oracles.hpp"

using namespace h2nmf;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

void check_partition(const IndexSet& cluster, const SplitResult& s) {
  std::set<std::size_t> all(s.k1.begin(), s.k1.end());
  for (std::size_t j : s.k2) CHECK(all.insert(j).second);
  CHECK(all == std::set<std::size_t>(cluster.begin(), cluster.end()));
  CHECK(!s.k1.empty());
  CHECK(!s.k2.empty());
}

// Columns: `counts[g]` copies of spectrum g, each scaled by a factor in
// [lo, hi].
Matrix groups(const Matrix& w, const std::vector<int>& counts, std::mt19937_64& rng, double lo = 1.0,
              double hi = 1.0) {
  std::uniform_real_distribution<double> s(lo, hi);
  int n = 0;
  for (int c : counts) n += c;
  Matrix m(w.rows(), n);
  int j = 0;
  for (std::size_t g = 0; g < counts.size(); ++g)
    for (int c = 0; c < counts[g]; ++c) m.col(j++) = s(rng) * w.col(static_cast<Eigen::Index>(g));
  return m;
}

}  // namespace

TEST_CASE("x_statistic") {
  Matrix h(2, 3);
  h << 3, 0, 0,  //
      1, 5, 0;
  const auto x = x_statistic(h);
  CHECK(x[0] == 0.75);
  CHECK(x[1] == 0.0);
  CHECK(x[2] == 0.5);
}

TEST_CASE("empirical_cdf") {
  const std::vector<double> a{0.2, 0.4, 0.6, 0.8};
  CHECK(empirical_cdf(a, 0.5) == 0.5);
  CHECK(empirical_cdf(a, 1.0) == 1.0);
  const std::vector<double> b{0.1, 0.2, 0.9};
  CHECK(empirical_cdf(b, 0.5) == doctest::Approx(2.0 / 3.0));
  CHECK(code_of([] { empirical_cdf(std::vector<double>{}, 0.5); }) == ErrorCode::kDomain);
}

TEST_CASE("window_density") {
  const std::vector<double> x{0.1, 0.2, 0.9};
  CHECK(window_density(x, 0.5, 0.05) == 0.0);
  CHECK(window_density(x, 0.2, 0.05) == doctest::Approx(1.0 / (3 * 0.1)));
  // Clipped window [0, 0.05] holds nothing; [0.95, 1] likewise.
  CHECK(window_density(x, 0.0, 0.05) == 0.0);
  // Clipped at the left: [0, 0.15] holds 0.1, width 0.15.
  CHECK(window_density(x, 0.1, 0.05 + 0.05) == doctest::Approx(2.0 / (3 * 0.2)));
  CHECK(window_density(std::vector<double>{0.0, 0.01}, 0.0, 0.05) == doctest::Approx(2.0 / (2 * 0.05)));
  CHECK(code_of([&] { window_density(x, 0.5, 0.0); }) == ErrorCode::kDomain);
  CHECK(code_of([&] { window_density(x, 0.5, 0.5); }) == ErrorCode::kDomain);
}

TEST_CASE("window_density of a uniform sample is near one") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(100000);
  for (double& v : x) v = u(rng);
  const double g = window_density(x, 0.5, 0.05);
  CHECK(g >= 0.95);
  CHECK(g <= 1.05);
}

TEST_CASE("split_objective") {
  // F = 0.5 and an empty window around delta.
  const std::vector<double> x{0.1, 0.2, 0.8, 0.9};
  CHECK(split_objective(x, 0.5, 0.05) == doctest::Approx(-std::log(0.25) + 1.0));
  CHECK(split_objective(x, 0.05, 0.05) == std::numeric_limits<double>::infinity());
  CHECK(split_objective(x, 0.95, 0.05) == std::numeric_limits<double>::infinity());
  CHECK(split_objective(x, 0.5, 0.05, SplitObjective::kQuadratic) == doctest::Approx(0.0));
}

TEST_CASE("balance term stays below 2.5 on [0.1, 0.9]") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(1000);
  for (double& v : x) v = u(rng);
  for (int i = 0; i <= 1000; ++i) {
    const double d = i / 1000.0;
    const double f = empirical_cdf(x, d);
    if (f < 0.1 || f > 0.9) continue;
    const double g = split_objective(x, d, 0.05);
    CHECK(g - std::exp(window_density(x, d, 0.05)) <= 2.5);
  }
}

TEST_CASE("cdf is monotone and density nonnegative") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(200);
  for (double& v : x) v = u(rng) * u(rng);
  double prev = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double d = i / 200.0;
    const double f = empirical_cdf(x, d);
    CHECK(f >= prev);
    prev = f;
    CHECK(window_density(x, d, 0.05) >= 0.0);
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  CHECK(std::isinf(split_objective(x, *lo * 0.5, 0.05)));
  CHECK(std::isinf(split_objective(x, 1.0, 0.05)));
  (void)hi;
}

TEST_CASE("choose_delta finds the gap") {
  const std::vector<double> x{0.05, 0.1, 0.12, 0.85, 0.9, 0.95};
  const double d = choose_delta(x, 0.05);
  CHECK(d > 0.17);
  CHECK(d < 0.80);
  int below = 0;
  for (double v : x) below += v < d;
  CHECK(below == 3);
}

TEST_CASE("choose_delta on a tight bimodal sample") {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  std::vector<double> x;
  for (int i = 0; i < 1000; ++i) x.push_back(0.2 + jitter(rng));
  for (int i = 0; i < 1000; ++i) x.push_back(0.8 + jitter(rng));
  const double d = choose_delta(x, 0.05);
  CHECK(d > 0.25);
  CHECK(d < 0.75);
  // Insensitive to the window size on clearly bimodal data.
  for (double dh : {0.01, 0.1}) {
    const double d2 = choose_delta(x, dh);
    CHECK(d2 > 0.21);
    CHECK(d2 < 0.79);
  }
}

TEST_CASE("choose_delta minimizes over midpoints and the uniform grid") {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(50 + t * 10);
    for (double& v : x) v = std::pow(u(rng), 1 + t % 3);
    const double d = choose_delta(x, 0.05);
    const double g = split_objective(x, d, 0.05);
    CHECK(std::isfinite(g));
    // Candidates rebuilt here: midpoints of sorted distinct values and a
    // 201-point grid, strictly inside (min, max).
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<double> cands;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) cands.push_back(0.5 * (sorted[i] + sorted[i + 1]));
    const double lo = sorted.front(), hi = sorted.back();
    for (int i = 0; i <= 200; ++i) cands.push_back(lo + (hi - lo) * i / 200.0);
    double best = std::numeric_limits<double>::infinity();
    for (double c : cands)
      if (c > lo && c < hi) best = std::min(best, split_objective(x, c, 0.05));
    CHECK(g == doctest::Approx(best).epsilon(1e-12));
    CHECK(d > lo);
    CHECK(d < hi);
  }
}

TEST_CASE("choose_delta rejects degenerate samples") {
  CHECK(code_of([] { choose_delta(std::vector<double>{0.5, 0.5}, 0.05); }) == ErrorCode::kUnsplittable);
  CHECK(code_of([] { choose_delta(std::vector<double>{0.3}, 0.05); }) == ErrorCode::kUnsplittable);
}

TEST_CASE("split_rank2 separates two spectra") {
  std::mt19937_64 rng(36);
  const Matrix w = oracle::uniform(rng, 12, 2);
  const Matrix m = groups(w, {5, 3}, rng);
  const IndexSet all = all_columns(8);
  const SplitResult s = split_rank2(m, all);
  check_partition(all, s);
  const std::set<std::size_t> a(s.k1.begin(), s.k1.end());
  CHECK((a == std::set<std::size_t>{0, 1, 2, 3, 4} || a == std::set<std::size_t>{5, 6, 7}));
  REQUIRE(s.delta_star);
  for (std::size_t i = 0; i < all.size(); ++i) CHECK((s.x[i] >= *s.delta_star) == a.count(all[i]) > 0);
}

TEST_CASE("split_rank2 keeps a middle group whole") {
  // Three groups along a segment; the middle one sits between the extremes.
  std::mt19937_64 rng(37);
  const Matrix ends = oracle::uniform(rng, 10, 2);
  Matrix w(10, 3);
  w.col(0) = ends.col(0);
  w.col(1) = 0.45 * ends.col(0) + 0.55 * ends.col(1);
  w.col(2) = ends.col(1);
  Matrix m = groups(w, {60, 60, 60}, rng);
  m += 0.01 * oracle::uniform(rng, 10, 180);
  const SplitResult s = split_rank2(m, all_columns(180));
  for (int g = 0; g < 3; ++g) {
    int in_k1 = 0;
    for (std::size_t j : s.k1) in_k1 += static_cast<int>(j) / 60 == g;
    CHECK((in_k1 == 0 || in_k1 == 60));
  }
}

TEST_CASE("split_rank2 on a subset keeps original indices") {
  std::mt19937_64 rng(38);
  const Matrix w = oracle::uniform(rng, 6, 2);
  const Matrix m = groups(w, {10, 10}, rng, 0.8, 1.0);
  const IndexSet sub{1, 3, 5, 12, 14, 19};
  const SplitResult s = split_rank2(m, sub);
  check_partition(sub, s);
  std::set<std::size_t> a(s.k1.begin(), s.k1.end());
  CHECK((a == std::set<std::size_t>{1, 3, 5} || a == std::set<std::size_t>{12, 14, 19}));
}

TEST_CASE("splitting identical columns fails") {
  const Matrix m = Vector::LinSpaced(5, 1.0, 2.0) * Eigen::RowVectorXd::Ones(4);
  for (SplitMethod method : {SplitMethod::kRank2Nmf, SplitMethod::kKMeans, SplitMethod::kSphericalKMeans}) {
    SplitOptions o;
    o.method = method;
    CHECK(code_of([&] { split_cluster(m, all_columns(4), o); }) == ErrorCode::kUnsplittable);
  }
  CHECK(code_of([&] { split_rank2(m, IndexSet{2}); }) == ErrorCode::kUnsplittable);
}

TEST_CASE("k-means splits recover separated groups") {
  std::mt19937_64 rng(39);
  const Matrix w = oracle::uniform(rng, 8, 2);
  const Matrix m = groups(w, {7, 9}, rng);
  for (KMeansMode mode : {KMeansMode::kEuclidean, KMeansMode::kSpherical}) {
    const SplitResult s = split_kmeans(m, all_columns(16), mode);
    check_partition(all_columns(16), s);
    const std::set<std::size_t> a(s.k1.begin(), s.k1.end());
    CHECK((a.size() == 7 || a.size() == 9));
    for (std::size_t j : s.k1) CHECK((j < 7) == (*a.begin() < 7));
  }
}

TEST_CASE("spherical k-means ignores per-column scaling") {
  std::mt19937_64 rng(40);
  const Matrix w = oracle::uniform(rng, 8, 2);
  const Matrix m = groups(w, {10, 10}, rng, 0.1, 10.0);
  const SplitResult s = split_kmeans(m, all_columns(20), KMeansMode::kSpherical);
  const std::set<std::size_t> a(s.k1.begin(), s.k1.end());
  CHECK(a.size() == 10);
  for (std::size_t j : s.k1) CHECK((j < 10) == (*a.begin() < 10));
}

TEST_CASE("lloyd objective never increases") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 100; ++t) {
    const Matrix data = oracle::uniform(rng, 4, 40);
    const int k = 2 + t % 4;
    const Matrix init = data.leftCols(k);
    const KMeansMode mode = t % 2 ? KMeansMode::kSpherical : KMeansMode::kEuclidean;
    const KMeansResult r = lloyd(data, init, mode, 50, 0.0);
    for (std::size_t i = 1; i < r.objective.size(); ++i) CHECK(r.objective[i] <= r.objective[i - 1] + 1e-12);
  }
}

TEST_CASE("lloyd refills an empty cluster") {
  Matrix data(1, 4);
  data << 0, 0.1, 10, 10.1;
  Matrix init(1, 3);
  init << 0, 100, 10;  // the middle centroid attracts nothing
  const KMeansResult r = lloyd(data, init, KMeansMode::kEuclidean, 10, 0.0);
  std::set<std::size_t> used(r.labels.begin(), r.labels.end());
  CHECK(used.size() == 3);
}

TEST_CASE("flat k-means on separated groups") {
  std::mt19937_64 rng(42);
  const Matrix w = oracle::uniform(rng, 10, 3);
  const Matrix m = groups(w, {5, 6, 7}, rng, 0.9, 1.0);
  const std::vector<int> labels = flat_kmeans(m, 3, KMeansMode::kEuclidean);
  std::vector<int> truth;
  for (int g = 0; g < 3; ++g)
    for (int c = 0; c < 5 + g; ++c) truth.push_back(g + 1);
  CHECK(oracle::brute_force_accuracy(labels, truth, 3) == 1.0);
  CHECK(code_of([&] { flat_kmeans(m, 0, KMeansMode::kEuclidean); }) == ErrorCode::kDomain);
}

TEST_CASE("split method names") {
  CHECK(parse_split_method("rank2nmf") == SplitMethod::kRank2Nmf);
  CHECK(parse_split_method("hkm") == SplitMethod::kKMeans);
  CHECK(parse_split_method("spherical_kmeans") == SplitMethod::kSphericalKMeans);
  CHECK(parse_split_method(to_string(SplitMethod::kKMeans)) == SplitMethod::kKMeans);
  CHECK(code_of([] { parse_split_method("nope"); }) == ErrorCode::kInvalidArgument);
}
