#include "h2nmf/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <charconv>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "h2nmf/assignment.hpp"
#include "h2nmf/error.hpp"
#include "h2nmf/hierarchy.hpp"

namespace h2nmf {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::size_t> default_sizes(std::size_t r) {
  std::vector<std::size_t> sizes;
  for (std::size_t k = 0; k < r; ++k) {
    if (50 * k >= 500) fail(ErrorCode::kDomain, "default cluster sizes need r <= 10");
    sizes.push_back(500 - 50 * k);
  }
  return sizes;
}

constexpr double kMaxBaseline = 0.02;
constexpr double kMaxCoherence = 0.6;
constexpr int kMaxRedraws = 100;

}  // namespace

double condition_number(const Matrix& w) {
  Eigen::JacobiSVD<Matrix> svd(w);
  const Vector s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

ProceduralSpectra procedural_spectra(std::size_t m, std::size_t r, std::uint64_t seed) {
  if (r < 1 || m < r) fail(ErrorCode::kDomain, "procedural_spectra needs 1 <= r <= m");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> bump_count(3, 5);
  const double bands = static_cast<double>(m);

  auto draw = [&] {
    Vector col = Vector::Constant(static_cast<Eigen::Index>(m), kMaxBaseline * unit(rng));
    const int bumps = bump_count(rng);
    for (int b = 0; b < bumps; ++b) {
      const double center = bands * unit(rng);
      const double width = bands * (1.0 / 120.0 + unit(rng) * (1.0 / 40.0 - 1.0 / 120.0));
      const double amplitude = 0.3 + 0.7 * unit(rng);
      for (std::size_t i = 0; i < m; ++i) {
        const double t = (static_cast<double>(i) - center) / width;
        col(static_cast<Eigen::Index>(i)) += amplitude * std::exp(-0.5 * t * t);
      }
    }
    return Vector(col / col.norm());
  };

  ProceduralSpectra out;
  out.w.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(r));
  for (std::size_t k = 0; k < r; ++k) {
    // Redraw near-duplicates of earlier columns; keeps the conditioning moderate.
    Vector col = draw();
    for (int attempt = 1; attempt < kMaxRedraws; ++attempt) {
      const auto kk = static_cast<Eigen::Index>(k);
      if (k == 0 || (out.w.leftCols(kk).transpose() * col).maxCoeff() <= kMaxCoherence) break;
      col = draw();
    }
    out.w.col(static_cast<Eigen::Index>(k)) = col;
  }
  out.condition_number = condition_number(out.w);
  return out;
}

SynthInstance generate(const SynthConfig& config) {
  return generate(config, procedural_spectra(config.bands, config.r, config.spectra_seed).w);
}

SynthInstance generate(const SynthConfig& config, const Matrix& spectra) {
  if (config.epsilon < 0.0) fail(ErrorCode::kDomain, "epsilon must be >= 0");
  if (spectra.cols() < 1 || spectra.rows() < 1) fail(ErrorCode::kDomain, "empty spectra");
  if ((spectra.array() < 0.0).any()) fail(ErrorCode::kDomain, "spectra must be nonnegative");
  const std::size_t r = static_cast<std::size_t>(spectra.cols());
  const std::vector<std::size_t> sizes = config.cluster_sizes.empty() ? default_sizes(r) : config.cluster_sizes;
  if (sizes.size() != r) fail(ErrorCode::kDomain, "one cluster size per endmember required");
  for (std::size_t s : sizes)
    if (s == 0) fail(ErrorCode::kDomain, "cluster sizes must be positive");

  std::mt19937_64 rng(config.seed);
  std::gamma_distribution<double> gamma(0.1, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  SynthInstance out;
  out.w_true = spectra;
  out.k_w = spectra.colwise().norm().mean();
  const Eigen::Index mixed = static_cast<Eigen::Index>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
  const Eigen::Index extra = config.outliers ? 50 : 0;
  const Eigen::Index n = mixed + extra;
  const Eigen::Index bands = spectra.rows();

  out.h_true.resize(static_cast<Eigen::Index>(r), mixed);
  out.true_labels.assign(static_cast<std::size_t>(n), 0);
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < r; ++k) {
    for (std::size_t p = 0; p < sizes[k]; ++p, ++col) {
      Vector x(static_cast<Eigen::Index>(r));
      double total = 0.0;
      while (total <= 0.0) {  // all-underflow draws are redrawn
        for (std::size_t i = 0; i < r; ++i) x(static_cast<Eigen::Index>(i)) = gamma(rng);
        total = x.sum();
      }
      x /= total;
      out.h_true.col(col) = 0.1 * x;
      out.h_true(static_cast<Eigen::Index>(k), col) += 0.9;
      out.true_labels[static_cast<std::size_t>(col)] = static_cast<int>(k) + 1;
    }
  }
  out.scale.assign(static_cast<std::size_t>(mixed), 1.0);
  if (config.scaling) {
    for (Eigen::Index i = 0; i < mixed; ++i) {
      out.scale[static_cast<std::size_t>(i)] = 0.8 + 0.2 * unit(rng);
      out.h_true.col(i) *= out.scale[static_cast<std::size_t>(i)];
    }
  }

  out.m.resize(bands, n);
  out.m.leftCols(mixed) = spectra * out.h_true;
  if (config.outliers) {
    for (Eigen::Index p = 0; p < 10; ++p) {
      Vector z(bands);
      for (Eigen::Index i = 0; i < bands; ++i) z(i) = unit(rng);
      out.m.col(mixed + p) = out.k_w * z / z.norm();
    }
    out.m.rightCols(40).setZero();
  }
  if (config.epsilon > 0.0) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double level = config.epsilon * out.k_w * unit(rng);
      for (Eigen::Index i = 0; i < bands; ++i) out.m(i, j) += level * normal(rng);
    }
  }
  out.m = out.m.cwiseMax(0.0);
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth, std::size_t r) {
  if (predicted.size() != truth.size()) fail(ErrorCode::kInvalidArgument, "accuracy: label length mismatch");
  if (r < 1) fail(ErrorCode::kDomain, "accuracy: r must be >= 1");
  const auto rr = static_cast<Eigen::Index>(r);
  Matrix overlap = Matrix::Zero(rr, rr);
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || t > static_cast<int>(r)) fail(ErrorCode::kDomain, "accuracy: true label out of range");
    if (p < 1 || p > static_cast<int>(r)) fail(ErrorCode::kDomain, "accuracy: predicted label out of range");
    if (t == 0) continue;
    ++labeled;
    overlap(t - 1, p - 1) += 1.0;
  }
  if (labeled == 0) return 1.0;
  const std::vector<std::size_t> perm = min_cost_assignment(-overlap);
  double hit = 0.0;
  for (Eigen::Index k = 0; k < rr; ++k) hit += overlap(k, static_cast<Eigen::Index>(perm[static_cast<std::size_t>(k)]));
  return hit / static_cast<double>(labeled);
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kH2nmf: return "H2NMF";
    case Algorithm::kHkm: return "HKM";
    case Algorithm::kHspkm: return "HSPKM";
    case Algorithm::kKm: return "KM";
    case Algorithm::kSpkm: return "SPKM";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "h2nmf") return Algorithm::kH2nmf;
  if (lower == "hkm") return Algorithm::kHkm;
  if (lower == "hspkm") return Algorithm::kHspkm;
  if (lower == "km") return Algorithm::kKm;
  if (lower == "spkm") return Algorithm::kSpkm;
  fail(ErrorCode::kInvalidArgument, "unknown algorithm: " + std::string(name));
}

std::vector<int> cluster_labels(const Matrix& m, std::size_t r, Algorithm algorithm, const SplitOptions& opts) {
  if (algorithm == Algorithm::kKm) return flat_kmeans(m, r, KMeansMode::kEuclidean, opts);
  if (algorithm == Algorithm::kSpkm) return flat_kmeans(m, r, KMeansMode::kSpherical, opts);
  HierarchyOptions h;
  h.split = opts;
  h.split.method = algorithm == Algorithm::kH2nmf ? SplitMethod::kRank2Nmf
                   : algorithm == Algorithm::kHkm ? SplitMethod::kKMeans
                                                  : SplitMethod::kSphericalKMeans;
  // The tree only reads the matrix; avoid a copy with a non-owning pointer.
  std::shared_ptr<const Matrix> view(&m, [](const Matrix*) {});
  return run_h2nmf(view, r, h).tree.flatten();
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t level, std::size_t trial) {
  return splitmix64(splitmix64(seed) ^ splitmix64((static_cast<std::uint64_t>(level) << 32) ^ trial));
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& config) {
  const Matrix spectra = config.spectra ? *config.spectra
                                        : procedural_spectra(config.bands, config.r, config.spectra_seed).w;
  const std::size_t levels = config.epsilons.size();
  const std::size_t jobs = levels * config.trials;
  const std::size_t per_job = config.algorithms.size();
  std::vector<BenchmarkRow> rows(jobs * per_job);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&]() {
    for (std::size_t job = next++; job < jobs; job = next++) {
      try {
        const std::size_t level = job / config.trials;
        const std::size_t trial = job % config.trials;
        SynthConfig sc;
        sc.epsilon = config.epsilons[level];
        sc.scaling = config.scaling;
        sc.outliers = config.outliers;
        sc.seed = trial_seed(config.seed, level, trial);
        const SynthInstance inst = generate(sc, spectra);
        for (std::size_t a = 0; a < per_job; ++a) {
          const auto t0 = std::chrono::steady_clock::now();
          const std::vector<int> labels = cluster_labels(inst.m, spectra.cols(), config.algorithms[a], config.split);
          const auto t1 = std::chrono::steady_clock::now();
          BenchmarkRow& row = rows[job * per_job + a];
          row.epsilon = sc.epsilon;
          row.scaling = config.scaling;
          row.outliers = config.outliers;
          row.algorithm = config.algorithms[a];
          row.trial = trial;
          row.accuracy = accuracy(labels, inst.true_labels, static_cast<std::size_t>(spectra.cols()));
          row.seconds = std::chrono::duration<double>(t1 - t0).count();
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(config.threads ? config.threads : hw, std::max<std::size_t>(jobs, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return rows;
}

std::vector<BenchmarkSummary> summarize(const std::vector<BenchmarkRow>& rows) {
  // Keyed by first appearance so output order follows the input grid.
  std::vector<BenchmarkSummary> out;
  std::vector<std::size_t> counts;
  for (const BenchmarkRow& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const BenchmarkSummary& s) {
      return s.epsilon == row.epsilon && s.algorithm == row.algorithm;
    });
    if (it == out.end()) {
      out.push_back({row.epsilon, row.algorithm, 0.0, 0.0});
      counts.push_back(0);
      it = out.end() - 1;
    }
    const auto k = static_cast<std::size_t>(it - out.begin());
    it->mean_accuracy += row.accuracy;
    it->mean_seconds += row.seconds;
    ++counts[k];
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].mean_accuracy /= static_cast<double>(counts[k]);
    out[k].mean_seconds /= static_cast<double>(counts[k]);
  }
  return out;
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << "epsilon,s,b,algorithm,trial,accuracy,seconds\n";
  out << std::setprecision(10);
  for (const BenchmarkRow& r : rows) {
    out << r.epsilon << ',' << (r.scaling ? 1 : 0) << ',' << (r.outliers ? 1 : 0) << ',' << to_string(r.algorithm)
        << ',' << r.trial << ',' << r.accuracy << ',' << r.seconds << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<BenchmarkSummary>& rows) {
  out << "epsilon,algorithm,mean_accuracy,mean_seconds\n";
  out << std::setprecision(10);
  for (const BenchmarkSummary& s : rows)
    out << s.epsilon << ',' << to_string(s.algorithm) << ',' << s.mean_accuracy << ',' << s.mean_seconds << '\n';
}

namespace {

double parse_number(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    fail(ErrorCode::kParse, "not a number: '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::vector<double> parse_range(std::string_view text) {
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string_view::npos) fail(ErrorCode::kParse, "range must be start:step:end");
    const double start = parse_number(text.substr(0, a));
    const double step = parse_number(text.substr(a + 1, b - a - 1));
    const double end = parse_number(text.substr(b + 1));
    if (!(step > 0.0) || end < start) fail(ErrorCode::kParse, "range needs step > 0 and end >= start");
    for (std::size_t k = 0;; ++k) {
      const double v = start + static_cast<double>(k) * step;
      if (v > end + 1e-9 * step) break;
      out.push_back(std::round(v * 1e12) / 1e12);
    }
    return out;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto piece = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    out.push_back(parse_number(piece));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace h2nmf
