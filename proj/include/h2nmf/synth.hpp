#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "h2nmf/matrix.hpp"
#include "h2nmf/splitter.hpp"

namespace h2nmf {

// Identifier of the pseudo-random generator behind every synthetic draw,
// recorded in benchmark metadata.
inline constexpr std::string_view kRngAlgorithm = "std::mt19937_64+libstdc++-distributions";

struct SynthConfig {
  double epsilon = 0.0;  // noise level
  bool scaling = false;  // s: per-pixel illumination factor in [0.8, 1]
  bool outliers = false;  // b: 10 outliers and 40 zero pixels
  std::uint64_t seed = 1;
  std::size_t r = 6;
  std::vector<std::size_t> cluster_sizes;  // empty: 500 - 50 (k - 1)
  std::size_t bands = 188;                 // procedural spectra only
  std::uint64_t spectra_seed = 2024;       // procedural spectra only
};

struct SynthInstance {
  Matrix m;                  // bands x n, entrywise >= 0
  Matrix w_true;             // bands x r
  Matrix h_true;             // r x (n - z), mixing after illumination scaling
  std::vector<double> scale;  // illumination factor per mixed pixel (1 when s = 0)
  std::vector<int> true_labels;  // 1..r, 0 for outliers and background
  double k_w = 0.0;          // mean column norm of w_true
};

struct ProceduralSpectra {
  Matrix w;  // m x r, unit-norm smooth positive columns
  double condition_number = 0.0;
};

// Smooth positive spectra: a positive baseline plus 3 to 5 Gaussian bumps.
ProceduralSpectra procedural_spectra(std::size_t m, std::size_t r, std::uint64_t seed);

// sigma_max / sigma_min; infinity for rank-deficient input.
double condition_number(const Matrix& w);

// Generator behind every seeded stream in this module.
inline constexpr std::string_view kPrngName = "mt19937_64";

// Synthetic image M = max(0, [W H, Z] + N) with H(:, i) = 0.9 e_k + 0.1 x,
// x ~ Dirichlet(0.1, ..., 0.1). Uses procedural spectra when none are given.
SynthInstance generate(const SynthConfig& config);
SynthInstance generate(const SynthConfig& config, const Matrix& spectra);

// max over label permutations of the fraction of labeled pixels placed in
// the matching cluster. Truth label 0 marks pixels that belong to no
// cluster; they count neither for nor against. Labels are 1..r.
double accuracy(std::span<const int> predicted, std::span<const int> truth, std::size_t r);

enum class Algorithm { kH2nmf, kHkm, kHspkm, kKm, kSpkm };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);  // h2nmf|hkm|hspkm|km|spkm (case-insensitive)

// 1-based cluster labels of the columns of M from the chosen algorithm.
std::vector<int> cluster_labels(const Matrix& m, std::size_t r, Algorithm algorithm,
                                const SplitOptions& opts = {});

struct BenchmarkConfig {
  std::vector<double> epsilons;
  bool scaling = false;
  bool outliers = false;
  std::size_t trials = 25;
  std::vector<Algorithm> algorithms;
  std::uint64_t seed = 1;
  std::size_t r = 6;
  std::size_t bands = 188;
  std::uint64_t spectra_seed = 2024;  // procedural spectra, shared by all trials
  std::optional<Matrix> spectra;       // overrides procedural spectra
  unsigned threads = 0;           // 0: hardware concurrency
  SplitOptions split;
};

struct BenchmarkRow {
  double epsilon = 0.0;
  bool scaling = false;
  bool outliers = false;
  Algorithm algorithm = Algorithm::kH2nmf;
  std::size_t trial = 0;
  double accuracy = 0.0;
  double seconds = 0.0;
};

struct BenchmarkSummary {
  double epsilon = 0.0;
  Algorithm algorithm = Algorithm::kH2nmf;
  double mean_accuracy = 0.0;
  double mean_seconds = 0.0;
};

// Seed of trial `trial` at noise index `level`; independent of scheduling.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t level, std::size_t trial);

// All algorithms see the same instance for a given (epsilon, trial).
std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& config);
std::vector<BenchmarkSummary> summarize(const std::vector<BenchmarkRow>& rows);

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<BenchmarkSummary>& rows);

// "start:step:end" (inclusive end) or a comma-separated list.
std::vector<double> parse_range(std::string_view text);

}  // namespace h2nmf
