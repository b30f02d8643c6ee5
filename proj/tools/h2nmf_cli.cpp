// h2nmf command-line tool. Talks to the library only through the C API.
//
// Exit codes: 0 success, 64 usage error, otherwise the h2nmf_status value of
// the failing call (see h2nmf.h).

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "h2nmf/h2nmf.h"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 64;

struct Failure {
  int code;
};

void check(h2nmf_status s, const char* what) {
  if (s == H2NMF_OK) return;
  std::cerr << "h2nmf: " << what << ": " << h2nmf_status_name(s) << ": " << h2nmf_last_error() << '\n';
  throw Failure{static_cast<int>(s)};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using MatrixPtr = std::unique_ptr<h2nmf_matrix, Deleter<h2nmf_matrix, h2nmf_matrix_free>>;
using TreePtr = std::unique_ptr<h2nmf_tree, Deleter<h2nmf_tree, h2nmf_tree_free>>;
using EndmembersPtr = std::unique_ptr<h2nmf_endmembers, Deleter<h2nmf_endmembers, h2nmf_endmembers_free>>;
using ServerPtr = std::unique_ptr<h2nmf_server, Deleter<h2nmf_server, h2nmf_server_free>>;
using StringPtr = std::unique_ptr<char, Deleter<char, h2nmf_string_free>>;

struct Dims {
  size_t m = 0, n = 0, width = 0, height = 0;
  bool has_geometry() const { return width != 0; }
};

Dims dims_of(const h2nmf_matrix* m) {
  Dims d;
  check(h2nmf_matrix_dims(m, &d.m, &d.n, &d.width, &d.height), "matrix dims");
  return d;
}

MatrixPtr load(const std::string& path) {
  h2nmf_matrix* raw = nullptr;
  size_t clamped = 0;
  check(h2nmf_matrix_load(path.c_str(), &raw, &clamped), "load");
  if (clamped > 0) std::cerr << "h2nmf: clamped " << clamped << " negative entries to zero\n";
  return MatrixPtr(raw);
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "h2nmf: cannot create " << dir << ": " << ec.message() << '\n';
    throw Failure{H2NMF_E_IO};
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) {
    std::cerr << "h2nmf: cannot write " << path << '\n';
    throw Failure{H2NMF_E_IO};
  }
}

struct SplitFlags {
  double delta_hat = 0.05;
  uint64_t seed = 1;
  std::string objective = "eq3";

  void add_to(CLI::App* app) {
    app->add_option("--delta-hat", delta_hat, "Window half-width of the balance objective")->capture_default_str();
    app->add_option("--seed", seed, "Seed for all randomized steps")->capture_default_str();
    app->add_option("--objective", objective, "Split threshold objective")
        ->check(CLI::IsMember({"eq3", "alt"}))
        ->capture_default_str();
  }

  h2nmf_options options(const char* method) const {
    h2nmf_options o;
    h2nmf_options_init(&o);
    o.method = method;
    o.objective = objective.c_str();
    o.delta_hat = delta_hat;
    o.seed = seed;
    return o;
  }
};

const char* split_method_for(const std::string& algorithm) {
  if (algorithm == "h2nmf") return "rank2nmf";
  if (algorithm == "hkm") return "kmeans";
  if (algorithm == "hspkm") return "spherical_kmeans";
  return nullptr;
}

TreePtr build_tree(const h2nmf_matrix* m, size_t r, const h2nmf_options& o) {
  h2nmf_tree* raw = nullptr;
  int stopped = 0;
  check(h2nmf_tree_build(m, r, &o, &raw, &stopped), "cluster");
  TreePtr tree(raw);
  if (stopped) {
    size_t leaves = 0;
    check(h2nmf_tree_leaf_count(tree.get(), &leaves), "leaf count");
    std::cerr << "h2nmf: no leaf could be split further; stopped at " << leaves << " clusters\n";
  }
  return tree;
}

void write_maps(const fs::path& out, const std::vector<int>& labels, const Dims& d, int clusters) {
  if (!d.has_geometry()) return;
  check(h2nmf_write_cluster_map((out / "cluster_map.ppm").c_str(), labels.data(), d.width, d.height),
        "cluster map");
  std::vector<double> member(labels.size());
  for (int k = 1; k <= clusters; ++k) {
    for (size_t j = 0; j < labels.size(); ++j) member[j] = labels[j] == k ? 1.0 : 0.0;
    const fs::path p = out / ("cluster_" + std::to_string(k) + ".pgm");
    check(h2nmf_write_abundance_image(p.c_str(), member.data(), d.width, d.height), "cluster image");
  }
}

int run_cluster(const std::string& input, size_t r, const std::string& method, const fs::path& out,
                const SplitFlags& flags) {
  const auto t0 = std::chrono::steady_clock::now();
  MatrixPtr m = load(input);
  const Dims d = dims_of(m.get());
  const auto t1 = std::chrono::steady_clock::now();
  make_dir(out);

  std::vector<int> labels(d.n);
  int clusters = static_cast<int>(r);
  if (const char* split = split_method_for(method)) {
    const h2nmf_options o = flags.options(split);
    TreePtr tree = build_tree(m.get(), r, o);
    check(h2nmf_tree_labels(tree.get(), labels.data(), labels.size()), "labels");
    size_t leaves = 0;
    check(h2nmf_tree_leaf_count(tree.get(), &leaves), "leaf count");
    clusters = static_cast<int>(leaves);
    char* doc = nullptr;
    check(h2nmf_tree_json(tree.get(), &doc), "tree document");
    StringPtr held(doc);
    write_text(out / "tree.json", std::string(doc) + "\n");
  } else {
    const h2nmf_options o = flags.options(nullptr);
    check(h2nmf_cluster_labels(m.get(), r, method.c_str(), &o, labels.data(), labels.size()), "cluster");
  }
  const auto t2 = std::chrono::steady_clock::now();

  check(h2nmf_write_labels_csv((out / "labels.csv").c_str(), labels.data(), labels.size()), "labels.csv");
  write_maps(out, labels, d, clusters);

  const auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
  std::ostringstream timing;
  timing << "method=" << method << "\nr=" << r << "\nclusters=" << clusters << "\nm=" << d.m << "\nn=" << d.n
         << "\nload_seconds=" << secs(t0, t1) << "\ncluster_seconds=" << secs(t1, t2) << '\n';
  write_text(out / "timing.txt", timing.str());
  std::cout << method << ": " << clusters << " clusters of " << d.n << " pixels in " << secs(t1, t2) << " s\n";
  return 0;
}

int run_endmembers(const std::string& input, size_t r, const std::string& method, const std::string& truth_path,
                   const fs::path& out, const SplitFlags& flags) {
  MatrixPtr m = load(input);
  const Dims d = dims_of(m.get());
  const char* split = split_method_for(method);
  if (split == nullptr) {
    std::cerr << "h2nmf: endmembers needs a hierarchical method (h2nmf, hkm, hspkm)\n";
    return kUsageError;
  }
  make_dir(out);
  const auto t0 = std::chrono::steady_clock::now();
  TreePtr tree = build_tree(m.get(), r, flags.options(split));
  h2nmf_endmembers* raw = nullptr;
  check(h2nmf_endmembers_extract(tree.get(), &raw), "endmembers");
  EndmembersPtr e(raw);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  size_t bands = 0, count = 0, n = 0;
  check(h2nmf_endmembers_dims(e.get(), &bands, &count, &n), "endmember dims");
  check(h2nmf_endmembers_save_csv(e.get(), (out / "endmembers.csv").c_str()), "endmembers.csv");
  std::vector<double> abundances(count * n);
  check(h2nmf_endmembers_abundances(e.get(), abundances.data()), "abundances");
  if (d.has_geometry()) {
    std::vector<double> plane(n);
    for (size_t k = 0; k < count; ++k) {
      for (size_t j = 0; j < n; ++j) plane[j] = abundances[j * count + k];
      const fs::path p = out / ("abundance_" + std::to_string(k + 1) + ".pgm");
      check(h2nmf_write_abundance_image(p.c_str(), plane.data(), d.width, d.height), "abundance image");
    }
  }
  std::cout << method << ": " << count << " endmembers in " << seconds << " s\n";

  if (truth_path.empty()) return 0;
  MatrixPtr truth = load(truth_path);
  const Dims td = dims_of(truth.get());
  if (td.m != bands || td.n != count) {
    std::cerr << "h2nmf: truth is " << td.m << "x" << td.n << ", extracted endmembers are " << bands << "x" << count
              << '\n';
    return H2NMF_E_SIZE_MISMATCH;
  }
  std::vector<double> extracted(bands * count), reference(bands * count);
  check(h2nmf_endmembers_signatures(e.get(), extracted.data()), "signatures");
  check(h2nmf_matrix_copy(truth.get(), reference.data()), "truth");
  std::vector<size_t> perm(count);
  std::vector<double> scores(count);
  double average = 0.0;
  check(h2nmf_match_and_score(extracted.data(), reference.data(), bands, count, perm.data(), scores.data(), &average),
        "match");

  std::ostringstream table;
  table << "endmember,matched_cluster,mrsa_percent\n" << std::fixed << std::setprecision(2);
  for (size_t i = 0; i < count; ++i) table << i + 1 << ',' << perm[i] + 1 << ',' << 100.0 * scores[i] << '\n';
  table << "average,," << 100.0 * average << '\n';
  write_text(out / "mrsa.csv", table.str());

  std::cout << "MRSA (in percent)\n";
  std::cout << std::fixed << std::setprecision(2);
  for (size_t i = 0; i < count; ++i) std::cout << "  endmember " << i + 1 << ": " << 100.0 * scores[i] << '\n';
  std::cout << "  average: " << 100.0 * average << '\n';
  return 0;
}

int run_synth(const h2nmf_synth_config& c, const fs::path& out, size_t width) {
  make_dir(out);
  h2nmf_matrix* raw = nullptr;
  h2nmf_matrix* spectra_raw = nullptr;
  // n is known only after generation; generate once to size the label buffer.
  check(h2nmf_synth_generate(&c, &raw, nullptr, 0, &spectra_raw), "synth");
  MatrixPtr m(raw), spectra(spectra_raw);
  const Dims d = dims_of(m.get());
  std::vector<int> labels(d.n);
  h2nmf_matrix* again = nullptr;
  check(h2nmf_synth_generate(&c, &again, labels.data(), labels.size(), nullptr), "synth");
  h2nmf_matrix_free(again);

  const size_t w = width == 0 ? d.n : width;
  if (d.n % w != 0) {
    std::cerr << "h2nmf: width " << w << " does not divide n = " << d.n << '\n';
    return kUsageError;
  }
  check(h2nmf_matrix_set_geometry(m.get(), w, d.n / w), "geometry");
  check(h2nmf_matrix_save_cube(m.get(), (out / "data.cube").c_str()), "data.cube");
  check(h2nmf_write_labels_csv((out / "truth_labels.csv").c_str(), labels.data(), labels.size()), "truth labels");
  check(h2nmf_matrix_save_csv(spectra.get(), (out / "truth_spectra.csv").c_str()), "truth spectra");
  std::cout << "wrote " << d.m << " bands x " << d.n << " pixels to " << (out / "data.cube").string() << '\n';
  return 0;
}

ServerPtr g_server;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical rank-two NMF clustering of hyperspectral images"};
  app.require_subcommand(1);

  std::string input, method = "h2nmf", out = ".", truth, host = "127.0.0.1";
  size_t r = 0;
  SplitFlags flags;

  auto* cluster = app.add_subcommand("cluster", "Cluster the pixels of an image");
  cluster->add_option("--input", input, "Cube or CSV file (rows are bands)")->required()->check(CLI::ExistingFile);
  cluster->add_option("--r", r, "Number of clusters")->required()->check(CLI::PositiveNumber);
  cluster->add_option("--method", method, "Clustering algorithm")
      ->check(CLI::IsMember({"h2nmf", "hkm", "hspkm", "km", "spkm"}))
      ->capture_default_str();
  cluster->add_option("--out", out, "Output directory")->required();
  flags.add_to(cluster);

  auto* endm = app.add_subcommand("endmembers", "Extract one pure pixel per cluster");
  endm->add_option("--input", input, "Cube or CSV file")->required()->check(CLI::ExistingFile);
  endm->add_option("--r", r, "Number of endmembers")->required()->check(CLI::PositiveNumber);
  endm->add_option("--method", method, "Hierarchical clustering algorithm")
      ->check(CLI::IsMember({"h2nmf", "hkm", "hspkm"}))
      ->capture_default_str();
  endm->add_option("--truth", truth, "Reference signatures CSV (bands x r)")->check(CLI::ExistingFile);
  endm->add_option("--out", out, "Output directory")->capture_default_str();
  flags.add_to(endm);

  h2nmf_bench_config bench;
  h2nmf_bench_config_init(&bench);
  std::string epsilons = "0:0.05:0.5", algos = "h2nmf,hkm,hspkm,km,spkm";
  int s_flag = 0, b_flag = 0;
  auto* sb = app.add_subcommand("synth-bench", "Accuracy versus noise on synthetic images");
  sb->add_option("--epsilons", epsilons, "start:step:end or comma list")->capture_default_str();
  sb->add_option("--s", s_flag, "Illumination scaling")->check(CLI::IsMember({0, 1}))->capture_default_str();
  sb->add_option("--b", b_flag, "Outliers and background")->check(CLI::IsMember({0, 1}))->capture_default_str();
  sb->add_option("--trials", bench.trials, "Images per noise level")->check(CLI::PositiveNumber)->capture_default_str();
  sb->add_option("--algos", algos, "Comma list of h2nmf,hkm,hspkm,km,spkm")->capture_default_str();
  sb->add_option("--seed", bench.seed, "Base seed")->capture_default_str();
  sb->add_option("--spectra-seed", bench.spectra_seed, "Seed of the procedural spectra")->capture_default_str();
  sb->add_option("--threads", bench.threads, "Worker threads (0: all cores)")->capture_default_str();
  std::string spectra;
  sb->add_option("--spectra", spectra, "Endmember CSV (bands x r) instead of procedural spectra")
      ->check(CLI::ExistingFile);
  sb->add_option("--out", out, "Output directory")->capture_default_str();

  h2nmf_synth_config synth;
  h2nmf_synth_config_init(&synth);
  size_t width = 0;
  auto* sy = app.add_subcommand("synth", "Write one synthetic image with its ground truth");
  sy->add_option("--epsilon", synth.epsilon, "Noise level")->capture_default_str();
  sy->add_option("--s", synth.scaling, "Illumination scaling")->check(CLI::IsMember({0, 1}))->capture_default_str();
  sy->add_option("--b", synth.outliers, "Outliers and background")->check(CLI::IsMember({0, 1}))->capture_default_str();
  sy->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  sy->add_option("--spectra-seed", synth.spectra_seed, "Seed of the procedural spectra")->capture_default_str();
  sy->add_option("--spectra", spectra, "Endmember CSV (bands x r) instead of procedural spectra")
      ->check(CLI::ExistingFile);
  sy->add_option("--width", width, "Image width (default: one row)");
  sy->add_option("--out", out, "Output directory")->required();

  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve interactive clustering sessions over HTTP");
  serve->add_option("--input", input, "Cube or CSV file loaded as the first session")->check(CLI::ExistingFile);
  serve->add_option("--port", port, "TCP port (0: any free port)")->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  std::string snapshot_dir;
  serve->add_option("--snapshot-dir", snapshot_dir, "Write each session's operation log here after every change");
  flags.add_to(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*cluster) return run_cluster(input, r, method, out, flags);
    if (*endm) return run_endmembers(input, r, method, truth, out, flags);
    if (*sb) {
      bench.epsilons = epsilons.c_str();
      bench.algorithms = algos.c_str();
      bench.scaling = s_flag;
      bench.outliers = b_flag;
      if (!spectra.empty()) bench.spectra_path = spectra.c_str();
      check(h2nmf_bench_run(&bench, out.c_str()), "synth-bench");
      std::cout << "wrote " << (fs::path(out) / "bench.csv").string() << '\n';
      return 0;
    }
    if (*sy) {
      if (!spectra.empty()) synth.spectra_path = spectra.c_str();
      return run_synth(synth, out, width);
    }
    if (*serve) {
      const h2nmf_options o = flags.options("rank2nmf");
      h2nmf_server* raw = nullptr;
      check(h2nmf_server_create(&o, &raw), "server");
      g_server.reset(raw);
      if (!snapshot_dir.empty()) check(h2nmf_server_set_snapshot_dir(g_server.get(), snapshot_dir.c_str()), "snapshot");
      if (!input.empty()) {
        MatrixPtr m = load(input);
        char* id = nullptr;
        check(h2nmf_server_add_session(g_server.get(), m.get(), &id), "session");
        std::cout << "session " << id << " <- " << input << '\n';
        h2nmf_string_free(id);
      }
      int bound = 0;
      check(h2nmf_server_bind(g_server.get(), host.c_str(), port, &bound), "bind");
      std::cout << "listening on http://" << host << ':' << bound << std::endl;
      check(h2nmf_server_run(g_server.get()), "serve");
      return 0;
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return kUsageError;
}
