#include "h2nmf/h2nmf.h"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "h2nmf/endmembers.hpp"
#include "h2nmf/error.hpp"
#include "h2nmf/hierarchy.hpp"
#include "h2nmf/io.hpp"
#include "h2nmf/service.hpp"
#include "h2nmf/synth.hpp"

using namespace h2nmf;

struct h2nmf_matrix {
  std::shared_ptr<DataMatrix> data;
};

struct h2nmf_tree {
  std::shared_ptr<const DataMatrix> owner;
  std::unique_ptr<ClusterTree> tree;
};

struct h2nmf_endmembers {
  EndmemberSet set;
};

struct h2nmf_server {
  std::unique_ptr<service::Service> service;
  std::unique_ptr<service::HttpServer> http;
};

namespace {

thread_local std::string g_last_error;

h2nmf_status set_error(h2nmf_status status, const char* message) {
  g_last_error = message;
  return status;
}

template <typename F>
h2nmf_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return H2NMF_OK;
  } catch (const Error& e) {
    return set_error(static_cast<h2nmf_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(H2NMF_E_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(H2NMF_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(H2NMF_E_INTERNAL, e.what());
  }
}

template <typename T>
void need(const T* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::kInvalidArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

HierarchyOptions to_options(const h2nmf_options* o) {
  HierarchyOptions opts;
  if (o == nullptr) return opts;
  if (o->method != nullptr) opts.split.method = parse_split_method(o->method);
  if (o->objective != nullptr) {
    const std::string name = o->objective;
    if (name == "eq3" || name == "log_balance") opts.split.objective = SplitObjective::kLogBalance;
    else if (name == "alt" || name == "quadratic") opts.split.objective = SplitObjective::kQuadratic;
    else fail(ErrorCode::kInvalidArgument, "unknown objective '" + name + "'");
  }
  opts.split.delta_hat = o->delta_hat;
  opts.split.iteration.seed = o->seed;
  return opts;
}

std::shared_ptr<const Matrix> values_of(const std::shared_ptr<const DataMatrix>& d) {
  return {d, &d->values};
}

Geometry checked_geometry(size_t n, size_t width, size_t height) {
  if (width * height != n || n == 0) fail(ErrorCode::kSizeMismatch, "width * height must equal the label count");
  return {width, height};
}

std::vector<Algorithm> parse_algorithms(std::string_view list) {
  std::vector<Algorithm> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const auto end = comma == std::string_view::npos ? list.size() : comma;
    if (end > pos) out.push_back(parse_algorithm(list.substr(pos, end - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) fail(ErrorCode::kInvalidArgument, "no algorithms given");
  return out;
}

Matrix load_spectra(const char* path) {
  io::LoadResult r = io::load_any(path);
  if (r.clamped > 0) fail(ErrorCode::kDomain, "spectra must be nonnegative");
  return std::move(r.data.values);
}

}  // namespace

extern "C" {

const char* h2nmf_version(void) { return "1.0.0"; }

const char* h2nmf_last_error(void) { return g_last_error.c_str(); }

const char* h2nmf_status_name(h2nmf_status status) {
  switch (status) {
    case H2NMF_OK: return "ok";
    case H2NMF_E_INVALID_ARGUMENT: return "invalid argument";
    case H2NMF_E_DOMAIN: return "domain error";
    case H2NMF_E_UNSPLITTABLE: return "unsplittable";
    case H2NMF_E_DEGENERATE: return "degenerate factors";
    case H2NMF_E_IO: return "i/o error";
    case H2NMF_E_BAD_MAGIC: return "bad magic";
    case H2NMF_E_TRUNCATED: return "truncated payload";
    case H2NMF_E_SIZE_MISMATCH: return "size mismatch";
    case H2NMF_E_PARSE: return "parse error";
    case H2NMF_E_NO_GEOMETRY: return "no image geometry";
    case H2NMF_E_STALE_REVISION: return "stale revision";
    case H2NMF_E_NOT_FOUND: return "not found";
    case H2NMF_E_INTERNAL: return "internal error";
  }
  return "unknown";
}

void h2nmf_string_free(char* s) { std::free(s); }

h2nmf_status h2nmf_matrix_load(const char* path, h2nmf_matrix** out, size_t* clamped) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    io::LoadResult r = io::load_any(path);
    if (clamped) *clamped = r.clamped;
    *out = new h2nmf_matrix{std::make_shared<DataMatrix>(std::move(r.data))};
  });
}

h2nmf_status h2nmf_matrix_from_data(const double* values, size_t m, size_t n, h2nmf_matrix** out) {
  return guarded([&] {
    need(values, "values");
    need(out, "out");
    if (m == 0 || n == 0) fail(ErrorCode::kInvalidArgument, "matrix must be non-empty");
    auto d = std::make_shared<DataMatrix>();
    d->values = Eigen::Map<const Matrix>(values, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    if ((d->values.array() < 0.0).any()) fail(ErrorCode::kDomain, "matrix must be nonnegative");
    *out = new h2nmf_matrix{std::move(d)};
  });
}

h2nmf_status h2nmf_matrix_set_geometry(h2nmf_matrix* matrix, size_t width, size_t height) {
  return guarded([&] {
    need(matrix, "matrix");
    if (width == 0 && height == 0) {
      matrix->data->geometry.reset();
      return;
    }
    matrix->data->geometry = checked_geometry(matrix->data->pixels(), width, height);
  });
}

h2nmf_status h2nmf_matrix_dims(const h2nmf_matrix* matrix, size_t* m, size_t* n, size_t* width, size_t* height) {
  return guarded([&] {
    need(matrix, "matrix");
    const DataMatrix& d = *matrix->data;
    if (m) *m = d.bands();
    if (n) *n = d.pixels();
    if (width) *width = d.geometry ? d.geometry->width : 0;
    if (height) *height = d.geometry ? d.geometry->height : 0;
  });
}

h2nmf_status h2nmf_matrix_copy(const h2nmf_matrix* matrix, double* out) {
  return guarded([&] {
    need(matrix, "matrix");
    need(out, "out");
    const Matrix& v = matrix->data->values;
    std::memcpy(out, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
  });
}

h2nmf_status h2nmf_matrix_save_cube(const h2nmf_matrix* matrix, const char* path) {
  return guarded([&] {
    need(matrix, "matrix");
    need(path, "path");
    const DataMatrix& d = *matrix->data;
    io::save_cube(path, d.values, d.geometry.value_or(Geometry{d.pixels(), 1}));
  });
}

h2nmf_status h2nmf_matrix_save_csv(const h2nmf_matrix* matrix, const char* path) {
  return guarded([&] {
    need(matrix, "matrix");
    need(path, "path");
    io::write_matrix_csv(path, matrix->data->values);
  });
}

void h2nmf_matrix_free(h2nmf_matrix* matrix) { delete matrix; }

void h2nmf_synth_config_init(h2nmf_synth_config* config) {
  if (config == nullptr) return;
  const SynthConfig d;
  *config = {d.epsilon, d.scaling ? 1 : 0, d.outliers ? 1 : 0, d.seed, d.r, d.bands, d.spectra_seed, nullptr};
}

h2nmf_status h2nmf_synth_generate(const h2nmf_synth_config* config, h2nmf_matrix** out, int* labels,
                                  size_t labels_len, h2nmf_matrix** spectra) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    SynthConfig c;
    c.epsilon = config->epsilon;
    c.scaling = config->scaling != 0;
    c.outliers = config->outliers != 0;
    c.seed = config->seed;
    c.r = config->r;
    c.bands = config->bands;
    c.spectra_seed = config->spectra_seed;
    SynthInstance inst = config->spectra_path ? generate(c, load_spectra(config->spectra_path)) : generate(c);
    if (labels != nullptr) {
      if (labels_len != inst.true_labels.size()) fail(ErrorCode::kSizeMismatch, "labels buffer must hold n entries");
      std::copy(inst.true_labels.begin(), inst.true_labels.end(), labels);
    }
    std::unique_ptr<h2nmf_matrix> w;
    if (spectra != nullptr) {
      auto d = std::make_shared<DataMatrix>();
      d->values = inst.w_true;
      w = std::make_unique<h2nmf_matrix>(h2nmf_matrix{std::move(d)});
    }
    auto d = std::make_shared<DataMatrix>();
    d->values = std::move(inst.m);
    *out = new h2nmf_matrix{std::move(d)};
    if (spectra != nullptr) *spectra = w.release();
  });
}

h2nmf_status h2nmf_accuracy(const int* predicted, const int* truth, size_t n, size_t r, double* out) {
  return guarded([&] {
    need(predicted, "predicted");
    need(truth, "truth");
    need(out, "out");
    *out = accuracy({predicted, n}, {truth, n}, r);
  });
}

void h2nmf_options_init(h2nmf_options* options) {
  if (options == nullptr) return;
  const SplitOptions d;
  *options = {"rank2nmf", "eq3", d.delta_hat, d.iteration.seed};
}

h2nmf_status h2nmf_cluster_labels(const h2nmf_matrix* matrix, size_t r, const char* algorithm,
                                  const h2nmf_options* options, int* labels, size_t labels_len) {
  return guarded([&] {
    need(matrix, "matrix");
    need(algorithm, "algorithm");
    need(labels, "labels");
    const Matrix& m = matrix->data->values;
    if (labels_len != static_cast<std::size_t>(m.cols()))
      fail(ErrorCode::kSizeMismatch, "labels buffer must hold n entries");
    const std::vector<int> out = cluster_labels(m, r, parse_algorithm(algorithm), to_options(options).split);
    std::copy(out.begin(), out.end(), labels);
  });
}

h2nmf_status h2nmf_tree_build(const h2nmf_matrix* matrix, size_t r, const h2nmf_options* options,
                              h2nmf_tree** out, int* stopped_early) {
  return guarded([&] {
    need(matrix, "matrix");
    need(out, "out");
    std::shared_ptr<const DataMatrix> owner = matrix->data;
    H2nmfRun run = run_h2nmf(values_of(owner), r, to_options(options));
    if (stopped_early) *stopped_early = run.stopped_early ? 1 : 0;
    *out = new h2nmf_tree{owner, std::make_unique<ClusterTree>(std::move(run.tree))};
  });
}

h2nmf_status h2nmf_tree_replay(const h2nmf_matrix* matrix, const char* log_json, const h2nmf_options* options,
                               h2nmf_tree** out) {
  return guarded([&] {
    need(matrix, "matrix");
    need(log_json, "log_json");
    need(out, "out");
    const auto ops = parse_log_document(nlohmann::json::parse(log_json));
    std::shared_ptr<const DataMatrix> owner = matrix->data;
    auto tree = std::make_unique<ClusterTree>(ClusterTree::replay(values_of(owner), to_options(options), ops));
    *out = new h2nmf_tree{owner, std::move(tree)};
  });
}

h2nmf_status h2nmf_tree_split(h2nmf_tree* tree, size_t leaf, const char* method) {
  return guarded([&] {
    need(tree, "tree");
    std::optional<SplitMethod> m;
    if (method != nullptr) m = parse_split_method(method);
    tree->tree->split(leaf, m);
  });
}

h2nmf_status h2nmf_tree_fuse(h2nmf_tree* tree, size_t leaf_a, size_t leaf_b, size_t* node) {
  return guarded([&] {
    need(tree, "tree");
    const std::size_t id = tree->tree->fuse(leaf_a, leaf_b);
    if (node) *node = id;
  });
}

h2nmf_status h2nmf_tree_undo(h2nmf_tree* tree) {
  return guarded([&] {
    need(tree, "tree");
    if (!tree->tree->undo()) fail(ErrorCode::kDomain, "nothing to undo");
  });
}

h2nmf_status h2nmf_tree_grow(h2nmf_tree* tree, size_t r, int* stopped_early) {
  return guarded([&] {
    need(tree, "tree");
    if (r < 1 || r > static_cast<std::size_t>(tree->tree->data().cols())) fail(ErrorCode::kDomain, "r must lie in [1, n]");
    const bool done = tree->tree->grow_to(r);
    if (stopped_early) *stopped_early = done ? 0 : 1;
  });
}

h2nmf_status h2nmf_tree_leaf_count(const h2nmf_tree* tree, size_t* out) {
  return guarded([&] {
    need(tree, "tree");
    need(out, "out");
    *out = tree->tree->leaf_count();
  });
}

h2nmf_status h2nmf_tree_leaves(const h2nmf_tree* tree, size_t* ids, size_t capacity, size_t* count) {
  return guarded([&] {
    need(tree, "tree");
    const auto leaves = tree->tree->leaves();
    if (count) *count = leaves.size();
    if (ids != nullptr) std::copy_n(leaves.begin(), std::min(capacity, leaves.size()), ids);
  });
}

h2nmf_status h2nmf_tree_total_error(const h2nmf_tree* tree, double* out) {
  return guarded([&] {
    need(tree, "tree");
    need(out, "out");
    *out = tree->tree->total_error();
  });
}

h2nmf_status h2nmf_tree_labels(const h2nmf_tree* tree, int* labels, size_t labels_len) {
  return guarded([&] {
    need(tree, "tree");
    need(labels, "labels");
    const std::vector<int> flat = tree->tree->flatten();
    if (labels_len != flat.size()) fail(ErrorCode::kSizeMismatch, "labels buffer must hold n entries");
    std::copy(flat.begin(), flat.end(), labels);
  });
}

h2nmf_status h2nmf_tree_json(const h2nmf_tree* tree, char** out) {
  return guarded([&] {
    need(tree, "tree");
    need(out, "out");
    *out = dup_string(tree_document(*tree->tree).dump(2));
  });
}

h2nmf_status h2nmf_tree_log_json(const h2nmf_tree* tree, char** out) {
  return guarded([&] {
    need(tree, "tree");
    need(out, "out");
    *out = dup_string(log_document(tree->tree->log()).dump(2));
  });
}

void h2nmf_tree_free(h2nmf_tree* tree) { delete tree; }

h2nmf_status h2nmf_endmembers_extract(const h2nmf_tree* tree, h2nmf_endmembers** out) {
  return guarded([&] {
    need(tree, "tree");
    need(out, "out");
    *out = new h2nmf_endmembers{extract_pure_pixels(*tree->tree, tree->tree->options().split.iteration)};
  });
}

h2nmf_status h2nmf_endmembers_dims(const h2nmf_endmembers* e, size_t* m, size_t* count, size_t* n) {
  return guarded([&] {
    need(e, "endmembers");
    if (m) *m = static_cast<std::size_t>(e->set.signatures.rows());
    if (count) *count = static_cast<std::size_t>(e->set.signatures.cols());
    if (n) *n = static_cast<std::size_t>(e->set.abundances.cols());
  });
}

h2nmf_status h2nmf_endmembers_signatures(const h2nmf_endmembers* e, double* out) {
  return guarded([&] {
    need(e, "endmembers");
    need(out, "out");
    const Matrix& s = e->set.signatures;
    std::memcpy(out, s.data(), sizeof(double) * static_cast<std::size_t>(s.size()));
  });
}

h2nmf_status h2nmf_endmembers_pixels(const h2nmf_endmembers* e, size_t* pixels, size_t* leaf_ids) {
  return guarded([&] {
    need(e, "endmembers");
    if (pixels) std::copy(e->set.pixel_indices.begin(), e->set.pixel_indices.end(), pixels);
    if (leaf_ids) std::copy(e->set.leaf_ids.begin(), e->set.leaf_ids.end(), leaf_ids);
  });
}

h2nmf_status h2nmf_endmembers_abundances(const h2nmf_endmembers* e, double* out) {
  return guarded([&] {
    need(e, "endmembers");
    need(out, "out");
    const Matrix& a = e->set.abundances;
    std::memcpy(out, a.data(), sizeof(double) * static_cast<std::size_t>(a.size()));
  });
}

h2nmf_status h2nmf_endmembers_save_csv(const h2nmf_endmembers* e, const char* path) {
  return guarded([&] {
    need(e, "endmembers");
    need(path, "path");
    io::write_endmembers_csv(path, e->set.signatures, e->set.leaf_ids);
  });
}

void h2nmf_endmembers_free(h2nmf_endmembers* e) { delete e; }

h2nmf_status h2nmf_mrsa(const double* x, const double* y, size_t m, double* out) {
  return guarded([&] {
    need(x, "x");
    need(y, "y");
    need(out, "out");
    const auto len = static_cast<Eigen::Index>(m);
    *out = mrsa(Eigen::Map<const Vector>(x, len), Eigen::Map<const Vector>(y, len));
  });
}

h2nmf_status h2nmf_match_and_score(const double* extracted, const double* truth, size_t m, size_t r,
                                   size_t* permutation, double* scores, double* average) {
  return guarded([&] {
    need(extracted, "extracted");
    need(truth, "truth");
    const auto rows = static_cast<Eigen::Index>(m);
    const auto cols = static_cast<Eigen::Index>(r);
    const MatchResult res = match_and_score(Eigen::Map<const Matrix>(extracted, rows, cols),
                                            Eigen::Map<const Matrix>(truth, rows, cols));
    if (permutation) std::copy(res.permutation.begin(), res.permutation.end(), permutation);
    if (scores) std::copy(res.mrsa.begin(), res.mrsa.end(), scores);
    if (average) *average = res.average;
  });
}

h2nmf_status h2nmf_write_labels_csv(const char* path, const int* labels, size_t n) {
  return guarded([&] {
    need(path, "path");
    need(labels, "labels");
    io::write_labels_csv(path, {labels, n});
  });
}

h2nmf_status h2nmf_write_cluster_map(const char* path, const int* labels, size_t width, size_t height) {
  return guarded([&] {
    need(path, "path");
    need(labels, "labels");
    const std::size_t n = width * height;
    io::cluster_map_image({labels, n}, checked_geometry(n, width, height), path);
  });
}

h2nmf_status h2nmf_write_abundance_image(const char* path, const double* values, size_t width, size_t height) {
  return guarded([&] {
    need(path, "path");
    need(values, "values");
    const std::size_t n = width * height;
    io::abundance_image({values, n}, checked_geometry(n, width, height), path);
  });
}

void h2nmf_bench_config_init(h2nmf_bench_config* config) {
  if (config == nullptr) return;
  const BenchmarkConfig d;
  *config = {"0:0.05:0.5", "h2nmf,hkm,hspkm,km,spkm", 0, 0, d.trials, d.seed, d.r, d.bands, d.spectra_seed, nullptr,
             d.threads};
}

h2nmf_status h2nmf_bench_run(const h2nmf_bench_config* config, const char* out_dir) {
  return guarded([&] {
    need(config, "config");
    need(config->epsilons, "epsilons");
    need(config->algorithms, "algorithms");
    need(out_dir, "out_dir");
    BenchmarkConfig c;
    c.epsilons = parse_range(config->epsilons);
    c.algorithms = parse_algorithms(config->algorithms);
    c.scaling = config->scaling != 0;
    c.outliers = config->outliers != 0;
    c.trials = config->trials;
    c.seed = config->seed;
    c.r = config->r;
    c.bands = config->bands;
    c.spectra_seed = config->spectra_seed;
    c.threads = config->threads;
    if (config->spectra_path) {
      c.spectra = load_spectra(config->spectra_path);
      c.r = static_cast<std::size_t>(c.spectra->cols());
    }
    if (c.trials == 0) fail(ErrorCode::kDomain, "trials must be positive");

    const std::vector<BenchmarkRow> rows = run_benchmark(c);
    const std::vector<BenchmarkSummary> summary = summarize(rows);

    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string());
    auto open = [](const std::filesystem::path& p) {
      std::ofstream f(p);
      if (!f) fail(ErrorCode::kIo, "cannot write " + p.string());
      return f;
    };
    {
      std::ofstream f = open(dir / "bench.csv");
      write_benchmark_csv(f, rows);
      if (!f) fail(ErrorCode::kIo, "write failed: bench.csv");
    }
    {
      std::ofstream f = open(dir / "summary.csv");
      write_summary_csv(f, summary);
      if (!f) fail(ErrorCode::kIo, "write failed: summary.csv");
    }
    {
      const Matrix w = c.spectra ? *c.spectra : procedural_spectra(c.bands, c.r, c.spectra_seed).w;
      nlohmann::json meta = {
          {"prng", kPrngName},
          {"seed", c.seed},
          {"spectra", config->spectra_path ? nlohmann::json(config->spectra_path) : nlohmann::json("procedural")},
          {"spectra_seed", c.spectra_seed},
          {"bands", w.rows()},
          {"r", w.cols()},
          {"condition_number", condition_number(w)},
          {"s", c.scaling ? 1 : 0},
          {"b", c.outliers ? 1 : 0},
          {"trials", c.trials},
          {"epsilons", c.epsilons},
      };
      std::ofstream f = open(dir / "metadata.json");
      f << meta.dump(2) << '\n';
      if (!f) fail(ErrorCode::kIo, "write failed: metadata.json");
    }
    for (Algorithm a : c.algorithms) {
      const std::string name = "curve_" + std::string(to_string(a)) + ".dat";
      std::ofstream f = open(dir / name);
      f << "# epsilon mean_accuracy\n";
      for (const BenchmarkSummary& s : summary) {
        if (s.algorithm == a) f << s.epsilon << ' ' << s.mean_accuracy << '\n';
      }
      if (!f) fail(ErrorCode::kIo, "write failed: " + name);
    }
  });
}

h2nmf_status h2nmf_server_create(const h2nmf_options* options, h2nmf_server** out) {
  return guarded([&] {
    need(out, "out");
    auto s = std::make_unique<h2nmf_server>();
    s->service = std::make_unique<service::Service>(to_options(options));
    *out = s.release();
  });
}

h2nmf_status h2nmf_server_add_session(h2nmf_server* server, const h2nmf_matrix* matrix, char** session_id) {
  return guarded([&] {
    need(server, "server");
    need(matrix, "matrix");
    const std::string id = server->service->create_session(*matrix->data);
    if (session_id) *session_id = dup_string(id);
  });
}

h2nmf_status h2nmf_server_set_snapshot_dir(h2nmf_server* server, const char* dir) {
  return guarded([&] {
    need(server, "server");
    server->service->set_snapshot_dir(dir ? dir : "");
  });
}

h2nmf_status h2nmf_server_request(h2nmf_server* server, const char* method, const char* path, const char* body,
                                  int* http_status, char** content_type, char** body_out, size_t* body_len) {
  return guarded([&] {
    need(server, "server");
    need(method, "method");
    need(path, "path");
    const service::Response r = server->service->handle(method, path, body ? body : "");
    if (http_status) *http_status = r.status;
    if (body_len) *body_len = r.body.size();
    std::unique_ptr<char, decltype(&std::free)> ct(content_type ? dup_string(r.content_type) : nullptr, &std::free);
    if (body_out) *body_out = dup_string(r.body);
    if (content_type) *content_type = ct.release();
  });
}

h2nmf_status h2nmf_server_bind(h2nmf_server* server, const char* host, int port, int* bound_port) {
  return guarded([&] {
    need(server, "server");
    need(host, "host");
    if (port < 0 || port > 65535) fail(ErrorCode::kInvalidArgument, "port out of range");
    if (!server->http) server->http = std::make_unique<service::HttpServer>(*server->service);
    const int p = server->http->bind(host, port);
    if (bound_port) *bound_port = p;
  });
}

h2nmf_status h2nmf_server_run(h2nmf_server* server) {
  return guarded([&] {
    need(server, "server");
    if (!server->http) fail(ErrorCode::kDomain, "server is not bound");
    server->http->listen();
  });
}

h2nmf_status h2nmf_server_start(h2nmf_server* server) {
  return guarded([&] {
    need(server, "server");
    if (!server->http) fail(ErrorCode::kDomain, "server is not bound");
    server->http->start();
  });
}

h2nmf_status h2nmf_server_stop(h2nmf_server* server) {
  return guarded([&] {
    need(server, "server");
    if (server->http) server->http->stop();
  });
}

void h2nmf_server_free(h2nmf_server* server) { delete server; }

}  // extern "C"
