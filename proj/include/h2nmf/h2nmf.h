/* C interface to the h2nmf library.
 *
 * All functions return an h2nmf_status; on failure h2nmf_last_error() holds a
 * message for the calling thread. Handles are opaque and owned by the caller.
 * Dense matrices cross the boundary column-major (one pixel per column).
 */
#ifndef H2NMF_H2NMF_H
#define H2NMF_H2NMF_H

#include <stddef.h>
#include <stdint.h>

#if defined(H2NMF_BUILDING_LIBRARY)
#define H2NMF_API __attribute__((visibility("default")))
#else
#define H2NMF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum h2nmf_status {
  H2NMF_OK = 0,
  H2NMF_E_INVALID_ARGUMENT = 1,
  H2NMF_E_DOMAIN = 2,
  H2NMF_E_UNSPLITTABLE = 3,
  H2NMF_E_DEGENERATE = 4,
  H2NMF_E_IO = 5,
  H2NMF_E_BAD_MAGIC = 6,
  H2NMF_E_TRUNCATED = 7,
  H2NMF_E_SIZE_MISMATCH = 8,
  H2NMF_E_PARSE = 9,
  H2NMF_E_NO_GEOMETRY = 10,
  H2NMF_E_STALE_REVISION = 11,
  H2NMF_E_NOT_FOUND = 12,
  H2NMF_E_INTERNAL = 99
} h2nmf_status;

typedef struct h2nmf_matrix h2nmf_matrix;
typedef struct h2nmf_tree h2nmf_tree;
typedef struct h2nmf_endmembers h2nmf_endmembers;
typedef struct h2nmf_server h2nmf_server;

H2NMF_API const char* h2nmf_version(void);
H2NMF_API const char* h2nmf_last_error(void);
H2NMF_API const char* h2nmf_status_name(h2nmf_status status);
H2NMF_API void h2nmf_string_free(char* s);

/* ---- matrices ---- */

/* Loads a cube or CSV file (detected by content). Negative entries are
 * clamped to zero; their count goes to *clamped when it is non-NULL. */
H2NMF_API h2nmf_status h2nmf_matrix_load(const char* path, h2nmf_matrix** out, size_t* clamped);
H2NMF_API h2nmf_status h2nmf_matrix_from_data(const double* values, size_t m, size_t n, h2nmf_matrix** out);
/* width * height must equal n; width = height = 0 removes the geometry. */
H2NMF_API h2nmf_status h2nmf_matrix_set_geometry(h2nmf_matrix* matrix, size_t width, size_t height);
/* width and height are 0 when the matrix carries no image geometry. */
H2NMF_API h2nmf_status h2nmf_matrix_dims(const h2nmf_matrix* matrix, size_t* m, size_t* n, size_t* width,
                                         size_t* height);
H2NMF_API h2nmf_status h2nmf_matrix_copy(const h2nmf_matrix* matrix, double* out);
H2NMF_API h2nmf_status h2nmf_matrix_save_cube(const h2nmf_matrix* matrix, const char* path);
H2NMF_API h2nmf_status h2nmf_matrix_save_csv(const h2nmf_matrix* matrix, const char* path);
H2NMF_API void h2nmf_matrix_free(h2nmf_matrix* matrix);

/* ---- synthetic data ---- */

typedef struct h2nmf_synth_config {
  double epsilon;
  int scaling;  /* s */
  int outliers; /* b */
  uint64_t seed;
  size_t r;
  size_t bands;
  uint64_t spectra_seed;
  const char* spectra_path; /* CSV, bands x r; NULL: procedural spectra */
} h2nmf_synth_config;

H2NMF_API void h2nmf_synth_config_init(h2nmf_synth_config* config);
/* labels (length n, may be NULL) receives 1..r, 0 for outliers and background.
 * spectra (may be NULL) receives the bands x r ground-truth signatures. */
H2NMF_API h2nmf_status h2nmf_synth_generate(const h2nmf_synth_config* config, h2nmf_matrix** out, int* labels,
                                            size_t labels_len, h2nmf_matrix** spectra);
/* Fraction of labelled pixels whose predicted cluster matches the truth under
 * the best one-to-one relabelling. */
H2NMF_API h2nmf_status h2nmf_accuracy(const int* predicted, const int* truth, size_t n, size_t r, double* out);

/* ---- clustering ---- */

typedef struct h2nmf_options {
  const char* method;    /* rank2nmf (default), kmeans, spherical_kmeans */
  const char* objective; /* eq3 (default) or alt */
  double delta_hat;      /* 0.05 */
  uint64_t seed;
} h2nmf_options;

H2NMF_API void h2nmf_options_init(h2nmf_options* options);

/* Flat labels 1..r. algorithm: h2nmf, hkm, hspkm, km, spkm. */
H2NMF_API h2nmf_status h2nmf_cluster_labels(const h2nmf_matrix* matrix, size_t r, const char* algorithm,
                                            const h2nmf_options* options, int* labels, size_t labels_len);

/* Greedy hierarchy grown to r leaves (r = 1 leaves only the root). The tree
 * keeps a reference to the matrix data; the matrix handle may be freed. */
H2NMF_API h2nmf_status h2nmf_tree_build(const h2nmf_matrix* matrix, size_t r, const h2nmf_options* options,
                                        h2nmf_tree** out, int* stopped_early);
H2NMF_API h2nmf_status h2nmf_tree_replay(const h2nmf_matrix* matrix, const char* log_json,
                                         const h2nmf_options* options, h2nmf_tree** out);
/* method may be NULL to use the tree's default. */
H2NMF_API h2nmf_status h2nmf_tree_split(h2nmf_tree* tree, size_t leaf, const char* method);
H2NMF_API h2nmf_status h2nmf_tree_fuse(h2nmf_tree* tree, size_t leaf_a, size_t leaf_b, size_t* node);
H2NMF_API h2nmf_status h2nmf_tree_undo(h2nmf_tree* tree);
H2NMF_API h2nmf_status h2nmf_tree_grow(h2nmf_tree* tree, size_t r, int* stopped_early);
H2NMF_API h2nmf_status h2nmf_tree_leaf_count(const h2nmf_tree* tree, size_t* out);
/* Leaf ids in creation order; writes min(count, capacity) ids. */
H2NMF_API h2nmf_status h2nmf_tree_leaves(const h2nmf_tree* tree, size_t* ids, size_t capacity, size_t* count);
H2NMF_API h2nmf_status h2nmf_tree_total_error(const h2nmf_tree* tree, double* out);
/* Label j is the 1-based position of pixel j's leaf in creation order. */
H2NMF_API h2nmf_status h2nmf_tree_labels(const h2nmf_tree* tree, int* labels, size_t labels_len);
/* JSON documents; release with h2nmf_string_free. */
H2NMF_API h2nmf_status h2nmf_tree_json(const h2nmf_tree* tree, char** out);
H2NMF_API h2nmf_status h2nmf_tree_log_json(const h2nmf_tree* tree, char** out);
H2NMF_API void h2nmf_tree_free(h2nmf_tree* tree);

/* ---- endmembers ---- */

/* One pure pixel per leaf. */
H2NMF_API h2nmf_status h2nmf_endmembers_extract(const h2nmf_tree* tree, h2nmf_endmembers** out);
H2NMF_API h2nmf_status h2nmf_endmembers_dims(const h2nmf_endmembers* e, size_t* m, size_t* count, size_t* n);
/* m x count, column-major. */
H2NMF_API h2nmf_status h2nmf_endmembers_signatures(const h2nmf_endmembers* e, double* out);
H2NMF_API h2nmf_status h2nmf_endmembers_pixels(const h2nmf_endmembers* e, size_t* pixels, size_t* leaf_ids);
/* count x n, column-major: abundances of pixel j are out[j*count .. j*count+count). */
H2NMF_API h2nmf_status h2nmf_endmembers_abundances(const h2nmf_endmembers* e, double* out);
H2NMF_API h2nmf_status h2nmf_endmembers_save_csv(const h2nmf_endmembers* e, const char* path);
H2NMF_API void h2nmf_endmembers_free(h2nmf_endmembers* e);

/* Mean-removed spectral angle in [0, 1]. */
H2NMF_API h2nmf_status h2nmf_mrsa(const double* x, const double* y, size_t m, double* out);
/* extracted and truth are m x r column-major. permutation[i] is the extracted
 * column matched to truth column i; mrsa[i] its score. */
H2NMF_API h2nmf_status h2nmf_match_and_score(const double* extracted, const double* truth, size_t m, size_t r,
                                             size_t* permutation, double* mrsa, double* average);

/* ---- output files ---- */

H2NMF_API h2nmf_status h2nmf_write_labels_csv(const char* path, const int* labels, size_t n);
H2NMF_API h2nmf_status h2nmf_write_cluster_map(const char* path, const int* labels, size_t width, size_t height);
/* Also writes "<path>.txt" with the normalization bounds. */
H2NMF_API h2nmf_status h2nmf_write_abundance_image(const char* path, const double* values, size_t width,
                                                   size_t height);

/* ---- benchmark ---- */

typedef struct h2nmf_bench_config {
  const char* epsilons;   /* "start:step:end" or comma list */
  const char* algorithms; /* comma list, e.g. "h2nmf,hkm,hspkm,km,spkm" */
  int scaling;
  int outliers;
  size_t trials;
  uint64_t seed;
  size_t r;
  size_t bands;
  uint64_t spectra_seed;
  const char* spectra_path; /* CSV, bands x r; NULL: procedural spectra */
  unsigned threads;         /* 0: all cores */
} h2nmf_bench_config;

H2NMF_API void h2nmf_bench_config_init(h2nmf_bench_config* config);
/* Writes bench.csv, summary.csv and curve_<ALGO>.dat under out_dir. */
H2NMF_API h2nmf_status h2nmf_bench_run(const h2nmf_bench_config* config, const char* out_dir);

/* ---- session service ---- */

H2NMF_API h2nmf_status h2nmf_server_create(const h2nmf_options* options, h2nmf_server** out);
/* Registers a copy of the matrix as a session; *session_id is released with
 * h2nmf_string_free. */
H2NMF_API h2nmf_status h2nmf_server_add_session(h2nmf_server* server, const h2nmf_matrix* matrix,
                                                char** session_id);
/* Write each session's operation log to <dir>/<session id>.log.json after
 * every mutation; NULL or "" disables. */
H2NMF_API h2nmf_status h2nmf_server_set_snapshot_dir(h2nmf_server* server, const char* dir);
/* In-process request; body_out is NUL-terminated (images may embed NULs, use
 * body_len). Release content_type and body_out with h2nmf_string_free. */
H2NMF_API h2nmf_status h2nmf_server_request(h2nmf_server* server, const char* method, const char* path,
                                            const char* body, int* http_status, char** content_type,
                                            char** body_out, size_t* body_len);
/* port 0 binds a free port, reported in *bound_port. */
H2NMF_API h2nmf_status h2nmf_server_bind(h2nmf_server* server, const char* host, int port, int* bound_port);
H2NMF_API h2nmf_status h2nmf_server_run(h2nmf_server* server); /* blocks until stop */
H2NMF_API h2nmf_status h2nmf_server_start(h2nmf_server* server); /* background thread */
H2NMF_API h2nmf_status h2nmf_server_stop(h2nmf_server* server);
H2NMF_API void h2nmf_server_free(h2nmf_server* server);

#ifdef __cplusplus
}
#endif

#endif
