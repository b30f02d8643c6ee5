#pragma once

#include <cstddef>
#include <vector>

#include "h2nmf/hierarchy.hpp"
#include "h2nmf/linalg.hpp"
#include "h2nmf/matrix.hpp"

namespace h2nmf {

// Leading singular pair of a cluster, M(:, K) ~ u v^T, oriented so that both
// factors are nonnegative. ||u|| = 1.
struct Rank1Pair {
  Vector u;
  Vector v;
};

Rank1Pair rank1_signature(const Matrix& m, const IndexSet& cluster,
                          const linalg::IterationOptions& opts = {});

// Mean-removed spectral angle in [0, 1]: arccos of the correlation of the
// mean-centered spectra, divided by pi. Throws kDomain for a constant input.
double mrsa(const Vector& x, const Vector& y);

struct EndmemberSet {
  Matrix signatures;                       // m x r, one pixel spectrum per leaf
  std::vector<std::size_t> pixel_indices;  // chosen pixel of each leaf
  std::vector<std::size_t> leaf_ids;       // tree leaves, creation order
  Matrix abundances;                       // r x n
};

// For every leaf, the member pixel closest in MRSA to the leaf's rank-one
// signature (smallest index on ties), plus NNLS abundances of all pixels.
EndmemberSet extract_pure_pixels(const ClusterTree& tree, const linalg::IterationOptions& opts = {});

struct MatchResult {
  std::vector<std::size_t> permutation;  // truth column k <-> extracted column permutation[k]
  std::vector<double> mrsa;              // per truth column
  double average = 0.0;
};

// Pairs extracted and true signatures so the summed MRSA is minimal.
MatchResult match_and_score(const Matrix& extracted, const Matrix& truth);

// Active-set (Lawson-Hanson) NNLS in normal-equation form:
// argmin_{x >= 0} x^T G x - 2 c^T x.
Vector nnls_active_set(const Matrix& gram, const Vector& c);

// argmin_{H >= 0} ||M - W H||_F, column by column.
Matrix abundance_maps(const Matrix& m, const Matrix& signatures);

}  // namespace h2nmf
