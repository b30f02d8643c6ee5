#include <doctest.h>

#include <json.hpp>
#include <set>

#include "h2nmf/error.hpp"
#include "h2nmf/hierarchy.hpp"
#include "oracles.hpp"

using namespace h2nmf;

namespace {

std::shared_ptr<const Matrix> share(Matrix m) { return std::make_shared<const Matrix>(std::move(m)); }

double sigma1_sq(const Matrix& m, const IndexSet& cols) {
  Matrix sub(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(cols[j]));
  return std::pow(oracle::singular_values(sub)(0), 2);
}

// Groups of noisy copies of random spectra.
Matrix grouped(std::mt19937_64& rng, int rows, const std::vector<int>& sizes, double noise) {
  const Matrix w = oracle::uniform(rng, rows, static_cast<Eigen::Index>(sizes.size()));
  int n = 0;
  for (int s : sizes) n += s;
  Matrix m(rows, n);
  int j = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g)
    for (int c = 0; c < sizes[g]; ++c) m.col(j++) = w.col(static_cast<Eigen::Index>(g));
  return (m + noise * oracle::uniform(rng, rows, n)).eval();
}

void check_tree_invariants(const ClusterTree& t) {
  const auto n = static_cast<std::size_t>(t.data().cols());
  std::vector<int> seen(n, 0);
  for (std::size_t id : t.leaves())
    for (std::size_t j : t.node(id).indices) ++seen[j];
  for (int s : seen) CHECK(s == 1);
  double leaf_sum = 0.0;
  for (const auto& [id, node] : t.nodes()) {
    CHECK(node.sigma1_sq >= 0.0);
    CHECK(node.sigma1_sq == doctest::Approx(sigma1_sq(t.data(), node.indices)).epsilon(1e-6));
    if (node.state == NodeState::kInternal) {
      REQUIRE(node.children);
      IndexSet both = t.node(node.children->first).indices;
      const IndexSet& b = t.node(node.children->second).indices;
      both.insert(both.end(), b.begin(), b.end());
      std::sort(both.begin(), both.end());
      CHECK(both == node.indices);
    }
    if (node.state == NodeState::kLeaf) leaf_sum += node.sigma1_sq;
  }
  CHECK(t.total_error() == doctest::Approx(t.data().squaredNorm() - leaf_sum).epsilon(1e-6).scale(t.data().squaredNorm()));
}

std::size_t splits_in(const std::vector<TreeOp>& log) {
  std::size_t k = 0;
  for (const TreeOp& op : log) k += op.kind == TreeOp::Kind::kSplit;
  return k;
}

}  // namespace

TEST_CASE("gain of two orthogonal pairs") {
  Matrix m = Matrix::Zero(3, 4);
  m(0, 0) = m(0, 1) = 1.0;
  m(1, 2) = m(1, 3) = 1.0;
  ClusterTree t(share(m));
  const ClusterNode& root = t.node(0);
  CHECK(root.sigma1_sq == doctest::Approx(2.0));
  REQUIRE(root.pending);
  CHECK(root.gain() == doctest::Approx(2.0));
  CHECK(root.pending->sigma1_sq_k1 == doctest::Approx(2.0));
  CHECK(root.pending->sigma1_sq_k2 == doctest::Approx(2.0));
}

TEST_CASE("identical and parallel columns have no gain") {
  Matrix same = Matrix::Zero(3, 4);
  same.row(0).setOnes();
  ClusterTree a(share(same));
  CHECK(a.node(0).gain() == 0.0);
  CHECK_FALSE(a.node(0).has_positive_gain());

  Vector s(5);
  s << 1, 2, 3, 4, 5;
  Matrix parallel = Vector::LinSpaced(4, 1, 2) * s.transpose();
  ClusterTree b(share(parallel));
  CHECK_FALSE(b.node(0).has_positive_gain());
  CHECK_FALSE(b.select_leaf());
}

TEST_CASE("r = 1 and r out of range") {
  std::mt19937_64 rng(51);
  const auto m = share(oracle::uniform(rng, 4, 10));
  const H2nmfRun run = run_h2nmf(m, 1);
  CHECK(run.tree.leaf_count() == 1);
  CHECK(run.tree.flatten() == std::vector<int>(10, 1));
  CHECK_THROWS_AS(run_h2nmf(m, 0), Error);
  CHECK_THROWS_AS(run_h2nmf(m, 11), Error);
}

TEST_CASE("noiseless groups are recovered exactly") {
  std::mt19937_64 rng(52);
  for (int r = 2; r <= 6; ++r) {
    std::vector<int> sizes;
    std::vector<int> truth;
    for (int g = 0; g < r; ++g) {
      sizes.push_back(5 + 3 * g);
      truth.insert(truth.end(), static_cast<std::size_t>(5 + 3 * g), g + 1);
    }
    const Matrix m = grouped(rng, 20, sizes, 0.0);
    const H2nmfRun run = run_h2nmf(share(m), static_cast<std::size_t>(r));
    CHECK_FALSE(run.stopped_early);
    CHECK(oracle::brute_force_accuracy(run.tree.flatten(), truth, r) == 1.0);
    check_tree_invariants(run.tree);
  }
}

TEST_CASE("each applied split has the largest gain and lowers E by it") {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 5; ++t) {
    const Matrix m = grouped(rng, 15, {40, 30, 30, 20, 20, 10}, 0.05);
    ClusterTree tree(share(m));
    for (int k = 1; k < 6; ++k) {
      const auto pick = tree.select_leaf();
      REQUIRE(pick);
      const double applied = tree.node(*pick).gain();
      for (std::size_t id : tree.leaves()) {
        const ClusterNode& leaf = tree.node(id);
        if (!leaf.pending) continue;
        // Recompute the pending gain from scratch.
        const double fresh = sigma1_sq(m, leaf.pending->split.k1) + sigma1_sq(m, leaf.pending->split.k2) -
                             sigma1_sq(m, leaf.indices);
        CHECK(leaf.gain() == doctest::Approx(fresh).epsilon(1e-6).scale(leaf.norm_sq));
        CHECK(applied >= fresh - 1e-9 * m.squaredNorm());
      }
      const double before = tree.total_error();
      tree.split(*pick);
      CHECK(before - tree.total_error() == doctest::Approx(applied).epsilon(1e-6).scale(before));
      check_tree_invariants(tree);
    }
  }
}

TEST_CASE("split leaves other leaves alone") {
  std::mt19937_64 rng(54);
  const Matrix m = grouped(rng, 10, {10, 10, 10}, 0.02);
  ClusterTree t(share(m));
  t.split(0);
  const auto leaves = t.leaves();
  const IndexSet untouched = t.node(leaves[1]).indices;
  t.split(leaves[0]);
  CHECK(t.node(leaves[1]).indices == untouched);
  CHECK(t.leaf_count() == 3);
}

TEST_CASE("split errors") {
  std::mt19937_64 rng(55);
  const Matrix m = grouped(rng, 6, {5, 5}, 0.0);
  ClusterTree t(share(m));
  t.split(0);
  auto code = [&](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode{};
  };
  CHECK(code([&] { t.split(0); }) == ErrorCode::kDomain);
  CHECK(code([&] { t.split(99); }) == ErrorCode::kNotFound);
  // Each child holds identical columns.
  CHECK(code([&] { t.split(t.leaves()[0]); }) == ErrorCode::kUnsplittable);
  CHECK(code([&] { t.fuse(1, 1); }) == ErrorCode::kDomain);
  CHECK(code([&] { t.fuse(0, 1); }) == ErrorCode::kDomain);
}

TEST_CASE("split then undo restores the tree") {
  std::mt19937_64 rng(56);
  const Matrix m = grouped(rng, 10, {20, 15, 10}, 0.03);
  ClusterTree t(share(m));
  t.split(0);
  const nlohmann::json before = tree_document(t);
  t.split(t.select_leaf().value());
  CHECK(t.undo());
  CHECK(tree_document(t) == before);
  CHECK(t.undo());
  CHECK(t.leaf_count() == 1);
  CHECK_FALSE(t.undo());
}

TEST_CASE("fusing siblings restores the pre-split tree") {
  std::mt19937_64 rng(57);
  const Matrix m = grouped(rng, 10, {20, 15, 10}, 0.03);
  ClusterTree t(share(m));
  t.split(0);
  const nlohmann::json before = tree_document(t);
  const double e_before = t.total_error();
  const std::size_t leaf = t.select_leaf().value();
  t.split(leaf);
  const auto [c1, c2] = t.node(leaf).children.value();
  CHECK(t.fuse(c1, c2) == leaf);
  CHECK(tree_document(t) == before);
  CHECK(t.total_error() == doctest::Approx(e_before).epsilon(1e-6));
  check_tree_invariants(t);
  // Undo the fuse, then the split.
  CHECK(t.undo());
  CHECK(t.leaf_count() == 3);
  check_tree_invariants(t);
}

TEST_CASE("fusing non-siblings") {
  std::mt19937_64 rng(58);
  const Matrix m = grouped(rng, 10, {20, 15, 10}, 0.03);
  ClusterTree t(share(m));
  t.grow_to(3);
  const auto leaves = t.leaves();
  std::size_t a = leaves[0], b = leaves[2];
  if (t.node(a).parent == t.node(b).parent) b = leaves[1];
  REQUIRE(t.node(a).parent != t.node(b).parent);
  const std::size_t sa = t.node(a).indices.size(), sb = t.node(b).indices.size();
  const std::size_t fused = t.fuse(a, b);
  CHECK(t.node(fused).indices.size() == sa + sb);
  CHECK(t.node(a).state == NodeState::kAbsorbed);
  CHECK(t.node(a).fused_into == fused);
  CHECK(t.leaf_count() == 2);
  check_tree_invariants(t);
  CHECK(t.undo());
  CHECK(t.leaf_count() == 3);
  CHECK(t.node(a).state == NodeState::kLeaf);
  check_tree_invariants(t);
}

TEST_CASE("leaf count tracks splits and fuses") {
  std::mt19937_64 rng(59);
  const Matrix m = grouped(rng, 8, {12, 10, 8, 6}, 0.05);
  ClusterTree t(share(m));
  t.grow_to(4);
  const auto leaves = t.leaves();
  t.fuse(leaves[0], leaves[3]);
  std::size_t fuses = 0;
  for (const TreeOp& op : t.log()) fuses += op.kind == TreeOp::Kind::kFuse;
  CHECK(t.leaf_count() == 1 + splits_in(t.log()) - fuses);
}

TEST_CASE("replay rebuilds an identical tree") {
  std::mt19937_64 rng(60);
  const auto m = share(grouped(rng, 8, {12, 10, 8, 6}, 0.05));
  ClusterTree t(m);
  t.grow_to(4);
  const auto leaves = t.leaves();
  t.fuse(leaves[1], leaves[2]);
  const ClusterTree again = ClusterTree::replay(m, {}, parse_log_document(log_document(t.log())));
  CHECK(tree_document(again) == tree_document(t));
  CHECK(again.flatten() == t.flatten());
}

TEST_CASE("smaller r yields a prefix of the split log") {
  std::mt19937_64 rng(61);
  const auto m = share(grouped(rng, 12, {30, 25, 20, 15, 10, 8}, 0.05));
  const H2nmfRun big = run_h2nmf(m, 6);
  for (std::size_t r = 1; r < 6; ++r) {
    const H2nmfRun small = run_h2nmf(m, r);
    REQUIRE(small.tree.log().size() <= big.tree.log().size());
    for (std::size_t i = 0; i < small.tree.log().size(); ++i) CHECK(small.tree.log()[i].a == big.tree.log()[i].a);
  }
}

TEST_CASE("stops early when nothing can be split") {
  Matrix m = Matrix::Zero(2, 4);
  m.row(0).setOnes();
  m(1, 3) = 1.0;
  const H2nmfRun run = run_h2nmf(share(m), 4);
  CHECK(run.stopped_early);
  CHECK(run.tree.leaf_count() < 4);
}

TEST_CASE("flatten numbers leaves by creation") {
  std::mt19937_64 rng(62);
  const Matrix m = grouped(rng, 10, {5, 6, 7}, 0.0);
  const H2nmfRun run = run_h2nmf(share(m), 3);
  const std::vector<int> labels = run.tree.flatten();
  const auto leaves = run.tree.leaves();
  for (std::size_t k = 0; k < leaves.size(); ++k)
    for (std::size_t j : run.tree.node(leaves[k]).indices) CHECK(labels[j] == static_cast<int>(k + 1));
  CHECK(std::is_sorted(leaves.begin(), leaves.end()));
}

TEST_CASE("tree document fields") {
  std::mt19937_64 rng(63);
  const Matrix m = grouped(rng, 5, {4, 4}, 0.0);
  const H2nmfRun run = run_h2nmf(share(m), 2);
  const nlohmann::json doc = tree_document(run.tree);
  CHECK(doc["format"] == "h2nmf-tree/1");
  CHECK(doc["n"] == 8);
  CHECK(doc["m"] == 5);
  CHECK(doc["nodes"].size() == 3);
  for (const auto& node : doc["nodes"]) {
    for (const char* key : {"id", "parent", "children", "state", "size", "sigma1_sq", "gain"}) CHECK(node.contains(key));
  }
  CHECK(doc["leaves"].size() == 2);
}

TEST_CASE("malformed log documents") {
  CHECK_THROWS_AS(parse_log_document(nlohmann::json::parse(R"({"format":"other"})")), Error);
  CHECK_THROWS_AS(parse_log_document(nlohmann::json::parse(R"({"format":"h2nmf-log/1","ops":[{"op":"grow"}]})")), Error);
}

TEST_CASE("method override on an interactive split") {
  std::mt19937_64 rng(64);
  const Matrix m = grouped(rng, 10, {15, 15}, 0.02);
  ClusterTree t(share(m));
  t.split(0, SplitMethod::kKMeans);
  CHECK(t.log().back().method == SplitMethod::kKMeans);
  CHECK(t.node(0).pending->split.method == SplitMethod::kKMeans);
  check_tree_invariants(t);
  t.undo();
  CHECK(t.node(0).pending->split.method == SplitMethod::kRank2Nmf);
}
