#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "h2nmf/matrix.hpp"
#include "h2nmf/splitter.hpp"

namespace h2nmf {

// Precomputed split of a node, with the leading singular values of its two
// halves.
struct PendingSplit {
  SplitResult split;
  double sigma1_sq_k1 = 0.0;
  double sigma1_sq_k2 = 0.0;
  double gain = 0.0;  // sigma1_sq_k1 + sigma1_sq_k2 - sigma1_sq(node)
};

enum class NodeState { kLeaf, kInternal, kAbsorbed };

struct ClusterNode {
  std::size_t id = 0;
  IndexSet indices;  // sorted column indices
  double sigma1_sq = 0.0;
  double norm_sq = 0.0;  // ||M(:, K)||_F^2
  std::optional<PendingSplit> pending;  // empty: singleton or unsplittable
  std::optional<std::pair<std::size_t, std::size_t>> children;
  std::optional<std::size_t> parent;
  std::vector<std::size_t> fused_from;
  std::optional<std::size_t> fused_into;
  NodeState state = NodeState::kLeaf;

  // Error of the best rank-one approximation of M(:, K).
  double error() const { return norm_sq - sigma1_sq; }
  // 0 for singleton and unsplittable nodes.
  double gain() const { return pending ? pending->gain : 0.0; }
  // True when splitting reduces the error by a non-negligible amount.
  bool has_positive_gain() const;
};

struct TreeOp {
  enum class Kind { kSplit, kFuse };
  Kind kind = Kind::kSplit;
  std::size_t a = 0;
  std::size_t b = 0;  // fuse only
  std::optional<SplitMethod> method;  // split only; empty = tree default
};

struct HierarchyOptions {
  SplitOptions split;
};

// Binary cluster hierarchy over the columns of a data matrix. Mutations are
// single-writer; const members may run concurrently between mutations.
//
// The greedy rule picks the leaf whose pending split removes the most of the
// total rank-one error E = sum_leaves (||M(:,K)||_F^2 - sigma1^2(M(:,K))).
// It tends to favor large clusters.
class ClusterTree {
 public:
  ClusterTree(std::shared_ptr<const Matrix> data, HierarchyOptions opts = {});

  const Matrix& data() const { return *data_; }
  std::shared_ptr<const Matrix> data_ptr() const { return data_; }
  const HierarchyOptions& options() const { return opts_; }

  const std::map<std::size_t, ClusterNode>& nodes() const { return nodes_; }
  const ClusterNode& node(std::size_t id) const;
  std::vector<std::size_t> leaves() const;  // ordered by creation
  std::size_t leaf_count() const;
  const std::vector<TreeOp>& log() const { return log_; }

  // Leaf with the largest positive gain (smallest id on ties), if any.
  std::optional<std::size_t> select_leaf() const;

  // Applies the pending split of a leaf. With a method different from the
  // one the pending split used, the split is recomputed first. Throws
  // kNotFound, kDomain (not a leaf) or kUnsplittable.
  void split(std::size_t leaf, std::optional<SplitMethod> method = std::nullopt);

  // Merges two leaves. Siblings collapse back into their parent; otherwise a
  // new leaf holding the union is created.
  std::size_t fuse(std::size_t leaf_a, std::size_t leaf_b);

  // Reverts the last split or fuse. Returns false on an empty log.
  bool undo();

  // Greedy splits until `target` leaves exist. Returns false if it had to
  // stop early because no leaf had a positive gain.
  bool grow_to(std::size_t target);

  double total_error() const;

  // 1-based leaf number of every column, leaves numbered by creation.
  std::vector<int> flatten() const;

  // Rebuilds a tree by replaying an operation log on a fresh root.
  static ClusterTree replay(std::shared_ptr<const Matrix> data, HierarchyOptions opts,
                            const std::vector<TreeOp>& ops);

 private:
  struct Undo {
    std::vector<ClusterNode> removed;           // nodes erased by the op
    std::optional<PendingSplit> replaced;       // pending split swapped by a method override
    bool pending_replaced = false;
    std::size_t created = 0;                    // node created by a non-sibling fuse
    bool collapsed = false;
    std::size_t next_id = 0;
  };

  ClusterNode& mutable_node(std::size_t id);
  std::size_t add_node(IndexSet indices, std::optional<std::size_t> parent);
  std::optional<PendingSplit> precompute(const ClusterNode& node, const SplitOptions& opts) const;

  std::shared_ptr<const Matrix> data_;
  HierarchyOptions opts_;
  std::map<std::size_t, ClusterNode> nodes_;
  std::size_t next_id_ = 0;
  std::vector<TreeOp> log_;
  std::vector<Undo> undo_;
};

struct H2nmfRun {
  ClusterTree tree;
  bool stopped_early = false;
};

// Greedy hierarchical clustering into r leaves.
H2nmfRun run_h2nmf(std::shared_ptr<const Matrix> data, std::size_t r, HierarchyOptions opts = {});

// Tree document, schema "h2nmf-tree/1".
nlohmann::json tree_document(const ClusterTree& tree);
nlohmann::json log_document(const std::vector<TreeOp>& ops);
std::vector<TreeOp> parse_log_document(const nlohmann::json& doc);

}  // namespace h2nmf
