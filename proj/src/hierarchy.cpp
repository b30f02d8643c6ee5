#include "h2nmf/hierarchy.hpp"

#include <algorithm>
#include <string>

#include "h2nmf/error.hpp"

namespace h2nmf {

bool ClusterNode::has_positive_gain() const {
  return pending && pending->gain > 1e-12 * norm_sq;
}

ClusterTree::ClusterTree(std::shared_ptr<const Matrix> data, HierarchyOptions opts)
    : data_(std::move(data)), opts_(std::move(opts)) {
  if (!data_ || data_->cols() == 0) fail(ErrorCode::kDomain, "cluster tree needs a nonempty data matrix");
  add_node(all_columns(static_cast<std::size_t>(data_->cols())), std::nullopt);
}

const ClusterNode& ClusterTree::node(std::size_t id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) fail(ErrorCode::kNotFound, "no node with id " + std::to_string(id));
  return it->second;
}

ClusterNode& ClusterTree::mutable_node(std::size_t id) {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) fail(ErrorCode::kNotFound, "no node with id " + std::to_string(id));
  return it->second;
}

std::vector<std::size_t> ClusterTree::leaves() const {
  std::vector<std::size_t> out;
  for (const auto& [id, n] : nodes_)
    if (n.state == NodeState::kLeaf) out.push_back(id);
  return out;
}

std::size_t ClusterTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& kv) {
    return kv.second.state == NodeState::kLeaf;
  }));
}

std::optional<PendingSplit> ClusterTree::precompute(const ClusterNode& node,
                                                    const SplitOptions& opts) const {
  if (node.indices.size() < 2) return std::nullopt;
  PendingSplit p;
  try {
    p.split = split_cluster(*data_, node.indices, opts);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnsplittable || e.code() == ErrorCode::kDegenerateFactors)
      return std::nullopt;
    throw;
  }
  if (p.split.k1.empty() || p.split.k2.empty()) return std::nullopt;
  p.sigma1_sq_k1 = linalg::leading_sigma_sq(*data_, p.split.k1, opts.iteration);
  p.sigma1_sq_k2 = linalg::leading_sigma_sq(*data_, p.split.k2, opts.iteration);
  p.gain = p.sigma1_sq_k1 + p.sigma1_sq_k2 - node.sigma1_sq;
  p.split.score = p.gain;
  return p;
}

std::size_t ClusterTree::add_node(IndexSet indices, std::optional<std::size_t> parent) {
  std::sort(indices.begin(), indices.end());
  ClusterNode n;
  n.id = next_id_++;
  n.parent = parent;
  const Matrix block = gather_columns(*data_, indices);
  n.indices = std::move(indices);
  n.norm_sq = block.squaredNorm();
  n.sigma1_sq = linalg::leading_sigma_sq(block, opts_.split.iteration);
  n.pending = precompute(n, opts_.split);
  const std::size_t id = n.id;
  nodes_.emplace(id, std::move(n));
  return id;
}

std::optional<std::size_t> ClusterTree::select_leaf() const {
  std::optional<std::size_t> best;
  double best_gain = 0.0;
  for (const auto& [id, n] : nodes_) {
    if (n.state != NodeState::kLeaf || !n.has_positive_gain()) continue;
    if (!best || n.pending->gain > best_gain) {
      best = id;
      best_gain = n.pending->gain;
    }
  }
  return best;
}

void ClusterTree::split(std::size_t leaf, std::optional<SplitMethod> method) {
  ClusterNode& n = mutable_node(leaf);
  if (n.state != NodeState::kLeaf) fail(ErrorCode::kDomain, "node " + std::to_string(leaf) + " is not a leaf");

  Undo u;
  u.next_id = next_id_;
  bool replaced = false;
  if (method && (!n.pending || n.pending->split.method != *method)) {
    SplitOptions o = opts_.split;
    o.method = *method;
    u.replaced = n.pending;
    replaced = true;
    n.pending = precompute(n, o);
  }
  if (!n.pending) {
    if (replaced) n.pending = u.replaced;
    fail(ErrorCode::kUnsplittable, "unsplittable cluster");
  }

  IndexSet k1 = n.pending->split.k1;
  IndexSet k2 = n.pending->split.k2;
  const std::size_t c1 = add_node(std::move(k1), leaf);
  const std::size_t c2 = add_node(std::move(k2), leaf);
  ClusterNode& parent = mutable_node(leaf);
  parent.children = std::make_pair(c1, c2);
  parent.state = NodeState::kInternal;

  u.pending_replaced = replaced;
  log_.push_back({TreeOp::Kind::kSplit, leaf, 0, method});
  undo_.push_back(std::move(u));
}

std::size_t ClusterTree::fuse(std::size_t leaf_a, std::size_t leaf_b) {
  if (leaf_a == leaf_b) fail(ErrorCode::kDomain, "cannot fuse a leaf with itself");
  ClusterNode& a = mutable_node(leaf_a);
  ClusterNode& b = mutable_node(leaf_b);
  if (a.state != NodeState::kLeaf || b.state != NodeState::kLeaf)
    fail(ErrorCode::kDomain, "only leaves can be fused");

  Undo u;
  u.next_id = next_id_;
  std::size_t result = 0;
  const bool siblings = a.parent && a.parent == b.parent;
  if (siblings) {
    ClusterNode& p = mutable_node(*a.parent);
    result = p.id;
    u.collapsed = true;
    u.removed = {a, b};
    nodes_.erase(leaf_a);
    nodes_.erase(leaf_b);
    p.children.reset();
    p.state = NodeState::kLeaf;
  } else {
    IndexSet merged = a.indices;
    merged.insert(merged.end(), b.indices.begin(), b.indices.end());
    result = add_node(std::move(merged), std::nullopt);
    ClusterNode& ra = mutable_node(leaf_a);
    ClusterNode& rb = mutable_node(leaf_b);
    ra.state = rb.state = NodeState::kAbsorbed;
    ra.fused_into = rb.fused_into = result;
    mutable_node(result).fused_from = {leaf_a, leaf_b};
    u.created = result;
  }
  log_.push_back({TreeOp::Kind::kFuse, leaf_a, leaf_b, std::nullopt});
  undo_.push_back(std::move(u));
  return result;
}

bool ClusterTree::undo() {
  if (log_.empty()) return false;
  const TreeOp op = log_.back();
  Undo u = std::move(undo_.back());
  log_.pop_back();
  undo_.pop_back();

  if (op.kind == TreeOp::Kind::kSplit) {
    ClusterNode& n = mutable_node(op.a);
    nodes_.erase(n.children->first);
    nodes_.erase(n.children->second);
    n.children.reset();
    n.state = NodeState::kLeaf;
    if (u.pending_replaced) n.pending = u.replaced;
  } else if (u.collapsed) {
    const std::size_t parent = *u.removed.front().parent;
    ClusterNode& p = mutable_node(parent);
    p.children = std::make_pair(u.removed[0].id < u.removed[1].id ? u.removed[0].id : u.removed[1].id,
                                u.removed[0].id < u.removed[1].id ? u.removed[1].id : u.removed[0].id);
    p.state = NodeState::kInternal;
    for (ClusterNode& r : u.removed) nodes_.emplace(r.id, std::move(r));
  } else {
    nodes_.erase(u.created);
    for (std::size_t id : {op.a, op.b}) {
      ClusterNode& n = mutable_node(id);
      n.state = NodeState::kLeaf;
      n.fused_into.reset();
    }
  }
  next_id_ = u.next_id;
  return true;
}

bool ClusterTree::grow_to(std::size_t target) {
  while (leaf_count() < target) {
    const auto leaf = select_leaf();
    if (!leaf) return false;
    split(*leaf);
  }
  return true;
}

double ClusterTree::total_error() const {
  double e = 0.0;
  for (const auto& [id, n] : nodes_)
    if (n.state == NodeState::kLeaf) e += n.error();
  return e;
}

std::vector<int> ClusterTree::flatten() const {
  std::vector<int> labels(static_cast<std::size_t>(data_->cols()), 0);
  int k = 0;
  for (std::size_t id : leaves()) {
    ++k;
    for (std::size_t j : nodes_.at(id).indices) labels[j] = k;
  }
  return labels;
}

ClusterTree ClusterTree::replay(std::shared_ptr<const Matrix> data, HierarchyOptions opts,
                                const std::vector<TreeOp>& ops) {
  ClusterTree t(std::move(data), std::move(opts));
  for (const TreeOp& op : ops) {
    if (op.kind == TreeOp::Kind::kSplit) {
      t.split(op.a, op.method);
    } else {
      t.fuse(op.a, op.b);
    }
  }
  return t;
}

H2nmfRun run_h2nmf(std::shared_ptr<const Matrix> data, std::size_t r, HierarchyOptions opts) {
  if (!data) fail(ErrorCode::kInvalidArgument, "run_h2nmf: no data");
  if (r < 1 || r > static_cast<std::size_t>(data->cols()))
    fail(ErrorCode::kDomain, "run_h2nmf: need 1 <= r <= n");
  H2nmfRun run{ClusterTree(std::move(data), std::move(opts)), false};
  run.stopped_early = !run.tree.grow_to(r);
  return run;
}

namespace {

const char* state_name(NodeState s) {
  switch (s) {
    case NodeState::kLeaf: return "leaf";
    case NodeState::kInternal: return "internal";
    case NodeState::kAbsorbed: return "absorbed";
  }
  return "unknown";
}

}  // namespace

nlohmann::json tree_document(const ClusterTree& tree) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& [id, n] : tree.nodes()) {
    json j;
    j["id"] = id;
    j["parent"] = n.parent ? json(*n.parent) : json(nullptr);
    j["children"] = n.children ? json::array({n.children->first, n.children->second}) : json(nullptr);
    j["state"] = state_name(n.state);
    j["size"] = n.indices.size();
    j["sigma1_sq"] = n.sigma1_sq;
    j["error"] = n.error();
    j["gain"] = n.gain();
    j["splittable"] = n.pending.has_value();
    if (n.pending) {
      j["method"] = std::string(to_string(n.pending->split.method));
      j["delta_star"] = n.pending->split.delta_star ? json(*n.pending->split.delta_star) : json(nullptr);
      j["split_sizes"] = json::array({n.pending->split.k1.size(), n.pending->split.k2.size()});
    }
    if (!n.fused_from.empty()) j["fused_from"] = n.fused_from;
    if (n.fused_into) j["fused_into"] = *n.fused_into;
    nodes.push_back(std::move(j));
  }
  json doc;
  doc["format"] = "h2nmf-tree/1";
  doc["m"] = tree.data().rows();
  doc["n"] = tree.data().cols();
  doc["leaves"] = tree.leaves();
  doc["total_error"] = tree.total_error();
  doc["nodes"] = std::move(nodes);
  return doc;
}

nlohmann::json log_document(const std::vector<TreeOp>& ops) {
  using nlohmann::json;
  json arr = json::array();
  for (const TreeOp& op : ops) {
    if (op.kind == TreeOp::Kind::kSplit) {
      arr.push_back({{"op", "split"},
                     {"node", op.a},
                     {"method", op.method ? json(std::string(to_string(*op.method))) : json(nullptr)}});
    } else {
      arr.push_back({{"op", "fuse"}, {"a", op.a}, {"b", op.b}});
    }
  }
  return {{"format", "h2nmf-log/1"}, {"ops", arr}};
}

std::vector<TreeOp> parse_log_document(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "h2nmf-log/1")
    fail(ErrorCode::kParse, "not an h2nmf-log/1 document");
  std::vector<TreeOp> ops;
  try {
    for (const auto& j : doc.at("ops")) {
      TreeOp op;
      const std::string kind = j.at("op").get<std::string>();
      if (kind == "split") {
        op.kind = TreeOp::Kind::kSplit;
        op.a = j.at("node").get<std::size_t>();
        if (j.contains("method") && !j["method"].is_null())
          op.method = parse_split_method(j["method"].get<std::string>());
      } else if (kind == "fuse") {
        op.kind = TreeOp::Kind::kFuse;
        op.a = j.at("a").get<std::size_t>();
        op.b = j.at("b").get<std::size_t>();
      } else {
        fail(ErrorCode::kParse, "unknown op: " + kind);
      }
      ops.push_back(op);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed log document: ") + e.what());
  }
  return ops;
}

}  // namespace h2nmf
