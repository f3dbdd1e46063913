#include "pace/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>
#include <utility>

#include "pace/error.hpp"

namespace pace {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kModelMalformed: return "model-malformed";
    case ErrorCode::kEmptyModel: return "empty-model";
    case ErrorCode::kDegenerateModel: return "degenerate-model";
    case ErrorCode::kInvalidSample: return "invalid-sample";
    case ErrorCode::kInvalidCell: return "invalid-cell";
    case ErrorCode::kScalingOverflow: return "scaling-overflow";
    case ErrorCode::kSolverLimit: return "solver-limit";
    case ErrorCode::kInternalConsistency: return "internal-consistency";
    case ErrorCode::kBudgetExceeded: return "budget-exceeded";
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kIngestion: return "ingestion";
    case ErrorCode::kUsage: return "usage";
  }
  return "unknown";
}

const char* to_string(LeafMode mode) {
  switch (mode) {
    case LeafMode::kProbability: return "probability";
    case LeafMode::kOneHot: return "one_hot";
    case LeafMode::kNone: return "none";
  }
  return "none";
}

const char* to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::kBagged: return "bagged";
    case EnsembleKind::kBoosted: return "boosted";
    case EnsembleKind::kIsolation: return "isolation";
    case EnsembleKind::kCompressed: return "compressed";
  }
  return "bagged";
}

LeafMode leaf_mode_from_string(const std::string& s) {
  if (s == "probability") return LeafMode::kProbability;
  if (s == "one_hot") return LeafMode::kOneHot;
  if (s == "none") return LeafMode::kNone;
  throw Error(ErrorCode::kModelMalformed, "unknown leaf mode '" + s + "'");
}

EnsembleKind ensemble_kind_from_string(const std::string& s) {
  if (s == "bagged") return EnsembleKind::kBagged;
  if (s == "boosted") return EnsembleKind::kBoosted;
  if (s == "isolation") return EnsembleKind::kIsolation;
  if (s == "compressed") return EnsembleKind::kCompressed;
  throw Error(ErrorCode::kModelMalformed, "unknown ensemble kind '" + s + "'");
}

Tree::Tree(std::vector<Node> nodes) : nodes_(std::move(nodes)) { validate(); }

Tree Tree::leaf(std::vector<double> scores, int depth, int support) {
  Node n;
  n.scores = std::move(scores);
  n.depth = depth;
  n.support = support;
  return Tree({std::move(n)});
}

Tree Tree::stump(int feature, double threshold, std::vector<double> left_scores,
                 std::vector<double> right_scores) {
  std::vector<Node> nodes(3);
  nodes[0].feature = feature;
  nodes[0].threshold = threshold;
  nodes[0].left = 1;
  nodes[0].right = 2;
  nodes[1].scores = std::move(left_scores);
  nodes[1].depth = 1;
  nodes[2].scores = std::move(right_scores);
  nodes[2].depth = 1;
  return Tree(std::move(nodes));
}

int Tree::route(std::span<const double> raw) const {
  if (nodes_.empty()) throw Error(ErrorCode::kModelMalformed, "tree has no nodes");
  int id = 0;
  while (!nodes_[static_cast<std::size_t>(id)].is_leaf()) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (static_cast<std::size_t>(n.feature) >= raw.size()) {
      throw Error(ErrorCode::kModelMalformed,
                  "split on feature " + std::to_string(n.feature) + " but sample has " +
                      std::to_string(raw.size()) + " features");
    }
    id = raw[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return id;
}

const std::vector<double>& Tree::scores(std::span<const double> raw) const {
  return nodes_[static_cast<std::size_t>(route(raw))].scores;
}

std::vector<int> Tree::leaf_ids() const {
  std::vector<int> ids;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf()) ids.push_back(static_cast<int>(i));
  }
  return ids;
}

int Tree::max_depth() const {
  // Recomputed from structure so it does not depend on leaf annotations.
  int best = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    const Node& n = node(id);
    if (n.is_leaf()) {
      best = std::max(best, d);
    } else {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return best;
}

int Tree::max_feature() const {
  int best = -1;
  for (const Node& n : nodes_) best = std::max(best, n.feature);
  return best;
}

std::size_t Tree::label_count() const {
  for (const Node& n : nodes_) {
    if (n.is_leaf()) return n.scores.size();
  }
  return 0;
}

bool Tree::structurally_equal(const Tree& other) const {
  // Compare by simultaneous traversal so that node numbering does not matter.
  std::vector<std::pair<int, int>> stack{{0, 0}};
  if (nodes_.empty() || other.nodes_.empty()) return nodes_.empty() == other.nodes_.empty();
  while (!stack.empty()) {
    auto [a, b] = stack.back();
    stack.pop_back();
    const Node& x = node(a);
    const Node& y = other.node(b);
    if (x.is_leaf() != y.is_leaf()) return false;
    if (x.is_leaf()) {
      if (x.scores != y.scores) return false;
      continue;
    }
    if (x.feature != y.feature || x.threshold != y.threshold) return false;
    stack.emplace_back(x.left, y.left);
    stack.emplace_back(x.right, y.right);
  }
  return true;
}

void Tree::validate() const {
  if (nodes_.empty()) throw Error(ErrorCode::kModelMalformed, "tree has no nodes");
  const int count = static_cast<int>(nodes_.size());
  std::vector<int> visits(nodes_.size(), 0);
  using Guard = std::tuple<int, double, bool>;
  struct Frame {
    int id;
    std::set<Guard> path;
  };
  std::vector<Frame> stack;
  stack.push_back({0, {}});
  std::size_t leaf_labels = 0;
  bool have_leaf = false;
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.id < 0 || f.id >= count) {
      throw Error(ErrorCode::kModelMalformed, "child index out of range");
    }
    if (++visits[static_cast<std::size_t>(f.id)] > 1) {
      throw Error(ErrorCode::kModelMalformed, "node reachable twice (not a tree)");
    }
    const Node& n = node(f.id);
    if (n.is_leaf()) {
      if (have_leaf && n.scores.size() != leaf_labels) {
        throw Error(ErrorCode::kModelMalformed, "leaves disagree on label count");
      }
      for (double v : n.scores) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw Error(ErrorCode::kModelMalformed, "leaf scores must be finite and nonnegative");
        }
      }
      have_leaf = true;
      leaf_labels = n.scores.size();
      continue;
    }
    if (!std::isfinite(n.threshold)) {
      throw Error(ErrorCode::kModelMalformed, "non-finite split threshold");
    }
    Guard left{n.feature, n.threshold, false};
    Guard right{n.feature, n.threshold, true};
    if (f.path.count(left) || f.path.count(right)) {
      throw Error(ErrorCode::kModelMalformed, "feature-threshold pair repeated along a path");
    }
    Frame l{n.left, f.path};
    l.path.insert(left);
    Frame r{n.right, std::move(f.path)};
    r.path.insert(right);
    stack.push_back(std::move(l));
    stack.push_back(std::move(r));
  }
}

void WeightedEnsemble::validate() const {
  if (weights.size() != trees.size()) {
    throw Error(ErrorCode::kModelMalformed, "weight count differs from tree count");
  }
  if (!generated.empty() && generated.size() != trees.size()) {
    throw Error(ErrorCode::kModelMalformed, "origin flags differ from tree count");
  }
  if (label_count < 1) throw Error(ErrorCode::kModelMalformed, "label_count must be >= 1");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kModelMalformed, "weights must be finite and nonnegative");
    }
  }
  for (const Tree& t : trees) {
    t.validate();
    if (static_cast<int>(t.label_count()) != label_count) {
      throw Error(ErrorCode::kModelMalformed, "leaf score length differs from label_count");
    }
    if (feature_count > 0 && t.max_feature() >= feature_count) {
      throw Error(ErrorCode::kModelMalformed, "split feature index >= feature_count");
    }
  }
}

std::vector<double> tree_scores(const Tree& tree, std::span<const double> raw,
                                int feature_count) {
  if (feature_count > 0 && tree.max_feature() >= feature_count) {
    throw Error(ErrorCode::kModelMalformed, "feature index out of range");
  }
  return tree.scores(raw);
}

std::vector<double> ensemble_scores(const WeightedEnsemble& ens, std::span<const double> raw) {
  std::vector<double> total(static_cast<std::size_t>(ens.label_count), 0.0);
  for (std::size_t t = 0; t < ens.trees.size(); ++t) {
    const double w = ens.weights[t];
    if (w == 0.0) continue;
    const auto& s = ens.trees[t].scores(raw);
    for (std::size_t y = 0; y < total.size(); ++y) total[y] += w * s[y];
  }
  return total;
}

Label vote(const WeightedEnsemble& ens, std::span<const double> raw, EmptyVotePolicy policy) {
  if (ens.empty()) {
    if (policy == EmptyVotePolicy::kError) {
      throw Error(ErrorCode::kEmptyModel, "vote on an empty ensemble");
    }
    return 0;
  }
  const auto total = ensemble_scores(ens, raw);
  // max_element returns the first maximum, i.e. the lowest label on ties.
  return static_cast<Label>(std::max_element(total.begin(), total.end()) - total.begin());
}

double margin(const WeightedEnsemble& ens, std::span<const double> raw, Label y, Label rival) {
  if (y == rival) throw Error(ErrorCode::kInvalidArgument, "margin needs two distinct labels");
  if (y < 0 || rival < 0 || y >= ens.label_count || rival >= ens.label_count) {
    throw Error(ErrorCode::kInvalidArgument, "label out of range");
  }
  double m = 0.0;
  for (std::size_t t = 0; t < ens.trees.size(); ++t) {
    const auto& s = ens.trees[t].scores(raw);
    m += ens.weights[t] * (s[static_cast<std::size_t>(y)] - s[static_cast<std::size_t>(rival)]);
  }
  return m;
}

WeightedEnsemble normalize(const WeightedEnsemble& ens) {
  const double total = std::accumulate(ens.weights.begin(), ens.weights.end(), 0.0);
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kDegenerateModel, "cannot normalize: weights sum to zero");
  }
  WeightedEnsemble out = ens;
  for (double& w : out.weights) w /= total;
  return out;
}

WeightedEnsemble support_of(const WeightedEnsemble& ens, double tol) {
  WeightedEnsemble out = ens;
  out.trees.clear();
  out.weights.clear();
  out.generated.clear();
  for (std::size_t t = 0; t < ens.trees.size(); ++t) {
    if (ens.weights[t] > tol) {
      out.trees.push_back(ens.trees[t]);
      out.weights.push_back(ens.weights[t]);
      out.generated.push_back(ens.generated.empty() ? false : ens.generated[t]);
    }
  }
  return out;
}

std::size_t count_active(const WeightedEnsemble& ens, double tol) {
  return static_cast<std::size_t>(
      std::count_if(ens.weights.begin(), ens.weights.end(), [tol](double w) { return w > tol; }));
}

}  // namespace pace
