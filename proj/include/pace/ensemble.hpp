#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pace {

// Class index in 0..label_count-1.
using Label = int;

enum class LeafMode { kProbability, kOneHot, kNone };
enum class EnsembleKind { kBagged, kBoosted, kIsolation, kCompressed };

const char* to_string(LeafMode mode);
const char* to_string(EnsembleKind kind);
LeafMode leaf_mode_from_string(const std::string& s);
EnsembleKind ensemble_kind_from_string(const std::string& s);

// Flat node record. Internal nodes have feature >= 0; leaves have feature == -1
// and carry the label scores plus isolation annotations (depth, support).
struct Node {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> scores;
  int depth = 0;
  int support = 0;

  bool is_leaf() const { return feature < 0; }
};

// Axis-aligned binary decision tree. A sample goes left iff x[feature] <= threshold.
// Node 0 is the root.
class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<Node> nodes);

  static Tree leaf(std::vector<double> scores, int depth = 0, int support = 0);
  static Tree stump(int feature, double threshold, std::vector<double> left_scores,
                    std::vector<double> right_scores);

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }

  // Node id of the leaf reached by `raw`.
  int route(std::span<const double> raw) const;
  const std::vector<double>& scores(std::span<const double> raw) const;

  std::vector<int> leaf_ids() const;
  int max_depth() const;
  // Largest feature index used by a split, -1 for a single leaf.
  int max_feature() const;
  std::size_t label_count() const;

  bool structurally_equal(const Tree& other) const;

  // Throws kModelMalformed on broken links, cycles, empty leaves or a
  // feature-threshold pair repeated in the same direction along a path.
  void validate() const;

 private:
  std::vector<Node> nodes_;
};

struct Sample {
  std::vector<double> raw;
  std::vector<int> cell;
  std::optional<Label> known_label;
};

enum class EmptyVotePolicy { kPredictLabelZero, kError };

struct WeightedEnsemble {
  std::vector<Tree> trees;
  std::vector<double> weights;
  int label_count = 2;
  int feature_count = 0;
  LeafMode leaf_mode = LeafMode::kProbability;
  EnsembleKind kind = EnsembleKind::kBagged;
  // Parallel to trees; true for learners created by column generation.
  std::vector<bool> generated;

  std::size_t size() const { return trees.size(); }
  bool empty() const { return trees.empty(); }

  void validate() const;
};

std::vector<double> tree_scores(const Tree& tree, std::span<const double> raw, int feature_count);

// Weighted per-label sum of tree scores.
std::vector<double> ensemble_scores(const WeightedEnsemble& ens, std::span<const double> raw);

// Weighted majority vote. Ties go to the lowest label index.
Label vote(const WeightedEnsemble& ens, std::span<const double> raw,
           EmptyVotePolicy policy = EmptyVotePolicy::kPredictLabelZero);
inline Label vote(const WeightedEnsemble& ens, const Sample& s,
                  EmptyVotePolicy policy = EmptyVotePolicy::kPredictLabelZero) {
  return vote(ens, s.raw, policy);
}

double margin(const WeightedEnsemble& ens, std::span<const double> raw, Label y, Label rival);

WeightedEnsemble normalize(const WeightedEnsemble& ens);

// Ensemble restricted to the trees whose weight exceeds tol.
WeightedEnsemble support_of(const WeightedEnsemble& ens, double tol);
std::size_t count_active(const WeightedEnsemble& ens, double tol);

}  // namespace pace
