#include "pace/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "pace/error.hpp"

namespace pace {

double correction(int support) {
  if (support <= 1) return 0.0;
  if (support == 2) return 1.0;
  const double s = support;
  return 2.0 * (std::log(s - 1.0) + std::numbers::egamma) - 2.0 * (s - 1.0) / s;
}

double IsolationForest::c_max() const { return correction(subsample_size); }

double leaf_path_length(const Node& leaf) { return leaf.depth + correction(leaf.support); }

double path_length(const Tree& tree, std::span<const double> raw) {
  const Node& leaf = tree.node(tree.route(raw));
  if (leaf.depth < 0 || leaf.support < 0) {
    throw Error(ErrorCode::kModelMalformed, "isolation leaf without depth/support annotation");
  }
  return leaf_path_length(leaf);
}

double plausibility(const IsolationForest& forest, std::span<const double> raw) {
  if (forest.empty()) throw Error(ErrorCode::kInvalidInput, "plausibility of an empty forest");
  double total = 0.0;
  for (const Tree& t : forest.trees) total += path_length(t, raw);
  return total;
}

namespace {

class IsolationTreeBuilder {
 public:
  IsolationTreeBuilder(const std::vector<std::vector<double>>& data, int depth_cap,
                       const std::vector<std::vector<double>>& snap, std::mt19937_64& rng)
      : data_(data), depth_cap_(depth_cap), snap_(snap), rng_(rng) {}

  Tree build(std::vector<std::size_t> rows) {
    nodes_.clear();
    grow(std::move(rows), 0);
    return Tree(std::move(nodes_));
  }

 private:
  struct Candidate {
    int feature;
    double lo;
    double hi;
  };

  // Thresholds a with lo <= a < hi split the points into two nonempty sides.
  std::vector<double> snap_choices(int feature, double lo, double hi) const {
    std::vector<double> out;
    for (double e : snap_[static_cast<std::size_t>(feature)]) {
      if (e >= lo && e < hi) out.push_back(e);
    }
    return out;
  }

  int grow(std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const int support = static_cast<int>(rows.size());
    auto make_leaf = [&] {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      n.depth = depth;
      n.support = support;
      return id;
    };
    if (support <= 1 || depth >= depth_cap_) return make_leaf();

    const std::size_t n_features = data_[rows.front()].size();
    std::vector<Candidate> splittable;
    for (std::size_t f = 0; f < n_features; ++f) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t r : rows) {
        lo = std::min(lo, data_[r][f]);
        hi = std::max(hi, data_[r][f]);
      }
      if (!(lo < hi)) continue;
      if (!snap_.empty() && snap_choices(static_cast<int>(f), lo, hi).empty()) continue;
      splittable.push_back({static_cast<int>(f), lo, hi});
    }
    if (splittable.empty()) return make_leaf();

    std::uniform_int_distribution<std::size_t> pick(0, splittable.size() - 1);
    const Candidate c = splittable[pick(rng_)];
    std::uniform_real_distribution<double> uni(c.lo, c.hi);
    double threshold = uni(rng_);
    if (!snap_.empty()) {
      const auto choices = snap_choices(c.feature, c.lo, c.hi);
      threshold = *std::min_element(choices.begin(), choices.end(), [&](double a, double b) {
        return std::fabs(a - threshold) < std::fabs(b - threshold);
      });
    } else if (threshold >= c.hi) {
      threshold = c.lo;
    }

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (data_[r][static_cast<std::size_t>(c.feature)] <= threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    Node& n = nodes_[static_cast<std::size_t>(id)];
    n.feature = c.feature;
    n.threshold = threshold;
    n.left = l;
    n.right = r;
    n.depth = depth;
    n.support = support;
    return id;
  }

  const std::vector<std::vector<double>>& data_;
  int depth_cap_;
  const std::vector<std::vector<double>>& snap_;
  std::mt19937_64& rng_;
  std::vector<Node> nodes_;
};

}  // namespace

IsolationForest train_iforest(const std::vector<std::vector<double>>& data,
                              const IForestParams& params) {
  if (data.empty()) throw Error(ErrorCode::kInvalidInput, "isolation forest needs data");
  if (params.n_trees <= 0) throw Error(ErrorCode::kInvalidInput, "n_trees must be positive");
  if (params.subsample_size <= 0) {
    throw Error(ErrorCode::kInvalidInput, "subsample size must be positive");
  }
  const std::size_t n_features = data.front().size();
  for (const auto& row : data) {
    if (row.size() != n_features) throw Error(ErrorCode::kInvalidInput, "ragged data matrix");
  }
  if (!params.snap_edges.empty() && params.snap_edges.size() != n_features) {
    throw Error(ErrorCode::kInvalidInput, "snap edges need one list per feature");
  }

  IsolationForest forest;
  forest.feature_count = static_cast<int>(n_features);
  const std::size_t psi = std::min<std::size_t>(static_cast<std::size_t>(params.subsample_size),
                                                data.size());
  forest.subsample_size = static_cast<int>(psi);
  const int depth_cap =
      psi <= 1 ? 0 : static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));

  std::mt19937_64 rng(params.seed);
  IsolationTreeBuilder builder(data, depth_cap, params.snap_edges, rng);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  for (int t = 0; t < params.n_trees; ++t) {
    // Partial Fisher-Yates: the first psi entries form a uniform subsample.
    for (std::size_t i = 0; i < psi; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    std::vector<std::size_t> rows(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(psi));
    forest.trees.push_back(builder.build(std::move(rows)));
  }
  return forest;
}

const char* to_string(PlausibilityThreshold::Provenance p) {
  switch (p) {
    case PlausibilityThreshold::Provenance::kRaw: return "raw";
    case PlausibilityThreshold::Provenance::kScaled: return "scaled";
    case PlausibilityThreshold::Provenance::kFraction: return "fraction";
  }
  return "raw";
}

PlausibilityThreshold resolve_delta(const DeltaSpec& spec, const IsolationForest& forest,
                                    std::span<const double> train_scores) {
  using P = PlausibilityThreshold::Provenance;
  PlausibilityThreshold out;
  out.provenance = spec.kind;
  out.input = spec.value;
  switch (spec.kind) {
    case P::kRaw:
      if (!(spec.value >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "delta must be >= 0");
      out.delta_raw = spec.value;
      return out;
    case P::kScaled:
      if (spec.value == 0.0) {
        throw Error(ErrorCode::kInvalidArgument,
                    "delta_scaled = 0 gives an unbounded threshold that excludes every sample");
      }
      if (!(spec.value > 0.0 && spec.value <= 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "delta_scaled must lie in (0, 1]");
      }
      out.delta_raw = -forest.c_max() * std::log2(spec.value);
      return out;
    case P::kFraction: {
      if (!(spec.value >= 0.0 && spec.value <= 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "outlier fraction must lie in [0, 1]");
      }
      std::vector<double> sorted(train_scores.begin(), train_scores.end());
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      const auto k = static_cast<std::size_t>(std::floor(spec.value * static_cast<double>(n)));
      if (k == 0 || n == 0) {
        out.delta_raw = 0.0;
      } else if (k >= n) {
        out.delta_raw = sorted.back() + 1.0;
      } else if (sorted[k - 1] < sorted[k]) {
        // Midpoint keeps exactly k scores below the threshold.
        out.delta_raw = 0.5 * (sorted[k - 1] + sorted[k]);
      } else {
        out.delta_raw = sorted[k];
      }
      return out;
    }
  }
  return out;
}

}  // namespace pace
