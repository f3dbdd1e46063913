#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pace/ensemble.hpp"

namespace pace {

// Isolation forest. Leaf score vectors are empty; leaves carry the depth at
// which they sit and the number of subsample points that reached them.
struct IsolationForest {
  std::vector<Tree> trees;
  int subsample_size = 256;
  int feature_count = 0;

  double c_max() const;
  bool empty() const { return trees.empty(); }
};

// Expected extra isolation depth for a leaf holding `support` points.
double correction(int support);

// Leaf depth plus correction of the leaf support (the corrected path length).
double path_length(const Tree& tree, std::span<const double> raw);
double leaf_path_length(const Node& leaf);

// Sum of corrected path lengths over all trees; low values flag outliers.
double plausibility(const IsolationForest& forest, std::span<const double> raw);

struct IForestParams {
  int n_trees = 100;
  int subsample_size = 256;
  std::uint64_t seed = 0;
  // When non-empty (one list per feature), random thresholds are snapped to
  // the nearest edge of the feature that still splits the node's points.
  std::vector<std::vector<double>> snap_edges;
};

IsolationForest train_iforest(const std::vector<std::vector<double>>& data,
                              const IForestParams& params);

struct PlausibilityThreshold {
  enum class Provenance { kRaw, kScaled, kFraction };
  double delta_raw = 0.0;
  Provenance provenance = Provenance::kRaw;
  // The user-facing value (delta, delta_scaled or outlier fraction).
  double input = 0.0;
};

const char* to_string(PlausibilityThreshold::Provenance p);

struct DeltaSpec {
  PlausibilityThreshold::Provenance kind = PlausibilityThreshold::Provenance::kFraction;
  double value = 0.0;
};

// raw: pass-through. scaled: -c_max * log2(value). fraction: threshold that
// flags the given fraction of `train_scores` as outliers (score < delta).
PlausibilityThreshold resolve_delta(const DeltaSpec& spec, const IsolationForest& forest,
                                    std::span<const double> train_scores);

}  // namespace pace
