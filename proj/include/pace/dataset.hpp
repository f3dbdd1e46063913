#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pace/ensemble.hpp"

namespace pace {

struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> x;  // one row per sample
  std::vector<Label> y;
  // Original label strings, indexed by Label.
  std::vector<std::string> classes;
  // Split levels per feature; every trained tree splits only at these.
  std::vector<std::vector<double>> edges;
  std::vector<bool> binary;
  // Which binning rule produced each feature's edges: "binary", "quantile", "uniform".
  std::vector<std::string> binning;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  std::size_t feature_count() const { return feature_names.size(); }
  int label_count() const { return static_cast<int>(classes.size()); }
  std::vector<std::vector<double>> rows(const std::vector<std::size_t>& idx) const;
  std::vector<Label> labels(const std::vector<std::size_t>& idx) const;
};

constexpr int kBinCount = 10;
constexpr double kTrainFraction = 0.8;

// Interior edges of `bins` quantile bins (linear interpolation between order
// statistics). Falls back to uniform bins when a quantile bin would be empty.
std::vector<double> quantile_edges(std::vector<double> values, int bins, bool* used_uniform = nullptr);
std::vector<double> uniform_edges(const std::vector<double>& values, int bins);

// CSV with a header row; the last column is the label.
Dataset ingest_csv(const std::string& path, std::uint64_t seed);
Dataset make_dataset(std::vector<std::string> names, std::vector<std::vector<double>> x,
                     std::vector<std::string> labels, std::uint64_t seed);

// Split into bins and train/test from already-parsed columns.
void bin_and_split(Dataset& d, std::uint64_t seed);

enum class BaselineKind { kBagged, kBoosted };
BaselineKind baseline_from_string(const std::string& s);

struct TrainParams {
  BaselineKind kind = BaselineKind::kBagged;
  int n_estimators = 10;
  int max_depth = 2;
  std::uint64_t seed = 0;
  // Bagged only: bootstrap rows and draw floor(sqrt(n)) candidate features per split.
  bool bootstrap = true;
  bool feature_subsampling = true;
};

// Greedy Gini tree restricted to `edges`, with per-sample weights.
Tree fit_tree(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
              const std::vector<double>& sample_weight, int labels,
              const std::vector<std::vector<double>>& edges, int max_depth, bool one_hot,
              int features_per_split, std::uint64_t seed);

WeightedEnsemble train_baseline(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
                                int labels, const std::vector<std::vector<double>>& edges,
                                const TrainParams& params);

double accuracy(const WeightedEnsemble& ens, const std::vector<std::vector<double>>& x,
                const std::vector<Label>& y);

}  // namespace pace
