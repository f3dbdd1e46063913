#pragma once

// Random models, domains and matrices for property tests and the acceptance suite.

#include <cstdint>
#include <random>
#include <vector>

#include "pace/dataset.hpp"
#include "pace/discretize.hpp"
#include "pace/ensemble.hpp"
#include "pace/iforest.hpp"

namespace pace::testing {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive

// Levels per feature drawn from a small integer-valued grid so cells are easy to reason about.
DiscreteDomain random_domain(Rng& rng, int features, int max_levels);

// Random tree splitting only at domain levels. Leaf scores are rounded to 3 decimals.
Tree random_tree(Rng& rng, const DiscreteDomain& domain, int max_depth, int labels, LeafMode mode);

WeightedEnsemble random_ensemble(Rng& rng, const DiscreteDomain& domain, int trees, int max_depth,
                                 int labels, LeafMode mode);

// Isolation-style trees: empty scores, random depth/support annotations on leaves.
IsolationForest random_forest(Rng& rng, const DiscreteDomain& domain, int trees, int max_depth);

// Every cell of the domain in lexicographic order.
std::vector<std::vector<int>> all_cells(const DiscreteDomain& domain);

// Gaussian blobs, one per class, rounded to 2 decimals.
Dataset blobs(Rng& rng, int n, int features, int labels, double spread);

// Integer-valued features in 0..values-1; label from a noisy linear rule.
Dataset grid_dataset(Rng& rng, int n, int features, int values, int labels);

}  // namespace pace::testing
