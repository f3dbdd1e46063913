#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pace/discretize.hpp"
#include "pace/ensemble.hpp"
#include "pace/master.hpp"

namespace pace {

// Dual prices of the master rows together with the rows they price.
struct DualVector {
  const std::vector<LabeledSample>* samples = nullptr;
  const std::vector<MasterRow>* rows = nullptr;
  std::vector<double> mu;
  int label_count = 2;

  static DualVector from(const MasterProblem& master, const MasterSolution& solution,
                         int label_count);
};

struct TreeFamilyConfig {
  int max_depth = 1;
};

enum class Exactness { kExact, kHeuristic };

struct PricingOutcome {
  std::optional<Tree> learner;
  // 1 - objective; negative means the learner improves the master.
  double reduced_cost = 1.0;
  // sum_x sum_{y != y^o} mu_{x,y} (h_{y^o}(x) - h_y(x)) for the returned learner.
  double objective = 0.0;
  Exactness exactness = Exactness::kHeuristic;
};

constexpr double kReducedCostTol = 1e-6;

// 1 - sum_rows mu_r * (h_{y^o}(x_r) - h_{y_r}(x_r)).
double reduced_cost(const Tree& learner, const DualVector& duals);

// Per-sample leaf gain table: gain[s][label] is what sample s adds to the
// pricing objective when it lands in a one-hot leaf predicting `label`.
std::vector<std::vector<double>> leaf_gains(const DualVector& duals);

// Enumerates every one-hot constant tree and every depth-1 one-hot stump over
// the domain levels; returns the maximizer of the pricing objective.
PricingOutcome price_exact_stumps(const DualVector& duals, const DiscreteDomain& domain);

// Greedy top-down growth of a one-hot tree up to config.max_depth.
PricingOutcome price_heuristic(const DualVector& duals, const DiscreteDomain& domain,
                               const TreeFamilyConfig& config);

inline bool is_improving(const PricingOutcome& outcome, double tol = kReducedCostTol) {
  return outcome.reduced_cost < -tol;
}

}  // namespace pace
