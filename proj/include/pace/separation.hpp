#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pace/discretize.hpp"
#include "pace/ensemble.hpp"
#include "pace/iforest.hpp"

namespace pace {

enum class TreeRole { kOriginal, kCurrent, kIsolation };

// Integer score registers of one ensemble: reg[t][node][y] = round(w_t * v_y * 10^d).
// All vote comparisons in the separation model and in global certification
// are made on sums of these registers.
class ScaledEnsemble {
 public:
  ScaledEnsemble() = default;
  ScaledEnsemble(const WeightedEnsemble& ens, int digits);

  int label_count() const { return labels_; }
  const std::vector<Tree>& trees() const { return trees_; }
  // Register vector of the leaf `node` of tree `t`.
  const std::vector<std::int64_t>& registers(std::size_t t, int node) const;
  std::vector<__int128> sums(std::span<const double> raw) const;
  // Ties go to the lowest label; an empty ensemble votes 0.
  Label vote(std::span<const double> raw) const;
  // min over rivals of sum(r_y - r_rival).
  __int128 min_margin(std::span<const double> raw, Label y) const;

 private:
  int labels_ = 0;
  std::vector<Tree> trees_;
  std::vector<std::vector<std::vector<std::int64_t>>> reg_;
};

// Integer plausibility coefficients b = round(corrected path length * 10^d) per leaf.
class ScaledForest {
 public:
  ScaledForest() = default;
  ScaledForest(const IsolationForest& forest, int digits);
  bool empty() const { return trees_.empty(); }
  const std::vector<Tree>& trees() const { return trees_; }
  std::int64_t coefficient(std::size_t t, int node) const {
    return coef_[t][static_cast<std::size_t>(node)];
  }
  __int128 score(std::span<const double> raw) const;

 private:
  std::vector<Tree> trees_;
  std::vector<std::vector<std::int64_t>> coef_;
};

// A reachable leaf and the box of cells routed to it: lo[i] <= cell[i] <= hi[i].
struct SepLeaf {
  int node = 0;
  std::vector<int> lo;
  std::vector<int> hi;
  // Contribution to each constraint the tree takes part in.
  std::vector<std::int64_t> coef;
};

struct SepTree {
  TreeRole role = TreeRole::kOriginal;
  std::size_t source = 0;  // index inside its ensemble or forest
  std::vector<int> constraints;
  std::vector<SepLeaf> leaves;
};

// LHS = sum over trees of `role` of (r_plus - r_minus), or of b for isolation trees.
struct SepConstraint {
  std::string name;
  TreeRole role = TreeRole::kOriginal;
  Label plus = 0;
  Label minus = 0;
  std::int64_t rhs = 0;
};

struct SeparationInstance {
  DiscreteDomain domain;
  Label y_orig = 0;
  Label y_alt = 1;
  int digits = kDefaultScaleDigits;
  std::int64_t eta_scaled = 0;
  std::int64_t delta_scaled = 0;
  ScaledEnsemble orig;
  ScaledEnsemble current;
  ScaledForest forest;
  std::vector<SepConstraint> constraints;
  std::vector<SepTree> trees;
  // Index of the constraint promoting y_alt in the current ensemble.
  std::size_t disagreement = 0;
};

struct SeparationStats {
  std::uint64_t nodes = 0;
  std::uint64_t propagations = 0;
};

struct SeparationResult {
  enum class Status { kWitness, kUnsat };
  Status status = Status::kUnsat;
  std::vector<int> cell;
  SeparationStats stats;
  // Objective-based search only: best disagreement value found.
  std::optional<__int128> objective;
  bool found() const { return status == Status::kWitness; }
};

struct SearchOptions {
  // 0 means unlimited.
  std::uint64_t node_budget = 0;
};

// eta >= 0 and delta are in raw units. delta <= 0 drops the plausibility constraint.
SeparationInstance build_instance(const WeightedEnsemble& orig, const WeightedEnsemble& current,
                                  const IsolationForest& forest, const DiscreteDomain& domain,
                                  double eta, double delta, Label y_orig, Label y_alt,
                                  int digits = kDefaultScaleDigits);

// Depth-first search with leaf-exclusion propagation; the first feasible cell.
SeparationResult find_witness(const SeparationInstance& inst, const SearchOptions& options = {});

// Branch-and-bound maximizing the disagreement constraint's LHS subject to
// the remaining constraints.
SeparationResult find_max_disagreement(const SeparationInstance& inst,
                                       const SearchOptions& options = {});

constexpr std::uint64_t kBruteForceCap = 1000000;

// Enumerates every cell in lexicographic order and evaluates the constraints
// by routing the representative through the trees.
SeparationResult brute_force_oracle(const SeparationInstance& inst,
                                    std::uint64_t cap = kBruteForceCap);

// Evaluates every constraint at `cell` by routing; true when all hold.
bool verify_cell(const SeparationInstance& inst, std::span<const int> cell);
std::vector<__int128> constraint_values(const SeparationInstance& inst, std::span<const int> cell);

struct PairResult {
  Label y_orig = 0;
  Label y_alt = 0;
  SeparationResult result;
};

struct PairSearchOptions {
  int digits = kDefaultScaleDigits;
  SearchOptions search;
  bool objective_mode = false;
  int threads = 1;
};

// All ordered label pairs, in (y_orig, y_alt) lexicographic order.
std::vector<PairResult> find_all_pairs(const WeightedEnsemble& orig,
                                       const WeightedEnsemble& current,
                                       const IsolationForest& forest, const DiscreteDomain& domain,
                                       double eta, double delta,
                                       const PairSearchOptions& options = {});

void dump_instance(const SeparationInstance& inst, std::ostream& out);
std::string format_int128(__int128 v);

}  // namespace pace
