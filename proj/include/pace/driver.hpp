#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pace/discretize.hpp"
#include "pace/ensemble.hpp"
#include "pace/iforest.hpp"
#include "pace/l0_prune.hpp"
#include "pace/master.hpp"
#include "pace/pricing.hpp"
#include "pace/separation.hpp"

namespace pace {

enum class Mode { kFull, kGenerateOnly, kPruneOnly };
enum class PricerKind { kExactStumps, kHeuristic };

const char* to_string(Mode m);
const char* to_string(PricerKind p);
Mode mode_from_string(const std::string& s);
PricerKind pricer_from_string(const std::string& s);

struct PaceConfig {
  double eta = 0.0;
  DeltaSpec delta{PlausibilityThreshold::Provenance::kRaw, 0.0};
  TreeFamilyConfig family;
  PricerKind pricer = PricerKind::kExactStumps;
  Mode mode = Mode::kFull;
  double tol_reduced_cost = kReducedCostTol;
  int max_generated_learners = 100;
  double time_limit_seconds = 300.0;
  std::uint64_t seed = 0;
  int digits = kDefaultScaleDigits;
  int threads = 1;
  std::uint64_t separation_node_budget = 0;
  std::uint64_t l0_node_budget = 0;
  // Per l0 solve; past it the best support found is kept unproven. 0 means unlimited.
  double l0_time_limit_seconds = 30.0;
  bool warm_start = true;
  bool objective_separation = false;

  void validate() const;
};

struct Counters {
  std::uint64_t masters_solved = 0;
  std::uint64_t l0_solved = 0;
  std::uint64_t separation_instances = 0;
  std::uint64_t witnesses_added = 0;
  std::uint64_t learners_generated = 0;
  std::uint64_t pricing_calls = 0;
};

struct PhaseCertificate {
  bool ran = false;
  // Every pair instance came back unsat against the phase's final weights.
  bool certified = false;
  std::string note;
};

struct GlobalCheck {
  bool ran = false;
  std::string notice;
  std::uint64_t cells = 0;
  std::uint64_t region_cells = 0;
  std::uint64_t disagreements = 0;
  // Same comparison with plain double-precision votes.
  std::uint64_t double_disagreements = 0;
  std::vector<int> first_disagreement;
  bool agrees() const { return ran && disagreements == 0; }
};

struct CompressionReport {
  WeightedEnsemble final_ensemble;
  std::size_t size = 0;        // S
  double generated_fraction = 0.0;  // P
  double wall_seconds = 0.0;   // T
  Counters counters;
  double eta = 0.0;
  PlausibilityThreshold delta;
  PhaseCertificate phase1;
  PhaseCertificate phase2;
  bool pricing_complete = true;
  // The last l0 solve proved its support minimal.
  bool l0_optimal = true;
  double last_reduced_cost = 0.0;
  double l1_objective = 0.0;
  std::vector<double> l1_history;
  std::size_t region_size = 0;
  std::size_t original_size = 0;
  std::optional<GlobalCheck> global;

  bool certified() const;
};

// Everything the phases need besides the master.
struct PaceContext {
  const WeightedEnsemble* orig = nullptr;
  const IsolationForest* forest = nullptr;
  const DiscreteDomain* domain = nullptr;
  double eta = 0.0;
  double delta_raw = 0.0;
};

struct PaceState {
  MasterProblem master;
  std::vector<bool> generated;  // per master column
  std::vector<double> weights;  // current weights per column
  MasterSolution l1;
  Counters counters;
  PhaseCertificate phase1;
  PhaseCertificate phase2;
  bool pricing_complete = true;
  bool l0_optimal = true;
  double last_reduced_cost = 0.0;
  std::vector<double> l1_history;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  PaceState(int labels, int features, bool warm_start) : master(labels, features, warm_start) {}
};

// Cells in the region: original margin > eta against every rival and
// plausibility >= delta_raw, both compared on the integer-scaled lattice.
// One sample per distinct cell, tagged with its original vote.
std::vector<LabeledSample> init_region(const std::vector<std::vector<double>>& train,
                                       const PaceContext& ctx, int digits = kDefaultScaleDigits);

LabeledSample sample_from_cell(const PaceContext& ctx, std::span<const int> cell, Label y_orig);

// Master over the original trees and the region rows.
PaceState make_state(const PaceContext& ctx, const std::vector<LabeledSample>& region,
                     const PaceConfig& config);

WeightedEnsemble current_ensemble(const PaceState& state, const PaceContext& ctx);

void run_phase1(const PaceConfig& config, const PaceContext& ctx, PaceState& state);
void run_phase2(const PaceConfig& config, const PaceContext& ctx, PaceState& state);

// Domain from the original trees, the forest and any extra per-feature edges.
DiscreteDomain build_run_domain(const WeightedEnsemble& orig, const IsolationForest& forest,
                                const std::vector<std::vector<double>>& extra_edges = {});

CompressionReport run_pace(const PaceConfig& config, const std::vector<std::vector<double>>& train,
                           const WeightedEnsemble& orig, const IsolationForest& forest,
                           const DiscreteDomain& domain);

// Exhaustive comparison of original and compressed votes over every cell of
// the region, on the same integer-scaled vote semantics as separation.
GlobalCheck certify_global(const WeightedEnsemble& orig, const WeightedEnsemble& compressed,
                           const IsolationForest& forest, const DiscreteDomain& domain, double eta,
                           double delta_raw, int digits = kDefaultScaleDigits,
                           std::uint64_t cap = kBruteForceCap);

nlohmann::json report_to_json(const CompressionReport& report, const PaceConfig& config);

}  // namespace pace
