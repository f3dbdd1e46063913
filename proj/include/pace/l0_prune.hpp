#pragma once

#include <cstdint>
#include <vector>

#include "pace/master.hpp"

namespace pace {

constexpr double kSupportTol = 1e-8;

struct L0Options {
  double tol = kSupportTol;
  // Branch-and-bound nodes and wall-clock seconds; 0 means unlimited. When a
  // budget runs out the best support found so far is returned unproven.
  std::uint64_t node_budget = 0;
  double time_limit_seconds = 0.0;
  // Candidate supports (column indices) tried as incumbents before the search.
  std::vector<std::vector<std::size_t>> hints;
};

struct L0Result {
  // Candidate indices with nonzero weight, ascending.
  std::vector<std::size_t> support;
  // One entry per candidate; l1-minimal over the support.
  std::vector<double> weights;
  std::size_t l1_support_size = 0;
  std::uint64_t nodes = 0;
  std::uint64_t lp_solves = 0;
  // False when a budget stopped the search before the support was proven minimal.
  bool optimal = true;
};

// Minimum-cardinality w >= 0 with sum_j w_j columns[j][r] >= 1 for every row r.
// columns[j] holds the margin entries of candidate j over all rows.
L0Result solve_l0(const std::vector<std::vector<double>>& columns, std::size_t row_count,
                  const L0Options& options = {});
L0Result solve_l0(const MasterProblem& master, const L0Options& options = {});

// Every row satisfied within tol using only the support weights.
bool verify_support(const std::vector<std::vector<double>>& columns, std::size_t row_count,
                    const std::vector<std::size_t>& support, const std::vector<double>& weights,
                    double tol = kSupportTol);

}  // namespace pace
