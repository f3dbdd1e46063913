#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pace::lp {

enum class Status { kOptimal, kInfeasible };

struct Solution {
  Status status = Status::kOptimal;
  // Primal weights, one per column (empty when infeasible).
  std::vector<double> weights;
  // Row duals, one per row.
  std::vector<double> duals;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  // max_r (b_r - A_r w), clipped at 0.
  double feasibility_residual = 0.0;
  std::size_t pivots = 0;
};

struct SimplexOptions {
  std::size_t pivot_limit = 200000;
  // Consecutive degenerate pivots before switching to Bland's rule.
  std::size_t degeneracy_streak = 50;
  std::size_t refactor_every = 64;
  double optimality_tol = 1e-10;
  double pivot_tol = 1e-9;
};

// Dense simplex for covering programs
//
//   min c.w  s.t.  A w >= b,  w >= 0,   with c >= 0,
//
// solved through its packing dual  max b.mu  s.t.  A^T mu <= c, mu >= 0.
// The slack basis of the dual is feasible because c >= 0, so no phase one is
// needed; an unbounded dual certifies that the covering program is infeasible.
// Rows of the covering program are dual variables (tableau columns) and
// covering columns are dual constraints (tableau rows), so adding a row keeps
// the current basis primal feasible and adding a column keeps it dual feasible
// (repaired with dual simplex pivots). Both are warm-started.
class CoveringSimplex {
 public:
  explicit CoveringSimplex(SimplexOptions options = {});

  std::size_t row_count() const { return rhs_.size(); }
  std::size_t column_count() const { return cost_.size(); }

  // coeffs has one entry per existing column.
  void add_row(std::span<const double> coeffs, double rhs);
  // coeffs has one entry per existing row.
  void add_column(std::span<const double> coeffs, double cost);

  Solution solve();
  // Drop the basis; the next solve starts from the slack basis.
  void reset_basis();

  double coefficient(std::size_t row, std::size_t col) const { return a_[row][col]; }
  double rhs(std::size_t row) const { return rhs_[row]; }
  double cost(std::size_t col) const { return cost_[col]; }

 private:
  // Tableau columns: [0, m) row duals mu, [m, m + n) slacks of the dual rows.
  std::size_t var_count() const { return rhs_.size() + cost_.size(); }
  double original_entry(std::size_t dual_row, std::size_t var) const;
  double objective_coeff(std::size_t var) const;
  void pivot(std::size_t row, std::size_t col);
  void refactor();
  bool primal_phase(Solution& out);
  bool dual_phase(Solution& out);
  Solution extract() const;

  SimplexOptions opt_;
  std::vector<std::vector<double>> a_;  // covering matrix, row-major
  std::vector<double> rhs_;
  std::vector<double> cost_;

  // Tableau over the dual: one row per covering column.
  std::vector<std::vector<double>> tab_;
  std::vector<double> beta_;    // basic values
  std::vector<double> reduced_; // reduced costs of the dual objective
  std::vector<std::size_t> basis_;
  std::size_t pivots_since_refactor_ = 0;
  bool needs_dual_repair_ = false;
};

// Process-wide record of every optimal solve, used by the acceptance suite to
// check strong duality and feasibility across all solves performed.
struct Audit {
  std::uint64_t solves = 0;
  double worst_duality_gap = 0.0;      // |c.w - b.mu| / (1 + |c.w|)
  double worst_feasibility = 0.0;      // max residual
};
Audit audit();
void reset_audit();

}  // namespace pace::lp
