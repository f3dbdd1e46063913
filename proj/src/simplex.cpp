#include "pace/simplex.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include "pace/error.hpp"

namespace pace::lp {

namespace {

std::mutex g_audit_mutex;
Audit g_audit;

void record(const Solution& s) {
  std::lock_guard<std::mutex> lock(g_audit_mutex);
  ++g_audit.solves;
  const double gap =
      std::fabs(s.primal_objective - s.dual_objective) / (1.0 + std::fabs(s.primal_objective));
  g_audit.worst_duality_gap = std::max(g_audit.worst_duality_gap, gap);
  g_audit.worst_feasibility = std::max(g_audit.worst_feasibility, s.feasibility_residual);
}

}  // namespace

Audit audit() {
  std::lock_guard<std::mutex> lock(g_audit_mutex);
  return g_audit;
}

void reset_audit() {
  std::lock_guard<std::mutex> lock(g_audit_mutex);
  g_audit = {};
}

// Tableau variables are numbered mu_0..mu_{m-1}, then slack_0..slack_{n-1};
// appending a row inserts a mu column in front of the slack block.

CoveringSimplex::CoveringSimplex(SimplexOptions options) : opt_(options) {}

double CoveringSimplex::original_entry(std::size_t dual_row, std::size_t var) const {
  const std::size_t m = rhs_.size();
  if (var < m) return a_[var][dual_row];
  return (var - m) == dual_row ? 1.0 : 0.0;
}

double CoveringSimplex::objective_coeff(std::size_t var) const {
  return var < rhs_.size() ? rhs_[var] : 0.0;
}

void CoveringSimplex::add_row(std::span<const double> coeffs, double rhs) {
  if (coeffs.size() != cost_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "row length differs from column count");
  }
  a_.emplace_back(coeffs.begin(), coeffs.end());
  rhs_.push_back(rhs);
  if (tab_.empty()) return;  // no basis yet; built lazily
  // New tableau column for mu_new is B^{-1} a_new; the slack block stores B^{-1}.
  const std::size_t n = cost_.size();
  double red = rhs;
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    const std::vector<double>& row = tab_[i];
    const std::size_t m_old = rhs_.size() - 1;
    for (std::size_t j = 0; j < n; ++j) v += row[m_old + j] * coeffs[j];
    tab_[i].insert(tab_[i].begin() + static_cast<std::ptrdiff_t>(m_old), v);
  }
  const std::size_t m_old = rhs_.size() - 1;
  for (std::size_t j = 0; j < n; ++j) red += reduced_[m_old + j] * coeffs[j];
  reduced_.insert(reduced_.begin() + static_cast<std::ptrdiff_t>(m_old), red);
  for (auto& b : basis_) {
    if (b >= m_old) ++b;
  }
}

void CoveringSimplex::add_column(std::span<const double> coeffs, double cost) {
  if (coeffs.size() != rhs_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "column length differs from row count");
  }
  if (!(cost >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "covering costs must be >= 0");
  for (std::size_t r = 0; r < rhs_.size(); ++r) a_[r].push_back(coeffs[r]);
  cost_.push_back(cost);
  if (tab_.empty() && basis_.empty()) return;

  const std::size_t m = rhs_.size();
  const std::size_t n_old = cost_.size() - 1;
  // Append the new slack column to existing rows.
  for (auto& row : tab_) row.push_back(0.0);
  reduced_.push_back(0.0);
  // New dual row in original coordinates, then eliminate the basic columns.
  std::vector<double> row(m + n_old + 1, 0.0);
  for (std::size_t r = 0; r < m; ++r) row[r] = coeffs[r];
  row[m + n_old] = 1.0;
  double beta = cost;
  for (std::size_t i = 0; i < n_old; ++i) {
    const double f = row[basis_[i]];
    if (f == 0.0) continue;
    const auto& ti = tab_[i];
    for (std::size_t k = 0; k < row.size(); ++k) row[k] -= f * ti[k];
    beta -= f * beta_[i];
    row[basis_[i]] = 0.0;
  }
  tab_.push_back(std::move(row));
  beta_.push_back(beta);
  basis_.push_back(m + n_old);
  if (beta < -opt_.pivot_tol) needs_dual_repair_ = true;
}

void CoveringSimplex::reset_basis() {
  tab_.clear();
  beta_.clear();
  reduced_.clear();
  basis_.clear();
  needs_dual_repair_ = false;
}

void CoveringSimplex::pivot(std::size_t row, std::size_t col) {
  auto& pr = tab_[row];
  const double p = pr[col];
  for (double& v : pr) v /= p;
  beta_[row] /= p;
  pr[col] = 1.0;
  for (std::size_t i = 0; i < tab_.size(); ++i) {
    if (i == row) continue;
    const double f = tab_[i][col];
    if (f == 0.0) continue;
    auto& ti = tab_[i];
    for (std::size_t k = 0; k < ti.size(); ++k) ti[k] -= f * pr[k];
    ti[col] = 0.0;
    beta_[i] -= f * beta_[row];
  }
  const double f = reduced_[col];
  if (f != 0.0) {
    for (std::size_t k = 0; k < reduced_.size(); ++k) reduced_[k] -= f * pr[k];
    reduced_[col] = 0.0;
  }
  basis_[row] = col;
  ++pivots_since_refactor_;
}

void CoveringSimplex::refactor() {
  const std::size_t m = rhs_.size();
  const std::size_t n = cost_.size();
  const std::size_t vars = m + n;
  if (basis_.size() != n) {
    // Slack basis.
    basis_.resize(n);
    for (std::size_t j = 0; j < n; ++j) basis_[j] = m + j;
  }
  Eigen::MatrixXd b(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t i = 0; i < n; ++i) {
      b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) =
          original_entry(i, basis_[col]);
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
  Eigen::MatrixXd full(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(vars));
  for (std::size_t k = 0; k < vars; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      full(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = original_entry(i, k);
    }
  }
  Eigen::VectorXd c(static_cast<Eigen::Index>(n));
  Eigen::VectorXd cb(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    c(static_cast<Eigen::Index>(i)) = cost_[i];
    cb(static_cast<Eigen::Index>(i)) = objective_coeff(basis_[i]);
  }
  const Eigen::MatrixXd t = lu.solve(full);
  const Eigen::VectorXd beta = lu.solve(c);
  const Eigen::VectorXd y = lu.transpose().solve(cb);
  tab_.assign(n, std::vector<double>(vars));
  beta_.assign(n, 0.0);
  reduced_.assign(vars, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < vars; ++k) {
      tab_[i][k] = t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    beta_[i] = beta(static_cast<Eigen::Index>(i));
  }
  for (std::size_t k = 0; k < vars; ++k) {
    double v = objective_coeff(k);
    for (std::size_t i = 0; i < n; ++i) v -= y(static_cast<Eigen::Index>(i)) * original_entry(i, k);
    reduced_[k] = v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    reduced_[basis_[i]] = 0.0;
    for (std::size_t r = 0; r < n; ++r) tab_[r][basis_[i]] = (r == i) ? 1.0 : 0.0;
  }
  pivots_since_refactor_ = 0;
}

bool CoveringSimplex::primal_phase(Solution& out) {
  const std::size_t vars = var_count();
  std::vector<char> is_basic(vars, 0);
  std::size_t degenerate_run = 0;
  while (true) {
    std::fill(is_basic.begin(), is_basic.end(), 0);
    for (std::size_t b : basis_) is_basic[b] = 1;
    const bool bland = degenerate_run >= opt_.degeneracy_streak;
    std::size_t enter = vars;
    double best = opt_.optimality_tol;
    for (std::size_t k = 0; k < vars; ++k) {
      if (is_basic[k] || reduced_[k] <= opt_.optimality_tol) continue;
      if (bland) {
        enter = k;
        break;
      }
      if (reduced_[k] > best) {
        best = reduced_[k];
        enter = k;
      }
    }
    if (enter == vars) return true;

    std::size_t leave = tab_.size();
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tab_.size(); ++i) {
      const double e = tab_[i][enter];
      if (e <= opt_.pivot_tol) continue;
      const double r = std::max(beta_[i], 0.0) / e;
      if (leave == tab_.size() || r < ratio - 1e-12) {
        ratio = r;
        leave = i;
      } else if (r <= ratio + 1e-12) {
        const bool better = bland ? basis_[i] < basis_[leave] : e > tab_[leave][enter];
        if (better) {
          ratio = std::min(ratio, r);
          leave = i;
        }
      }
    }
    if (leave == tab_.size()) return false;  // dual unbounded
    degenerate_run = ratio <= 1e-12 ? degenerate_run + 1 : 0;
    pivot(leave, enter);
    if (++out.pivots > opt_.pivot_limit) {
      throw Error(ErrorCode::kSolverLimit,
                  "simplex pivot limit " + std::to_string(opt_.pivot_limit) + " reached");
    }
    if (pivots_since_refactor_ >= opt_.refactor_every) refactor();
  }
}

bool CoveringSimplex::dual_phase(Solution& out) {
  const std::size_t vars = var_count();
  std::vector<char> is_basic(vars, 0);
  while (true) {
    std::size_t leave = tab_.size();
    double worst = -opt_.pivot_tol;
    for (std::size_t i = 0; i < tab_.size(); ++i) {
      if (beta_[i] < worst) {
        worst = beta_[i];
        leave = i;
      }
    }
    if (leave == tab_.size()) return true;
    std::fill(is_basic.begin(), is_basic.end(), 0);
    for (std::size_t b : basis_) is_basic[b] = 1;
    std::size_t enter = vars;
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < vars; ++k) {
      if (is_basic[k]) continue;
      const double e = tab_[leave][k];
      if (e >= -opt_.pivot_tol) continue;
      const double r = std::min(reduced_[k], 0.0) / e;
      if (r < ratio - 1e-12 || (r <= ratio + 1e-12 && enter < vars && e < tab_[leave][enter])) {
        ratio = std::min(ratio, r);
        enter = k;
      }
    }
    if (enter == vars) return false;
    pivot(leave, enter);
    if (++out.pivots > opt_.pivot_limit) {
      throw Error(ErrorCode::kSolverLimit,
                  "simplex pivot limit " + std::to_string(opt_.pivot_limit) + " reached");
    }
    if (pivots_since_refactor_ >= opt_.refactor_every) refactor();
  }
}

Solution CoveringSimplex::extract() const {
  const std::size_t m = rhs_.size();
  const std::size_t n = cost_.size();
  Solution s;
  s.weights.assign(n, 0.0);
  s.duals.assign(m, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double w = -reduced_[m + j];
    s.weights[j] = w > 1e-13 ? w : 0.0;
  }
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    if (basis_[i] < m) s.duals[basis_[i]] = std::max(beta_[i], 0.0);
  }
  for (std::size_t j = 0; j < n; ++j) s.primal_objective += cost_[j] * s.weights[j];
  for (std::size_t r = 0; r < m; ++r) s.dual_objective += rhs_[r] * s.duals[r];
  for (std::size_t r = 0; r < m; ++r) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < n; ++j) lhs += a_[r][j] * s.weights[j];
    s.feasibility_residual = std::max(s.feasibility_residual, rhs_[r] - lhs);
  }
  return s;
}

Solution CoveringSimplex::solve() {
  Solution out;
  const std::size_t m = rhs_.size();
  const std::size_t n = cost_.size();
  if (n == 0) {
    const bool any_positive = std::any_of(rhs_.begin(), rhs_.end(), [](double b) { return b > 0; });
    if (any_positive) {
      out.status = Status::kInfeasible;
      out.duals.assign(m, 0.0);
      return out;
    }
    out.duals.assign(m, 0.0);
    record(out);
    return out;
  }
  if (tab_.empty() || basis_.size() != n) {
    basis_.clear();
    refactor();
    needs_dual_repair_ = false;
  }
  if (needs_dual_repair_) {
    const bool dual_feasible = std::none_of(reduced_.begin(), reduced_.end(),
                                            [&](double r) { return r > opt_.optimality_tol; });
    bool ok = dual_feasible && dual_phase(out);
    if (!ok) {
      basis_.clear();
      refactor();
    }
    needs_dual_repair_ = false;
  }
  for (int round = 0;; ++round) {
    if (!primal_phase(out)) {
      out.status = Status::kInfeasible;
      out.weights.clear();
      out.duals.assign(m, 0.0);
      return out;
    }
    refactor();
    const bool primal_ok = std::all_of(beta_.begin(), beta_.end(),
                                       [&](double b) { return b >= -opt_.pivot_tol; });
    const bool optimal = std::none_of(reduced_.begin(), reduced_.end(),
                                      [&](double r) { return r > opt_.optimality_tol; });
    if (primal_ok && optimal) break;
    if (!primal_ok) {
      // Drift pushed a basic value negative; restart from the slack basis.
      if (round > 3) throw Error(ErrorCode::kSolverLimit, "simplex failed to stabilize");
      basis_.clear();
      refactor();
    }
  }
  Solution s = extract();
  s.pivots = out.pivots;
  record(s);
  return s;
}

}  // namespace pace::lp
