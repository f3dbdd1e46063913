#include "pace/l0_prune.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "pace/error.hpp"
#include "pace/simplex.hpp"

namespace pace {

namespace {

enum class State : char { kFree, kIn, kOut };

struct LpResult {
  bool feasible = false;
  std::vector<double> weights;  // over the reduced candidate list
};

class Brancher {
 public:
  Brancher(const std::vector<std::vector<double>>& cols, std::size_t rows, const L0Options& opt)
      : cols_(cols), rows_(rows), opt_(opt), state_(cols.size(), State::kFree) {}

  LpResult lp(const std::vector<std::size_t>& subset) {
    ++lp_solves_;
    lp::CoveringSimplex s;
    for (std::size_t j = 0; j < subset.size(); ++j) s.add_column({}, 1.0);
    std::vector<double> row(subset.size());
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t j = 0; j < subset.size(); ++j) row[j] = cols_[subset[j]][r];
      s.add_row(row, 1.0);
    }
    const lp::Solution sol = s.solve();
    LpResult out;
    if (sol.status == lp::Status::kInfeasible) return out;
    out.feasible = true;
    out.weights.assign(cols_.size(), 0.0);
    for (std::size_t j = 0; j < subset.size(); ++j) out.weights[subset[j]] = sol.weights[j];
    return out;
  }

  void offer(const std::vector<double>& w) {
    std::vector<std::size_t> supp;
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[j] > opt_.tol) supp.push_back(j);
    }
    if (!have_ || supp.size() < best_.size()) {
      best_ = std::move(supp);
      have_ = true;
    }
  }

  void run(const LpResult& root, const std::vector<std::vector<std::size_t>>& hints) {
    offer(root.weights);
    l1_size_ = best_.size();
    for (const auto& h : hints) {
      if (h.size() >= best_.size()) continue;
      const LpResult r = lp(h);
      if (r.feasible) offer(r.weights);
    }
    shrink();
    try {
      node(&root);
    } catch (const Stop&) {
      optimal_ = false;
    }
  }

  bool optimal() const { return optimal_; }

  const std::vector<std::size_t>& best() const { return best_; }
  std::size_t l1_size() const { return l1_size_; }
  std::uint64_t nodes() const { return nodes_; }
  std::uint64_t lp_solves() const { return lp_solves_; }

 private:
  std::vector<std::size_t> members(bool include_free) const {
    std::vector<std::size_t> m;
    for (std::size_t j = 0; j < state_.size(); ++j) {
      if (state_[j] == State::kIn || (include_free && state_[j] == State::kFree)) m.push_back(j);
    }
    return m;
  }

  struct Stop {};

  // One pass over the incumbent, dropping each learner whose removal keeps
  // every row satisfiable. Gives the search a tight early bound.
  void shrink() {
    const std::vector<std::size_t> order = best_;
    for (std::size_t j : order) {
      if (std::find(best_.begin(), best_.end(), j) == best_.end()) continue;
      if (out_of_time()) return;
      std::vector<std::size_t> rest;
      for (std::size_t k : best_) {
        if (k != j) rest.push_back(k);
      }
      const LpResult r = lp(rest);
      if (r.feasible) offer(r.weights);
    }
  }

  bool out_of_time() const {
    return opt_.time_limit_seconds > 0.0 &&
           std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count() >
               opt_.time_limit_seconds;
  }

  // `known` is the already-solved LP of this node, if any.
  void node(const LpResult* known) {
    ++nodes_;
    if ((opt_.node_budget != 0 && nodes_ > opt_.node_budget) || out_of_time()) throw Stop{};
    const auto in = members(false);
    if (in.size() >= best_.size()) return;
    if (in.size() + 1 >= best_.size()) {
      // Only the forced set itself can still improve the incumbent.
      const LpResult r = lp(in);
      if (r.feasible) offer(r.weights);
      return;
    }
    LpResult local;
    const LpResult* r = known;
    if (!r) {
      local = lp(members(true));
      r = &local;
    }
    if (!r->feasible) return;
    offer(r->weights);

    std::size_t pick = state_.size();
    double top = opt_.tol;
    for (std::size_t j = 0; j < state_.size(); ++j) {
      if (state_[j] == State::kFree && r->weights[j] > top) {
        top = r->weights[j];
        pick = j;
      }
    }
    // The LP solution lives on the forced set: nothing below can beat |in|.
    if (pick == state_.size()) return;
    state_[pick] = State::kIn;
    node(nullptr);
    state_[pick] = State::kOut;
    node(nullptr);
    state_[pick] = State::kFree;
  }

  const std::vector<std::vector<double>>& cols_;
  std::size_t rows_;
  L0Options opt_;
  std::vector<State> state_;
  std::vector<std::size_t> best_;
  bool have_ = false;
  std::size_t l1_size_ = 0;
  std::uint64_t nodes_ = 0;
  std::uint64_t lp_solves_ = 0;
  bool optimal_ = true;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

L0Result solve_l0(const std::vector<std::vector<double>>& columns, std::size_t row_count,
                  const L0Options& options) {
  for (const auto& c : columns) {
    if (c.size() != row_count) throw Error(ErrorCode::kInvalidArgument, "column length differs from row count");
  }
  L0Result out;
  out.weights.assign(columns.size(), 0.0);
  if (row_count == 0) return out;

  // Identical columns are interchangeable and columns without a positive entry
  // never help a covering row; keep one useful representative of each class.
  std::vector<std::size_t> keep;
  std::map<std::vector<double>, std::size_t> seen;
  constexpr std::size_t kDropped = static_cast<std::size_t>(-1);
  std::vector<std::size_t> rep(columns.size(), kDropped);
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (std::none_of(columns[j].begin(), columns[j].end(), [](double v) { return v > 0.0; })) continue;
    const auto [it, fresh] = seen.emplace(columns[j], keep.size());
    if (fresh) keep.push_back(j);
    rep[j] = it->second;
  }
  std::vector<std::vector<std::size_t>> hints;
  for (const auto& h : options.hints) {
    std::vector<std::size_t> mapped;
    for (std::size_t j : h) {
      if (j >= columns.size()) throw Error(ErrorCode::kInvalidArgument, "l0 hint index out of range");
      if (rep[j] != kDropped) mapped.push_back(rep[j]);
    }
    std::sort(mapped.begin(), mapped.end());
    mapped.erase(std::unique(mapped.begin(), mapped.end()), mapped.end());
    hints.push_back(std::move(mapped));
  }
  std::vector<std::vector<double>> reduced;
  reduced.reserve(keep.size());
  for (std::size_t j : keep) reduced.push_back(columns[j]);

  Brancher b(reduced, row_count, options);
  std::vector<std::size_t> all(reduced.size());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  const LpResult root = b.lp(all);
  if (!root.feasible) {
    throw Error(ErrorCode::kInternalConsistency, "l0 root infeasible: candidates cannot satisfy the rows");
  }
  b.run(root, hints);

  // l1-minimal weights on the chosen support.
  const LpResult fin = b.lp(b.best());
  if (!fin.feasible) throw Error(ErrorCode::kInternalConsistency, "l0 incumbent lost feasibility");
  for (std::size_t j : b.best()) {
    if (fin.weights[j] > options.tol) {
      out.support.push_back(keep[j]);
      out.weights[keep[j]] = fin.weights[j];
    }
  }
  std::sort(out.support.begin(), out.support.end());
  out.l1_support_size = b.l1_size();
  out.nodes = b.nodes();
  out.lp_solves = b.lp_solves();
  out.optimal = b.optimal();
  return out;
}

L0Result solve_l0(const MasterProblem& master, const L0Options& options) {
  std::vector<std::vector<double>> cols;
  cols.reserve(master.column_count());
  for (std::size_t c = 0; c < master.column_count(); ++c) cols.push_back(master.column_entries(c));
  return solve_l0(cols, master.row_count(), options);
}

bool verify_support(const std::vector<std::vector<double>>& columns, std::size_t row_count,
                    const std::vector<std::size_t>& support, const std::vector<double>& weights,
                    double tol) {
  for (std::size_t r = 0; r < row_count; ++r) {
    double lhs = 0.0;
    for (std::size_t j : support) lhs += weights[j] * columns[j][r];
    if (lhs < 1.0 - tol) return false;
  }
  return true;
}

}  // namespace pace
