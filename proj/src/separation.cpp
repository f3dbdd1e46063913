#include "pace/separation.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>

#include "pace/error.hpp"

namespace pace {

std::string format_int128(__int128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1u
                            : static_cast<unsigned __int128>(v);
  std::string s;
  while (u > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) s.push_back('-');
  std::reverse(s.begin(), s.end());
  return s;
}

ScaledEnsemble::ScaledEnsemble(const WeightedEnsemble& ens, int digits) : labels_(ens.label_count) {
  for (std::size_t t = 0; t < ens.trees.size(); ++t) {
    const double w = ens.weights[t];
    if (!(w > 0.0)) continue;
    const Tree& tree = ens.trees[t];
    std::vector<std::vector<std::int64_t>> reg(tree.size());
    for (std::size_t n = 0; n < tree.size(); ++n) {
      const Node& node = tree.nodes()[n];
      if (!node.is_leaf()) continue;
      reg[n].resize(static_cast<std::size_t>(labels_));
      for (std::size_t y = 0; y < reg[n].size(); ++y) reg[n][y] = scale(w * node.scores[y], digits).value;
    }
    trees_.push_back(tree);
    reg_.push_back(std::move(reg));
  }
}

const std::vector<std::int64_t>& ScaledEnsemble::registers(std::size_t t, int node) const {
  return reg_[t][static_cast<std::size_t>(node)];
}

std::vector<__int128> ScaledEnsemble::sums(std::span<const double> raw) const {
  std::vector<__int128> s(static_cast<std::size_t>(labels_), 0);
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    const auto& r = registers(t, trees_[t].route(raw));
    for (std::size_t y = 0; y < s.size(); ++y) s[y] += r[y];
  }
  return s;
}

Label ScaledEnsemble::vote(std::span<const double> raw) const {
  const auto s = sums(raw);
  if (s.empty()) return 0;
  return static_cast<Label>(std::max_element(s.begin(), s.end()) - s.begin());
}

__int128 ScaledEnsemble::min_margin(std::span<const double> raw, Label y) const {
  const auto s = sums(raw);
  __int128 best = 0;
  bool first = true;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (static_cast<Label>(k) == y) continue;
    const __int128 m = s[static_cast<std::size_t>(y)] - s[k];
    if (first || m < best) best = m;
    first = false;
  }
  return best;
}

ScaledForest::ScaledForest(const IsolationForest& forest, int digits) : trees_(forest.trees) {
  for (const Tree& tree : trees_) {
    std::vector<std::int64_t> c(tree.size(), 0);
    for (std::size_t n = 0; n < tree.size(); ++n) {
      const Node& node = tree.nodes()[n];
      if (node.is_leaf()) c[n] = scale(leaf_path_length(node), digits).value;
    }
    coef_.push_back(std::move(c));
  }
}

__int128 ScaledForest::score(std::span<const double> raw) const {
  __int128 s = 0;
  for (std::size_t t = 0; t < trees_.size(); ++t) s += coefficient(t, trees_[t].route(raw));
  return s;
}

namespace {

// Root-to-leaf boxes of the reachable leaves of `tree`.
std::vector<SepLeaf> compile_leaves(const Tree& tree, const DiscreteDomain& domain) {
  const std::size_t n = domain.feature_count();
  std::vector<SepLeaf> out;
  struct Frame {
    int node;
    std::vector<int> lo, hi;
  };
  std::vector<int> hi0(n);
  for (std::size_t i = 0; i < n; ++i) hi0[i] = domain.interval_count(i) - 1;
  std::vector<Frame> stack{{0, std::vector<int>(n, 0), hi0}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    const Node& node = tree.node(f.node);
    if (node.is_leaf()) {
      out.push_back({f.node, std::move(f.lo), std::move(f.hi), {}});
      continue;
    }
    const auto i = static_cast<std::size_t>(node.feature);
    if (i >= n) throw Error(ErrorCode::kModelMalformed, "split feature outside the domain");
    const int k = domain.level_index(node.feature, node.threshold);
    Frame right{node.right, f.lo, f.hi};
    right.lo[i] = std::max(right.lo[i], k + 1);
    f.hi[i] = std::min(f.hi[i], k);
    // Push right first so leaves come out in left-to-right order.
    if (right.lo[i] <= right.hi[i]) stack.push_back(std::move(right));
    if (f.lo[i] <= f.hi[i]) stack.push_back({node.left, std::move(f.lo), std::move(f.hi)});
  }
  return out;
}

std::int64_t leaf_coefficient(const SeparationInstance& inst, const SepTree& st, const SepLeaf& leaf,
                              const SepConstraint& c) {
  if (c.role == TreeRole::kIsolation) return inst.forest.coefficient(st.source, leaf.node);
  const ScaledEnsemble& e = c.role == TreeRole::kOriginal ? inst.orig : inst.current;
  const auto& r = e.registers(st.source, leaf.node);
  return r[static_cast<std::size_t>(c.plus)] - r[static_cast<std::size_t>(c.minus)];
}

}  // namespace

SeparationInstance build_instance(const WeightedEnsemble& orig, const WeightedEnsemble& current,
                                  const IsolationForest& forest, const DiscreteDomain& domain,
                                  double eta, double delta, Label y_orig, Label y_alt, int digits) {
  const int labels = orig.label_count;
  if (labels < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two labels");
  if (current.label_count != labels) throw Error(ErrorCode::kInvalidArgument, "label counts differ");
  if (y_orig == y_alt) throw Error(ErrorCode::kInvalidArgument, "label pair must be distinct");
  if (y_orig < 0 || y_orig >= labels || y_alt < 0 || y_alt >= labels) {
    throw Error(ErrorCode::kInvalidArgument, "label out of range");
  }
  if (!(eta >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "eta must be >= 0");

  SeparationInstance inst;
  inst.domain = domain;
  inst.y_orig = y_orig;
  inst.y_alt = y_alt;
  inst.digits = digits;
  inst.eta_scaled = scale(eta, digits).value;
  inst.delta_scaled = delta > 0.0 ? scale(delta, digits).value : 0;
  inst.orig = ScaledEnsemble(orig, digits);
  inst.current = ScaledEnsemble(current, digits);
  const bool plausibility = inst.delta_scaled > 0;
  if (plausibility) {
    if (forest.empty()) throw Error(ErrorCode::kInvalidArgument, "delta > 0 needs an isolation forest");
    inst.forest = ScaledForest(forest, digits);
  }

  std::vector<int> confidence;
  for (Label y = 0; y < labels; ++y) {
    if (y == y_orig) continue;
    confidence.push_back(static_cast<int>(inst.constraints.size()));
    inst.constraints.push_back({"confidence[" + std::to_string(y) + "]", TreeRole::kOriginal, y_orig,
                                y, inst.eta_scaled + 1});
  }
  // The vote breaks ties toward the lowest label, so a tie already promotes
  // y_alt when it is the smaller label.
  inst.disagreement = inst.constraints.size();
  inst.constraints.push_back(
      {"disagreement", TreeRole::kCurrent, y_alt, y_orig, y_alt > y_orig ? 1 : 0});
  int plaus = -1;
  if (plausibility) {
    plaus = static_cast<int>(inst.constraints.size());
    inst.constraints.push_back({"plausibility", TreeRole::kIsolation, 0, 0, inst.delta_scaled});
  }

  auto add_trees = [&](TreeRole role, const std::vector<Tree>& trees, std::vector<int> cons) {
    for (std::size_t t = 0; t < trees.size(); ++t) {
      SepTree st;
      st.role = role;
      st.source = t;
      st.constraints = cons;
      st.leaves = compile_leaves(trees[t], domain);
      for (SepLeaf& leaf : st.leaves) {
        for (int c : cons) {
          leaf.coef.push_back(leaf_coefficient(inst, st, leaf, inst.constraints[static_cast<std::size_t>(c)]));
        }
      }
      inst.trees.push_back(std::move(st));
    }
  };
  add_trees(TreeRole::kOriginal, inst.orig.trees(), confidence);
  add_trees(TreeRole::kCurrent, inst.current.trees(), {static_cast<int>(inst.disagreement)});
  if (plausibility) add_trees(TreeRole::kIsolation, inst.forest.trees(), {plaus});
  return inst;
}

std::vector<__int128> constraint_values(const SeparationInstance& inst, std::span<const int> cell) {
  const auto raw = inst.domain.representative(cell);
  std::vector<__int128> lhs(inst.constraints.size(), 0);
  const auto so = inst.orig.sums(raw);
  const auto sc = inst.current.sums(raw);
  const __int128 plaus = inst.forest.empty() ? 0 : inst.forest.score(raw);
  for (std::size_t c = 0; c < inst.constraints.size(); ++c) {
    const SepConstraint& k = inst.constraints[c];
    switch (k.role) {
      case TreeRole::kOriginal:
        lhs[c] = so[static_cast<std::size_t>(k.plus)] - so[static_cast<std::size_t>(k.minus)];
        break;
      case TreeRole::kCurrent:
        lhs[c] = sc[static_cast<std::size_t>(k.plus)] - sc[static_cast<std::size_t>(k.minus)];
        break;
      case TreeRole::kIsolation:
        lhs[c] = plaus;
        break;
    }
  }
  return lhs;
}

bool verify_cell(const SeparationInstance& inst, std::span<const int> cell) {
  const auto lhs = constraint_values(inst, cell);
  for (std::size_t c = 0; c < lhs.size(); ++c) {
    if (lhs[c] < inst.constraints[c].rhs) return false;
  }
  return true;
}

namespace {

class Search {
 public:
  Search(const SeparationInstance& inst, const SearchOptions& opt) : inst_(inst), opt_(opt) {
    const std::size_t nf = inst.domain.feature_count();
    order_.resize(nf);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return inst.domain.interval_count(a) > inst.domain.interval_count(b);
    });
    excl_.resize(nf);
    for (std::size_t i = 0; i < nf; ++i) excl_[i].resize(static_cast<std::size_t>(inst.domain.interval_count(i)));
    viol_.resize(inst.trees.size());
    best_.resize(inst.trees.size());
    bound_.assign(inst.constraints.size(), 0);
    for (std::size_t t = 0; t < inst.trees.size(); ++t) {
      const SepTree& st = inst.trees[t];
      viol_[t].assign(st.leaves.size(), 0);
      for (std::size_t l = 0; l < st.leaves.size(); ++l) {
        const SepLeaf& leaf = st.leaves[l];
        for (std::size_t i = 0; i < nf; ++i) {
          for (int k = 0; k < inst.domain.interval_count(i); ++k) {
            if (k < leaf.lo[i] || k > leaf.hi[i]) excl_[i][static_cast<std::size_t>(k)].push_back({t, l});
          }
        }
      }
      best_[t] = tree_max(t);
      for (std::size_t j = 0; j < st.constraints.size(); ++j) {
        bound_[static_cast<std::size_t>(st.constraints[j])] += best_[t][j];
      }
    }
    cell_.assign(nf, 0);
    dirty_mark_.assign(inst.trees.size(), 0);
  }

  SeparationResult witness() {
    objective_ = false;
    SeparationResult r;
    if (dfs(0)) {
      r.status = SeparationResult::Status::kWitness;
      r.cell = found_;
    }
    r.stats = stats_;
    return r;
  }

  SeparationResult max_disagreement() {
    objective_ = true;
    incumbent_ = static_cast<__int128>(inst_.constraints[inst_.disagreement].rhs) - 1;
    dfs(0);
    SeparationResult r;
    if (have_incumbent_) {
      r.status = SeparationResult::Status::kWitness;
      r.cell = found_;
      r.objective = incumbent_;
    }
    r.stats = stats_;
    return r;
  }

 private:
  struct Undo {
    std::size_t tree;
    std::vector<std::int64_t> old;
  };

  std::vector<std::int64_t> tree_max(std::size_t t) const {
    const SepTree& st = inst_.trees[t];
    std::vector<std::int64_t> m(st.constraints.size(), 0);
    bool any = false;
    for (std::size_t l = 0; l < st.leaves.size(); ++l) {
      if (viol_[t][l] != 0) continue;
      const auto& c = st.leaves[l].coef;
      for (std::size_t j = 0; j < m.size(); ++j) m[j] = any ? std::max(m[j], c[j]) : c[j];
      any = true;
    }
    if (!any) throw Error(ErrorCode::kInternalConsistency, "a tree lost every leaf during search");
    return m;
  }

  bool bounds_ok() const {
    for (std::size_t c = 0; c < bound_.size(); ++c) {
      if (objective_ && c == inst_.disagreement) {
        if (bound_[c] <= incumbent_) return false;
      } else if (bound_[c] < inst_.constraints[c].rhs) {
        return false;
      }
    }
    return true;
  }

  void assign(std::size_t feature, int value, std::vector<Undo>& undo) {
    std::vector<std::size_t> dirty;
    for (const auto& [t, l] : excl_[feature][static_cast<std::size_t>(value)]) {
      if (viol_[t][l]++ == 0 && !dirty_mark_[t]) {
        dirty_mark_[t] = 1;
        dirty.push_back(t);
      }
    }
    for (std::size_t t : dirty) {
      dirty_mark_[t] = 0;
      auto m = tree_max(t);
      const auto& cons = inst_.trees[t].constraints;
      for (std::size_t j = 0; j < cons.size(); ++j) {
        bound_[static_cast<std::size_t>(cons[j])] += static_cast<__int128>(m[j]) - best_[t][j];
      }
      undo.push_back({t, std::move(best_[t])});
      best_[t] = std::move(m);
      ++stats_.propagations;
    }
  }

  void unassign(std::size_t feature, int value, std::vector<Undo>& undo) {
    for (auto it = undo.rbegin(); it != undo.rend(); ++it) {
      const auto& cons = inst_.trees[it->tree].constraints;
      for (std::size_t j = 0; j < cons.size(); ++j) {
        bound_[static_cast<std::size_t>(cons[j])] +=
            static_cast<__int128>(it->old[j]) - best_[it->tree][j];
      }
      best_[it->tree] = std::move(it->old);
    }
    undo.clear();
    for (const auto& [t, l] : excl_[feature][static_cast<std::size_t>(value)]) --viol_[t][l];
  }

  // Returns true to stop the search.
  bool at_leaf() {
    // With every feature fixed each tree has one surviving leaf, so the bounds
    // are the exact left-hand sides; re-check them by routing.
    if (!verify_cell(inst_, cell_)) {
      throw Error(ErrorCode::kInternalConsistency, "propagated bounds disagree with routed evaluation");
    }
    found_ = cell_;
    if (!objective_) return true;
    incumbent_ = bound_[inst_.disagreement];
    have_incumbent_ = true;
    return false;
  }

  bool dfs(std::size_t depth) {
    ++stats_.nodes;
    if (opt_.node_budget != 0 && stats_.nodes > opt_.node_budget) {
      throw Error(ErrorCode::kBudgetExceeded, "separation node budget exceeded");
    }
    if (!bounds_ok()) return false;
    if (depth == order_.size()) return at_leaf();
    const std::size_t f = order_[depth];
    std::vector<Undo> undo;
    for (int k = 0; k < inst_.domain.interval_count(f); ++k) {
      cell_[f] = k;
      assign(f, k, undo);
      const bool stop = dfs(depth + 1);
      unassign(f, k, undo);
      if (stop) return true;
    }
    cell_[f] = 0;
    return false;
  }

  const SeparationInstance& inst_;
  SearchOptions opt_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::vector<std::pair<std::size_t, std::size_t>>>> excl_;
  std::vector<std::vector<int>> viol_;
  std::vector<std::vector<std::int64_t>> best_;
  std::vector<__int128> bound_;
  std::vector<char> dirty_mark_;
  std::vector<int> cell_;
  std::vector<int> found_;
  SeparationStats stats_;
  bool objective_ = false;
  __int128 incumbent_ = 0;
  bool have_incumbent_ = false;
};

}  // namespace

SeparationResult find_witness(const SeparationInstance& inst, const SearchOptions& options) {
  return Search(inst, options).witness();
}

SeparationResult find_max_disagreement(const SeparationInstance& inst, const SearchOptions& options) {
  return Search(inst, options).max_disagreement();
}

SeparationResult brute_force_oracle(const SeparationInstance& inst, std::uint64_t cap) {
  const std::uint64_t cells = inst.domain.cell_count();
  if (cells > cap) throw Error(ErrorCode::kBudgetExceeded, "domain too large for exhaustive enumeration");
  const std::size_t nf = inst.domain.feature_count();
  std::vector<int> cell(nf, 0);
  SeparationResult r;
  for (std::uint64_t n = 0; n < cells; ++n) {
    ++r.stats.nodes;
    if (verify_cell(inst, cell)) {
      r.status = SeparationResult::Status::kWitness;
      r.cell = cell;
      return r;
    }
    // Odometer with the last feature varying fastest.
    for (std::size_t i = nf; i-- > 0;) {
      if (++cell[i] < inst.domain.interval_count(i)) break;
      cell[i] = 0;
    }
  }
  return r;
}

std::vector<PairResult> find_all_pairs(const WeightedEnsemble& orig,
                                       const WeightedEnsemble& current,
                                       const IsolationForest& forest, const DiscreteDomain& domain,
                                       double eta, double delta, const PairSearchOptions& options) {
  const int labels = orig.label_count;
  if (labels < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two labels");
  std::vector<PairResult> out;
  for (Label a = 0; a < labels; ++a) {
    for (Label b = 0; b < labels; ++b) {
      if (a != b) out.push_back({a, b, {}});
    }
  }
  std::vector<std::exception_ptr> errors(out.size());
  auto run = [&](std::size_t p) {
    try {
      const auto inst = build_instance(orig, current, forest, domain, eta, delta, out[p].y_orig,
                                       out[p].y_alt, options.digits);
      out[p].result = options.objective_mode ? find_max_disagreement(inst, options.search)
                                             : find_witness(inst, options.search);
    } catch (...) {
      errors[p] = std::current_exception();
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(out.size(), static_cast<std::size_t>(std::max(1, options.threads)));
  if (threads <= 1) {
    for (std::size_t p = 0; p < out.size(); ++p) run(p);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t p = w; p < out.size(); p += threads) run(p);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void dump_instance(const SeparationInstance& inst, std::ostream& out) {
  static const char* role_name[] = {"orig", "current", "iforest"};
  out << "separation instance y_orig=" << inst.y_orig << " y_alt=" << inst.y_alt
      << " digits=" << inst.digits << " eta_s=" << inst.eta_scaled << " delta_s=" << inst.delta_scaled
      << "\n";
  for (std::size_t i = 0; i < inst.domain.feature_count(); ++i) {
    out << "  x" << i << " in {0.." << inst.domain.interval_count(i) - 1 << "} levels:";
    for (double a : inst.domain.levels(i)) out << " " << a;
    out << "\n";
  }
  for (std::size_t c = 0; c < inst.constraints.size(); ++c) {
    const SepConstraint& k = inst.constraints[c];
    out << "  c" << c << " " << k.name << ": sum_" << role_name[static_cast<int>(k.role)];
    if (k.role != TreeRole::kIsolation) out << " (r" << k.plus << " - r" << k.minus << ")";
    else out << " b";
    out << " >= " << k.rhs << "\n";
  }
  for (std::size_t t = 0; t < inst.trees.size(); ++t) {
    const SepTree& st = inst.trees[t];
    out << "  tree " << t << " [" << role_name[static_cast<int>(st.role)] << " " << st.source
        << "] exactly one of:\n";
    for (const SepLeaf& leaf : st.leaves) {
      out << "    z" << t << "_" << leaf.node << ":";
      for (std::size_t i = 0; i < leaf.lo.size(); ++i) {
        if (leaf.lo[i] == 0 && leaf.hi[i] == inst.domain.interval_count(i) - 1) continue;
        out << " " << leaf.lo[i] << "<=k" << i << "<=" << leaf.hi[i];
      }
      out << " ->";
      for (std::size_t j = 0; j < leaf.coef.size(); ++j) out << " c" << st.constraints[j] << ":" << leaf.coef[j];
      out << "\n";
    }
  }
}

}  // namespace pace
