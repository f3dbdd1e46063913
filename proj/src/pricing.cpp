#include "pace/pricing.hpp"

#include <algorithm>
#include <numeric>

#include "pace/error.hpp"

namespace pace {

DualVector DualVector::from(const MasterProblem& master, const MasterSolution& solution,
                            int label_count) {
  DualVector d;
  d.samples = &master.samples();
  d.rows = &master.rows();
  d.mu = solution.duals;
  d.mu.resize(master.row_count(), 0.0);
  d.label_count = label_count;
  return d;
}

namespace {

void check(const DualVector& duals) {
  if (!duals.samples || !duals.rows) throw Error(ErrorCode::kInvalidArgument, "dual vector has no rows");
  if (duals.mu.size() != duals.rows->size()) {
    throw Error(ErrorCode::kInvalidArgument, "dual vector size differs from row count");
  }
}

std::vector<double> one_hot(int labels, int y) {
  std::vector<double> v(static_cast<std::size_t>(labels), 0.0);
  v[static_cast<std::size_t>(y)] = 1.0;
  return v;
}

// Best label of an accumulated gain vector, lowest label on ties.
std::pair<int, double> best_label(const std::vector<double>& g) {
  int best = 0;
  for (int y = 1; y < static_cast<int>(g.size()); ++y) {
    if (g[static_cast<std::size_t>(y)] > g[static_cast<std::size_t>(best)]) best = y;
  }
  return {best, g[static_cast<std::size_t>(best)]};
}

PricingOutcome finish(Tree tree, double objective, const DualVector& duals, Exactness ex) {
  PricingOutcome out;
  out.objective = objective;
  // Recomputed from the rows so the value does not depend on the search bookkeeping.
  out.reduced_cost = reduced_cost(tree, duals);
  out.learner = std::move(tree);
  out.exactness = ex;
  return out;
}

}  // namespace

double reduced_cost(const Tree& learner, const DualVector& duals) {
  check(duals);
  double sum = 0.0;
  for (std::size_t r = 0; r < duals.rows->size(); ++r) {
    const double mu = duals.mu[r];
    if (mu == 0.0) continue;
    const MasterRow& row = (*duals.rows)[r];
    const LabeledSample& s = (*duals.samples)[row.sample];
    const auto& v = learner.scores(s.raw);
    sum += mu * (v[static_cast<std::size_t>(s.y_orig)] - v[static_cast<std::size_t>(row.rival)]);
  }
  return 1.0 - sum;
}

std::vector<std::vector<double>> leaf_gains(const DualVector& duals) {
  check(duals);
  const std::size_t labels = static_cast<std::size_t>(duals.label_count);
  std::vector<std::vector<double>> gain(duals.samples->size(), std::vector<double>(labels, 0.0));
  for (std::size_t r = 0; r < duals.rows->size(); ++r) {
    const double mu = duals.mu[r];
    const MasterRow& row = (*duals.rows)[r];
    const auto yo = static_cast<std::size_t>((*duals.samples)[row.sample].y_orig);
    // Predicting y^o earns mu on every rival row; predicting the rival costs mu.
    gain[row.sample][yo] += mu;
    gain[row.sample][static_cast<std::size_t>(row.rival)] -= mu;
  }
  return gain;
}

PricingOutcome price_exact_stumps(const DualVector& duals, const DiscreteDomain& domain) {
  const auto gain = leaf_gains(duals);
  const auto& samples = *duals.samples;
  const std::size_t labels = static_cast<std::size_t>(duals.label_count);

  std::vector<double> total(labels, 0.0);
  for (const auto& g : gain) {
    for (std::size_t y = 0; y < labels; ++y) total[y] += g[y];
  }
  auto [const_label, best_obj] = best_label(total);
  Tree best = Tree::leaf(one_hot(duals.label_count, const_label));

  for (int i = 0; i < static_cast<int>(domain.feature_count()); ++i) {
    const auto& lv = domain.levels(static_cast<std::size_t>(i));
    if (lv.empty()) continue;
    // agg[c][y]: gain of the samples whose cell index on feature i is c.
    std::vector<std::vector<double>> agg(lv.size() + 1, std::vector<double>(labels, 0.0));
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const auto c = static_cast<std::size_t>(samples[s].cell[static_cast<std::size_t>(i)]);
      for (std::size_t y = 0; y < labels; ++y) agg[c][y] += gain[s][y];
    }
    std::vector<double> left(labels, 0.0), right(labels);
    for (std::size_t k = 0; k < lv.size(); ++k) {
      for (std::size_t y = 0; y < labels; ++y) left[y] += agg[k][y];
      for (std::size_t y = 0; y < labels; ++y) right[y] = total[y] - left[y];
      const auto [ly, lg] = best_label(left);
      const auto [ry, rg] = best_label(right);
      if (lg + rg > best_obj) {
        best_obj = lg + rg;
        best = Tree::stump(i, lv[k], one_hot(duals.label_count, ly), one_hot(duals.label_count, ry));
      }
    }
  }
  return finish(std::move(best), best_obj, duals, Exactness::kExact);
}

namespace {

struct Grower {
  const std::vector<std::vector<double>>& gain;
  const std::vector<LabeledSample>& samples;
  const DiscreteDomain& domain;
  int labels;
  std::vector<Node> nodes;
  double objective = 0.0;

  std::vector<double> sum(const std::vector<std::size_t>& idx) const {
    std::vector<double> g(static_cast<std::size_t>(labels), 0.0);
    for (std::size_t s : idx) {
      for (int y = 0; y < labels; ++y) g[static_cast<std::size_t>(y)] += gain[s][static_cast<std::size_t>(y)];
    }
    return g;
  }

  int grow(const std::vector<std::size_t>& idx, int depth, int remaining) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[static_cast<std::size_t>(id)].depth = depth;
    nodes[static_cast<std::size_t>(id)].support = static_cast<int>(idx.size());
    const auto total = sum(idx);
    const auto [leaf_y, leaf_g] = best_label(total);

    int best_f = -1;
    std::size_t best_k = 0;
    double best_split = leaf_g;
    if (remaining > 0 && idx.size() > 1) {
      for (int i = 0; i < static_cast<int>(domain.feature_count()); ++i) {
        const auto& lv = domain.levels(static_cast<std::size_t>(i));
        if (lv.empty()) continue;
        std::vector<std::vector<double>> agg(lv.size() + 1,
                                             std::vector<double>(static_cast<std::size_t>(labels), 0.0));
        for (std::size_t s : idx) {
          const auto c = static_cast<std::size_t>(samples[s].cell[static_cast<std::size_t>(i)]);
          for (int y = 0; y < labels; ++y) agg[c][static_cast<std::size_t>(y)] += gain[s][static_cast<std::size_t>(y)];
        }
        std::vector<double> left(static_cast<std::size_t>(labels), 0.0), right(left);
        for (std::size_t k = 0; k < lv.size(); ++k) {
          for (int y = 0; y < labels; ++y) {
            left[static_cast<std::size_t>(y)] += agg[k][static_cast<std::size_t>(y)];
            right[static_cast<std::size_t>(y)] = total[static_cast<std::size_t>(y)] - left[static_cast<std::size_t>(y)];
          }
          const double v = best_label(left).second + best_label(right).second;
          if (v > best_split + 1e-12) {
            best_split = v;
            best_f = i;
            best_k = k;
          }
        }
      }
    }
    if (best_f < 0) {
      nodes[static_cast<std::size_t>(id)].scores = one_hot(labels, leaf_y);
      objective += leaf_g;
      return id;
    }
    std::vector<std::size_t> li, ri;
    for (std::size_t s : idx) {
      const auto c = static_cast<std::size_t>(samples[s].cell[static_cast<std::size_t>(best_f)]);
      (c <= best_k ? li : ri).push_back(s);
    }
    nodes[static_cast<std::size_t>(id)].feature = best_f;
    nodes[static_cast<std::size_t>(id)].threshold = domain.levels(static_cast<std::size_t>(best_f))[best_k];
    const int l = grow(li, depth + 1, remaining - 1);
    const int r = grow(ri, depth + 1, remaining - 1);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

}  // namespace

PricingOutcome price_heuristic(const DualVector& duals, const DiscreteDomain& domain,
                               const TreeFamilyConfig& config) {
  if (config.max_depth < 0) throw Error(ErrorCode::kInvalidArgument, "negative tree depth");
  const auto gain = leaf_gains(duals);
  Grower g{gain, *duals.samples, domain, duals.label_count, {}, 0.0};
  std::vector<std::size_t> all(duals.samples->size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  g.grow(all, 0, config.max_depth);
  return finish(Tree(std::move(g.nodes)), g.objective, duals, Exactness::kHeuristic);
}

}  // namespace pace
