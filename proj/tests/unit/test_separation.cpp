#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pace/error.hpp"
#include "pace/separation.hpp"
#include "support/synth.hpp"

using namespace pace;
using pace::testing::Rng;

namespace {

WeightedEnsemble single(Tree t, double w = 1.0, int labels = 2) {
  WeightedEnsemble e;
  e.trees = {std::move(t)};
  e.weights = {w};
  e.label_count = labels;
  e.feature_count = 1;
  return e;
}

const DiscreteDomain kHalf(std::vector<std::vector<double>>{{0.5}});

WeightedEnsemble stump_model() { return single(Tree::stump(0, 0.5, {1, 0}, {0, 1})); }
WeightedEnsemble constant_zero() { return single(Tree::leaf({1, 0})); }

// Current ensemble drawn either independently or as a reweighted subset of the original.
WeightedEnsemble random_current(Rng& rng, const WeightedEnsemble& orig, const DiscreteDomain& d) {
  if (pace::testing::uniform_int(rng, 0, 2) == 0) {
    return pace::testing::random_ensemble(rng, d, pace::testing::uniform_int(rng, 1, 4), 2, orig.label_count,
                                          orig.leaf_mode);
  }
  WeightedEnsemble c = orig;
  for (double& w : c.weights) {
    const int k = pace::testing::uniform_int(rng, 0, 3);
    w = k == 0 ? 0.0 : std::round(w * (0.5 + k * 0.3) * 100.0) / 100.0;
  }
  return c;
}

}  // namespace

TEST_CASE("instance construction") {
  const IsolationForest none;
  auto inst = build_instance(stump_model(), stump_model(), none, kHalf, 0, 0, 0, 1);
  CHECK(inst.constraints.size() == 2);
  CHECK(inst.eta_scaled == 0);
  CHECK(inst.constraints[inst.disagreement].role == TreeRole::kCurrent);

  WeightedEnsemble three = single(Tree::leaf({0.2, 0.5, 0.3}), 1.0, 3);
  const auto i3 = build_instance(three, three, none, kHalf, 0, 0, 1, 0);
  CHECK(std::count_if(i3.constraints.begin(), i3.constraints.end(),
                      [](const SepConstraint& c) { return c.role == TreeRole::kOriginal; }) == 2);

  // A forest with a zero threshold adds no constraint.
  IsolationForest f;
  f.feature_count = 1;
  f.trees = {Tree::leaf({}, 2, 3)};
  CHECK(build_instance(stump_model(), constant_zero(), f, kHalf, 0, 0, 1, 0).constraints.size() == 2);
  CHECK(build_instance(stump_model(), constant_zero(), f, kHalf, 0, 1.0, 1, 0).constraints.size() == 3);
  CHECK_THROWS_AS(build_instance(stump_model(), constant_zero(), f, kHalf, 0, 0, 1, 1), Error);

  std::ostringstream out;
  dump_instance(inst, out);
  CHECK_FALSE(out.str().empty());
}

TEST_CASE("stump against constant") {
  const IsolationForest none;
  const auto inst = build_instance(stump_model(), constant_zero(), none, kHalf, 0, 0, 1, 0);
  const auto w = find_witness(inst);
  REQUIRE(w.found());
  CHECK(w.cell == std::vector<int>{1});
  CHECK(kHalf.representative(w.cell)[0] == doctest::Approx(1.5));
  CHECK(verify_cell(inst, w.cell));

  const auto b = brute_force_oracle(inst);
  REQUIRE(b.found());
  CHECK(b.cell == std::vector<int>{1});

  const auto m = find_max_disagreement(inst);
  REQUIRE(m.found());
  CHECK(m.cell == std::vector<int>{1});
  REQUIRE(m.objective);
  CHECK(format_int128(*m.objective) == "1000000000");

  // Doubling the current weights doubles the optimum.
  const auto doubled = build_instance(stump_model(), single(Tree::leaf({1, 0}), 2.0), none, kHalf, 0, 0, 1, 0);
  const auto m2 = find_max_disagreement(doubled);
  REQUIRE(m2.found());
  CHECK(m2.cell == m.cell);
  CHECK(*m2.objective == 2 * *m.objective);

  // The reverse pair has no witness: where the stump says 0 the constant agrees.
  CHECK_FALSE(find_witness(build_instance(stump_model(), constant_zero(), none, kHalf, 0, 0, 0, 1)).found());

  // The original margin never exceeds 1.
  for (const auto& p : find_all_pairs(stump_model(), constant_zero(), none, kHalf, 1.5, 0)) {
    CHECK_FALSE(p.result.found());
  }
}

TEST_CASE("identical ensembles are unsat") {
  Rng rng(13);
  const IsolationForest none;
  for (int rep = 0; rep < 30; ++rep) {
    const int labels = pace::testing::uniform_int(rng, 2, 3);
    const auto d = pace::testing::random_domain(rng, 3, 3);
    const auto e = pace::testing::random_ensemble(rng, d, 4, 3, labels, rep % 2 ? LeafMode::kOneHot : LeafMode::kProbability);
    const auto pairs = find_all_pairs(e, e, none, d, 0, 0);
    CHECK(pairs.size() == static_cast<std::size_t>(labels * (labels - 1)));
    for (const auto& p : pairs) {
      CHECK_FALSE(p.result.found());
      const auto inst = build_instance(e, e, none, d, 0, 0, p.y_orig, p.y_alt);
      CHECK_FALSE(find_max_disagreement(inst).found());
    }
  }
}

TEST_CASE("pair ordering and threads") {
  Rng rng(14);
  const IsolationForest none;
  const auto d = pace::testing::random_domain(rng, 3, 4);
  const auto e = pace::testing::random_ensemble(rng, d, 5, 3, 3, LeafMode::kProbability);
  const auto c = pace::testing::random_ensemble(rng, d, 2, 2, 3, LeafMode::kProbability);
  const auto serial = find_all_pairs(e, c, none, d, 0, 0);
  PairSearchOptions opt;
  opt.threads = 4;
  const auto par = find_all_pairs(e, c, none, d, 0, 0, opt);
  REQUIRE(serial.size() == 6);
  REQUIRE(par.size() == 6);
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(serial[k].y_orig == par[k].y_orig);
    CHECK(serial[k].y_alt == par[k].y_alt);
    CHECK(serial[k].result.found() == par[k].result.found());
    CHECK(serial[k].result.cell == par[k].result.cell);
    if (k) CHECK(std::make_pair(serial[k - 1].y_orig, serial[k - 1].y_alt) < std::make_pair(serial[k].y_orig, serial[k].y_alt));
  }
}

TEST_CASE("empty domain checks one cell") {
  const DiscreteDomain flat(std::vector<std::vector<double>>(2));
  const auto a = single(Tree::leaf({0.2, 0.8}));
  const auto b = single(Tree::leaf({0.9, 0.1}));
  const IsolationForest none;
  const auto inst = build_instance(a, b, none, flat, 0, 0, 1, 0);
  const auto r = brute_force_oracle(inst);
  REQUIRE(r.found());
  CHECK(r.cell == std::vector<int>{0, 0});
  CHECK(find_witness(inst).found());
}

TEST_CASE("node budget") {
  Rng rng(15);
  const auto d = pace::testing::random_domain(rng, 4, 5);
  const auto e = pace::testing::random_ensemble(rng, d, 6, 3, 2, LeafMode::kProbability);
  const IsolationForest none;
  const auto inst = build_instance(e, e, none, d, 0, 0, 0, 1);
  SearchOptions opt;
  opt.node_budget = 1;
  CHECK_THROWS_AS(find_witness(inst, opt), Error);
}

TEST_CASE("search agrees with enumeration and witnesses decode soundly") {
  Rng rng(23);
  int witnesses = 0, unsat = 0;
  for (int rep = 0; rep < 150; ++rep) {
    const int labels = pace::testing::uniform_int(rng, 2, 3);
    const int features = pace::testing::uniform_int(rng, 1, 4);
    const auto d = pace::testing::random_domain(rng, features, 5);
    const auto mode = rep % 3 == 0 ? LeafMode::kOneHot : LeafMode::kProbability;
    const auto orig = pace::testing::random_ensemble(rng, d, pace::testing::uniform_int(rng, 1, 6), 3, labels, mode);
    const auto cur = random_current(rng, orig, d);
    IsolationForest forest;
    double delta = 0.0;
    if (rep % 2) {
      forest = pace::testing::random_forest(rng, d, pace::testing::uniform_int(rng, 1, 4), 3);
      std::vector<double> scores;
      for (const auto& cell : pace::testing::all_cells(d)) scores.push_back(plausibility(forest, d.representative(cell)));
      std::sort(scores.begin(), scores.end());
      delta = scores[scores.size() * static_cast<std::size_t>(pace::testing::uniform_int(rng, 0, 3)) / 4];
    }
    const double eta = std::vector<double>{0.0, 0.05, 0.2, 0.5}[static_cast<std::size_t>(rep % 4)];
    const Label yo = pace::testing::uniform_int(rng, 0, labels - 1);
    const Label ya = (yo + pace::testing::uniform_int(rng, 1, labels - 1)) % labels;
    const auto inst = build_instance(orig, cur, forest, d, eta, delta, yo, ya);
    const auto w = find_witness(inst);
    const auto b = brute_force_oracle(inst);
    const auto m = find_max_disagreement(inst);
    REQUIRE(w.found() == b.found());
    CHECK(m.found() == b.found());
    if (!w.found()) {
      ++unsat;
      continue;
    }
    ++witnesses;
    CHECK(verify_cell(inst, w.cell));
    CHECK(verify_cell(inst, m.cell));

    // Decode and check in plain doubles with the rounding slack of the integer model.
    const auto raw = d.representative(w.cell);
    const double slack = 1e-9 * static_cast<double>(orig.size() + cur.size() + forest.trees.size() + 1);
    CHECK(vote(orig, raw) == yo);
    for (Label r = 0; r < labels; ++r) {
      if (r != yo) CHECK(margin(orig, raw, yo, r) > eta - slack);
    }
    CHECK(inst.current.vote(raw) != yo);
    if (delta > 0.0) CHECK(plausibility(forest, raw) >= delta - slack);

    // The max-disagreement optimum matches the enumerated optimum.
    __int128 best = 0;
    bool any = false;
    for (const auto& cell : pace::testing::all_cells(d)) {
      if (!verify_cell(inst, cell)) continue;
      const auto v = constraint_values(inst, cell)[inst.disagreement];
      if (!any || v > best) best = v;
      any = true;
    }
    REQUIRE(m.objective);
    CHECK(format_int128(*m.objective) == format_int128(best));
  }
  CHECK(witnesses > 20);
  CHECK(unsat > 20);
}
