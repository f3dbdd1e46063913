#include <doctest.h>

#include "pace/master.hpp"
#include "pace/pricing.hpp"
#include "support/synth.hpp"

using namespace pace;
using pace::testing::Rng;

namespace {

struct Fixture {
  std::vector<LabeledSample> samples;
  std::vector<MasterRow> rows;
  DualVector duals;
  DiscreteDomain domain;

  Fixture(std::vector<LabeledSample> s, std::vector<double> mu, int labels, DiscreteDomain d)
      : samples(std::move(s)), domain(std::move(d)) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (Label y = 0; y < labels; ++y) {
        if (y != samples[i].y_orig) rows.push_back({i, y});
      }
    }
    duals.samples = &samples;
    duals.rows = &rows;
    duals.mu = std::move(mu);
    duals.label_count = labels;
  }
};

// Pricing objective evaluated row by row.
double objective(const Tree& t, const Fixture& f) {
  double s = 0.0;
  for (std::size_t r = 0; r < f.rows.size(); ++r) {
    const auto& smp = f.samples[f.rows[r].sample];
    const auto& sc = t.scores(smp.raw);
    s += f.duals.mu[r] * (sc[static_cast<std::size_t>(smp.y_orig)] - sc[static_cast<std::size_t>(f.rows[r].rival)]);
  }
  return s;
}

Fixture separable(std::vector<double> levels) {
  DiscreteDomain d(std::vector<std::vector<double>>{levels});
  return Fixture({{{0.0}, d.encode(std::vector<double>{0.0}), 0}, {{1.0}, d.encode(std::vector<double>{1.0}), 1}},
                 {1.0, 1.0}, 2, d);
}

std::vector<double> onehot(int labels, int y) {
  std::vector<double> v(static_cast<std::size_t>(labels), 0.0);
  v[static_cast<std::size_t>(y)] = 1.0;
  return v;
}

Fixture random_fixture(Rng& rng, const DiscreteDomain& d, int labels, int n) {
  std::vector<LabeledSample> s;
  for (int k = 0; k < n; ++k) {
    std::vector<int> cell;
    for (std::size_t i = 0; i < d.feature_count(); ++i) cell.push_back(pace::testing::uniform_int(rng, 0, d.interval_count(i) - 1));
    s.push_back({d.representative(cell), cell, pace::testing::uniform_int(rng, 0, labels - 1)});
  }
  std::vector<double> mu(static_cast<std::size_t>(n * (labels - 1)));
  for (double& m : mu) m = pace::testing::uniform(rng, 0, 1) < 0.3 ? 0.0 : pace::testing::uniform(rng, 0, 2);
  return Fixture(std::move(s), std::move(mu), labels, d);
}

}  // namespace

TEST_CASE("reduced cost examples") {
  MasterProblem m(2, 1);
  m.add_column(Tree::leaf({2, 0}));
  m.add_sample({{0.0}, {0}, 0});
  const auto sol = m.solve();
  const auto duals = DualVector::from(m, sol, 2);
  CHECK(duals.mu[0] == doctest::Approx(0.5));
  CHECK(reduced_cost(Tree::leaf({4, 0}), duals) == doctest::Approx(-1.0));
  CHECK(reduced_cost(m.columns()[0], duals) == doctest::Approx(0.0).epsilon(1e-9));

  auto zero = duals;
  zero.mu.assign(zero.mu.size(), 0.0);
  CHECK(reduced_cost(Tree::leaf({4, 0}), zero) == 1.0);
}

TEST_CASE("basic columns price at zero") {
  Rng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = pace::testing::random_domain(rng, 2, 4);
    const auto e = pace::testing::random_ensemble(rng, d, 6, 2, 3, LeafMode::kProbability);
    MasterProblem m(3, 2);
    for (const auto& t : e.trees) m.add_column(t);
    for (const auto& cell : pace::testing::all_cells(d)) {
      const auto raw = d.representative(cell);
      const Label y = vote(e, raw);
      if (margin(e, raw, y, (y + 1) % 3) > 0 && margin(e, raw, y, (y + 2) % 3) > 0) m.add_sample({raw, cell, y});
    }
    if (m.row_count() == 0) continue;
    const auto sol = m.solve();
    const auto duals = DualVector::from(m, sol, 3);
    for (std::size_t c = 0; c < m.column_count(); ++c) {
      const double rc = reduced_cost(m.columns()[c], duals);
      CHECK(rc >= -1e-7);
      if (sol.weights[c] > 1e-9) CHECK(rc == doctest::Approx(0.0).epsilon(1e-7));
    }
  }
}

TEST_CASE("exact stump pricer examples") {
  auto f = separable({0.5});
  auto out = price_exact_stumps(f.duals, f.domain);
  REQUIRE(out.learner);
  CHECK(out.exactness == Exactness::kExact);
  CHECK(out.objective == doctest::Approx(2.0));
  CHECK(out.reduced_cost == doctest::Approx(-1.0));
  CHECK(is_improving(out));
  CHECK(out.learner->scores(std::vector<double>{0.0}) == onehot(2, 0));
  CHECK(out.learner->scores(std::vector<double>{1.0}) == onehot(2, 1));

  f.duals.mu = {0.0, 0.0};
  out = price_exact_stumps(f.duals, f.domain);
  CHECK(out.reduced_cost == 1.0);
  CHECK_FALSE(is_improving(out));

  // No levels: each constant tree helps one sample exactly as much as it hurts the other.
  auto g = separable({});
  out = price_exact_stumps(g.duals, g.domain);
  REQUIRE(out.learner);
  CHECK(out.learner->size() == 1);
  CHECK(out.objective == doctest::Approx(0.0));
  CHECK(out.reduced_cost == doctest::Approx(1.0));
}

TEST_CASE("greedy pricer examples") {
  auto f = separable({0.5});
  auto out = price_heuristic(f.duals, f.domain, {1});
  REQUIRE(out.learner);
  CHECK(out.exactness == Exactness::kHeuristic);
  CHECK(out.reduced_cost == doctest::Approx(-1.0));
  CHECK(out.learner->scores(std::vector<double>{1.0}) == onehot(2, 1));

  f.duals.mu = {0.0, 0.0};
  out = price_heuristic(f.duals, f.domain, {2});
  REQUIRE(out.learner);
  CHECK(out.learner->size() == 1);
  CHECK(out.reduced_cost == 1.0);
}

TEST_CASE("is_improving tolerance") {
  PricingOutcome o;
  o.reduced_cost = -1.0;
  CHECK(is_improving(o));
  o.reduced_cost = 0.0;
  CHECK_FALSE(is_improving(o));
  o.reduced_cost = -1e-9;
  CHECK_FALSE(is_improving(o, 1e-6));
}

TEST_CASE("exact pricer matches enumeration and dominates greedy") {
  Rng rng(31);
  for (int rep = 0; rep < 60; ++rep) {
    const int labels = pace::testing::uniform_int(rng, 2, 4);
    const auto d = pace::testing::random_domain(rng, 3, 4);
    const auto f = random_fixture(rng, d, labels, pace::testing::uniform_int(rng, 1, 12));
    const auto exact = price_exact_stumps(f.duals, d);
    REQUIRE(exact.learner);
    CHECK(objective(*exact.learner, f) == doctest::Approx(exact.objective));
    CHECK(reduced_cost(*exact.learner, f.duals) == doctest::Approx(exact.reduced_cost));

    double best = -1e300;
    for (Label y = 0; y < labels; ++y) best = std::max(best, objective(Tree::leaf(onehot(labels, y)), f));
    for (std::size_t i = 0; i < d.feature_count(); ++i) {
      for (double a : d.levels(i)) {
        for (Label l = 0; l < labels; ++l) {
          for (Label r = 0; r < labels; ++r) {
            best = std::max(best, objective(Tree::stump(static_cast<int>(i), a, onehot(labels, l), onehot(labels, r)), f));
          }
        }
      }
    }
    CHECK(exact.objective == doctest::Approx(best));

    const auto greedy = price_heuristic(f.duals, d, {1});
    REQUIRE(greedy.learner);
    CHECK(exact.reduced_cost <= greedy.reduced_cost + 1e-9);
    CHECK(greedy.reduced_cost == doctest::Approx(reduced_cost(*greedy.learner, f.duals)));
    const auto deeper = price_heuristic(f.duals, d, {3});
    REQUIRE(deeper.learner);
    CHECK(deeper.learner->max_depth() <= 3);
    CHECK(deeper.reduced_cost <= greedy.reduced_cost + 1e-9);
    CHECK_NOTHROW(d.check_closed(*deeper.learner));
  }
}

TEST_CASE("binary pricing objective is affine in the true-label score") {
  Rng rng(41);
  for (int rep = 0; rep < 40; ++rep) {
    const auto d = pace::testing::random_domain(rng, 2, 4);
    const auto f = random_fixture(rng, d, 2, 10);
    const auto out = price_heuristic(f.duals, d, {2});
    REQUIRE(out.learner);
    double weighted_true = 0.0, total = 0.0;
    for (std::size_t r = 0; r < f.rows.size(); ++r) {
      const auto& s = f.samples[f.rows[r].sample];
      weighted_true += f.duals.mu[r] * out.learner->scores(s.raw)[static_cast<std::size_t>(s.y_orig)];
      total += f.duals.mu[r];
    }
    // One-hot leaves: h_{y} - h_{other} = 2 h_{y} - 1.
    CHECK(out.objective == doctest::Approx(2 * weighted_true - total));
  }
}

TEST_CASE("improving learners decrease the master unless the duals are degenerate") {
  Rng rng(57);
  int improved = 0, stalled = 0;
  for (int rep = 0; rep < 30; ++rep) {
    const auto d = pace::testing::random_domain(rng, 2, 4);
    const auto e = pace::testing::random_ensemble(rng, d, 3, 2, 2, LeafMode::kProbability);
    MasterProblem m(2, 2);
    for (const auto& t : e.trees) m.add_column(t);
    for (const auto& cell : pace::testing::all_cells(d)) {
      const auto raw = d.representative(cell);
      const Label y = vote(e, raw);
      if (margin(e, raw, y, 1 - y) > 0) m.add_sample({raw, cell, y});
    }
    if (m.row_count() == 0) continue;
    auto sol = m.solve();
    for (int it = 0; it < 10; ++it) {
      const auto out = price_exact_stumps(DualVector::from(m, sol, 2), d);
      if (!is_improving(out)) break;
      m.add_column(*out.learner);
      const auto next = m.solve();
      CHECK(next.objective <= sol.objective + 1e-9);
      if (next.objective < sol.objective - 1e-9) {
        ++improved;
      } else {
        // No progress only under dual degeneracy: the new duals are optimal for
        // the old master too and no longer price the learner as improving.
        ++stalled;
        CHECK(next.dual_objective == doctest::Approx(sol.objective));
        CHECK(reduced_cost(*out.learner, DualVector::from(m, next, 2)) >= -1e-9);
      }
      sol = next;
    }
  }
  CHECK(improved > 5 * stalled);
}
