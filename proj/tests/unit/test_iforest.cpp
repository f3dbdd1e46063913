#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pace/error.hpp"
#include "pace/iforest.hpp"
#include "support/synth.hpp"

using namespace pace;

namespace {

// c(s) = 2 H(s-1) - 2(s-1)/s with H(i) = ln i + Euler-Mascheroni, evaluated directly.
double reference_c(int s) {
  if (s <= 1) return 0.0;
  if (s == 2) return 1.0;
  const double h = std::log(s - 1.0) + 0.5772156649015329;
  return 2.0 * h - 2.0 * (s - 1.0) / s;
}

Tree iso_leaf(int depth, int support) { return Tree::leaf({}, depth, support); }

}  // namespace

TEST_CASE("correction values") {
  CHECK(correction(1) == 0.0);
  CHECK(correction(2) == 1.0);
  CHECK(correction(3) == doctest::Approx(1.207393).epsilon(1e-6));
  CHECK(correction(256) == doctest::Approx(10.244772).epsilon(1e-6));
  for (int s : {3, 10, 100, 256, 5000}) CHECK(correction(s) == doctest::Approx(reference_c(s)));
  double prev = correction(2);
  for (int s = 3; s <= 1000000; s += (s < 1000 ? 1 : 997)) {
    const double c = correction(s);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("path length and plausibility") {
  CHECK(path_length(iso_leaf(3, 2), std::vector<double>{0}) == 4.0);
  CHECK(path_length(iso_leaf(5, 1), std::vector<double>{0}) == 5.0);
  CHECK(path_length(iso_leaf(0, 1), std::vector<double>{0}) == 0.0);

  IsolationForest f;
  f.feature_count = 1;
  f.trees = {iso_leaf(3, 2)};
  CHECK(plausibility(f, std::vector<double>{0}) == 4.0);
  f.trees.push_back(iso_leaf(3, 2));
  CHECK(plausibility(f, std::vector<double>{0}) == 8.0);
  f.trees = {iso_leaf(0, 1), iso_leaf(0, 1)};
  CHECK(plausibility(f, std::vector<double>{0}) == 0.0);

  IsolationForest empty;
  CHECK_THROWS_AS(plausibility(empty, std::vector<double>{0}), Error);
}

TEST_CASE("training") {
  IForestParams p;
  p.n_trees = 5;
  p.seed = 1;
  const std::vector<std::vector<double>> same(20, std::vector<double>{1.0, 2.0});
  const auto f = train_iforest(same, p);
  REQUIRE(f.trees.size() == 5);
  for (const auto& t : f.trees) CHECK(t.size() == 1);
  CHECK(plausibility(f, std::vector<double>{1.0, 2.0}) == doctest::Approx(5 * correction(20)));

  p.n_trees = 0;
  CHECK_THROWS_AS(train_iforest(same, p), Error);
  p.n_trees = 3;
  CHECK_THROWS_AS(train_iforest({}, p), Error);

  pace::testing::Rng rng(4);
  std::vector<std::vector<double>> data;
  for (int k = 0; k < 200; ++k) {
    const double cx = k % 2 ? 0.0 : 10.0;
    data.push_back({cx + pace::testing::uniform(rng, -1, 1), cx + pace::testing::uniform(rng, -1, 1)});
  }
  data.push_back({40.0, -30.0});
  p.n_trees = 100;
  p.subsample_size = 64;
  p.seed = 7;
  const auto g = train_iforest(data, p);
  for (const auto& t : g.trees) CHECK(t.max_depth() <= 6);
  std::vector<double> inlier;
  for (std::size_t k = 0; k + 1 < data.size(); ++k) inlier.push_back(plausibility(g, data[k]));
  std::sort(inlier.begin(), inlier.end());
  CHECK(plausibility(g, data.back()) < inlier[inlier.size() / 10]);
}

TEST_CASE("resolve delta") {
  IsolationForest f;
  f.subsample_size = 256;
  f.feature_count = 1;
  f.trees = {iso_leaf(0, 1)};
  using P = PlausibilityThreshold::Provenance;
  CHECK(resolve_delta({P::kScaled, 0.5}, f, {}).delta_raw == doctest::Approx(correction(256)).epsilon(1e-9));
  CHECK(resolve_delta({P::kRaw, 7.25}, f, {}).delta_raw == 7.25);
  const std::vector<double> scores{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(resolve_delta({P::kFraction, 0.0}, f, scores).delta_raw == 0.0);
  CHECK_THROWS_AS(resolve_delta({P::kScaled, 0.0}, f, {}), Error);

  pace::testing::Rng rng(2);
  std::vector<double> many;
  for (int k = 0; k < 503; ++k) many.push_back(std::round(pace::testing::uniform(rng, 0, 40) * 10) / 10);
  for (double frac : {0.05, 0.1, 0.2, 0.5, 0.9}) {
    const double d = resolve_delta({P::kFraction, frac}, f, many).delta_raw;
    const auto flagged = std::count_if(many.begin(), many.end(), [&](double s) { return s < d; });
    const double expect = std::floor(frac * static_cast<double>(many.size()));
    // Ties in the rounded scores can move the count by the size of a tie group.
    CHECK(std::fabs(static_cast<double>(flagged) - expect) <= 4.0);
  }
  std::vector<double> distinct;
  for (int k = 0; k < 100; ++k) distinct.push_back(k * 0.37 + 1.0);
  std::shuffle(distinct.begin(), distinct.end(), rng);
  for (double frac : {0.1, 0.25, 0.5}) {
    const double d = resolve_delta({P::kFraction, frac}, f, distinct).delta_raw;
    const auto flagged = std::count_if(distinct.begin(), distinct.end(), [&](double s) { return s < d; });
    CHECK(std::fabs(static_cast<double>(flagged) - std::floor(frac * 100.0)) <= 1.0);
  }
  const double all = resolve_delta({P::kFraction, 1.0}, f, distinct).delta_raw;
  CHECK(std::count_if(distinct.begin(), distinct.end(), [&](double s) { return s < all; }) == 100);
}
