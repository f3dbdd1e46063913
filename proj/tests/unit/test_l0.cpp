#include <doctest.h>

#include <cmath>

#include "pace/l0_prune.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace pace;
using pace::testing::Rng;

namespace {

// columns[j][r] from a row-major matrix.
std::vector<std::vector<double>> transpose(const std::vector<std::vector<double>>& rows, std::size_t n) {
  std::vector<std::vector<double>> cols(n, std::vector<double>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < n; ++c) cols[c][r] = rows[r][c];
  }
  return cols;
}

// Rows are repaired against a hidden nonnegative weight vector so the instance is feasible.
std::vector<std::vector<double>> planted(Rng& rng, std::size_t m, std::size_t n) {
  std::vector<double> hidden(n, 0.0);
  std::vector<std::size_t> on;
  for (std::size_t j = 0; j < n; ++j) {
    if (pace::testing::uniform_int(rng, 0, 1) || (j + 1 == n && on.empty())) {
      hidden[j] = 0.5 * pace::testing::uniform_int(rng, 1, 4);
      on.push_back(j);
    }
  }
  std::vector<std::vector<double>> rows(m, std::vector<double>(n));
  for (auto& row : rows) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = 0.5 * pace::testing::uniform_int(rng, -2, 2);
      s += row[j] * hidden[j];
    }
    if (s < 1.0) {
      const std::size_t j = on[static_cast<std::size_t>(pace::testing::uniform_int(rng, 0, static_cast<int>(on.size()) - 1))];
      row[j] += std::ceil(2.0 * (1.0 - s) / hidden[j]) / 2.0;
    }
  }
  return rows;
}

}  // namespace

TEST_CASE("duplicates collapse to one") {
  const std::vector<std::vector<double>> cols(3, std::vector<double>{1.0, 0.5, 2.0});
  const auto r = solve_l0(cols, 3);
  CHECK(r.support.size() == 1);
  CHECK(r.optimal);
  CHECK(verify_support(cols, 3, r.support, r.weights));
}

TEST_CASE("pair needed") {
  // Each tree covers two of three rows; any two cover all.
  const std::vector<std::vector<double>> cols{{1, 1, 0}, {1, 0, 1}, {0, 1, 1}};
  CHECK(pace::testing::brute_force_min_support(transpose(cols, 3), 3) == 2);
  const auto r = solve_l0(cols, 3);
  REQUIRE(r.support.size() == 2);
  CHECK(verify_support(cols, 3, r.support, r.weights));
  // Remove one of the two: some row is left uncovered.
  for (std::size_t drop = 0; drop < 2; ++drop) {
    std::vector<std::size_t> one{r.support[1 - drop]};
    CHECK_FALSE(verify_support(cols, 3, one, r.weights));
  }
}

TEST_CASE("no rows") {
  const std::vector<std::vector<double>> cols{{}, {}};
  const auto r = solve_l0(cols, 0);
  CHECK(r.support.empty());
  CHECK(r.weights == std::vector<double>{0, 0});
  CHECK(verify_support(cols, 0, {0}, {0.0, 0.0}));
}

TEST_CASE("l0 matches subset enumeration") {
  Rng rng(71);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = static_cast<std::size_t>(pace::testing::uniform_int(rng, 2, 9));
    const std::size_t m = static_cast<std::size_t>(pace::testing::uniform_int(rng, 1, 10));
    const auto rows = planted(rng, m, n);
    const auto cols = transpose(rows, n);
    const auto r = solve_l0(cols, m);
    CHECK(r.optimal);
    CHECK(r.support.size() == pace::testing::brute_force_min_support(rows, n));
    CHECK(verify_support(cols, m, r.support, r.weights));
    CHECK(r.support.size() <= r.l1_support_size);
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::binary_search(r.support.begin(), r.support.end(), j)) CHECK(r.weights[j] == 0.0);
    }

    // Dropping a row never makes the support larger.
    if (m > 1) {
      auto fewer = rows;
      fewer.erase(fewer.begin() + pace::testing::uniform_int(rng, 0, static_cast<int>(m) - 1));
      CHECK(solve_l0(transpose(fewer, n), m - 1).support.size() <= r.support.size());
    }
  }
}

TEST_CASE("budgets keep a feasible incumbent") {
  Rng rng(72);
  const auto rows = planted(rng, 40, 14);
  const auto cols = transpose(rows, 14);
  L0Options opt;
  opt.node_budget = 2;
  const auto r = solve_l0(cols, 40, opt);
  CHECK(verify_support(cols, 40, r.support, r.weights));
  const auto exact = solve_l0(cols, 40);
  CHECK(exact.support.size() <= r.support.size());
  if (!r.optimal) CHECK(r.nodes >= 2);
}

TEST_CASE("hints seed the incumbent") {
  const std::vector<std::vector<double>> cols{{1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
  L0Options opt;
  opt.hints = {{3}, {0, 1, 2}};
  const auto r = solve_l0(cols, 3, opt);
  CHECK(r.support == std::vector<std::size_t>{3});
  opt.hints = {{7}};
  CHECK_THROWS(solve_l0(cols, 3, opt));
}
