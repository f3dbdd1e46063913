#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace pace::testing {

namespace {

constexpr double kEps = 1e-9;

// Gaussian elimination with partial pivoting; false if singular.
bool solve_square(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    }
    if (std::fabs(a[p][c]) < 1e-12) return false;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return true;
}

// Recursively choose `need` constraints from [from, total).
void choose(std::size_t from, std::size_t total, std::size_t need, std::vector<std::size_t>& pick,
            const std::vector<std::vector<double>>& rows, std::size_t cols, double& best) {
  if (need == 0) {
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    for (std::size_t k : pick) {
      if (k < rows.size()) {
        a.push_back(rows[k]);
        b.push_back(1.0);
      } else {
        std::vector<double> unit(cols, 0.0);
        unit[k - rows.size()] = 1.0;
        a.push_back(unit);
        b.push_back(0.0);
      }
    }
    std::vector<double> x;
    if (!solve_square(a, b, x)) return;
    double obj = 0.0;
    for (double v : x) {
      if (v < -kEps) return;
      obj += v;
    }
    for (const auto& row : rows) {
      double s = 0.0;
      for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
      if (s < 1.0 - 1e-7) return;
    }
    best = std::min(best, obj);
    return;
  }
  if (total - from < need) return;
  for (std::size_t k = from; k < total; ++k) {
    pick.push_back(k);
    choose(k + 1, total, need - 1, pick, rows, cols, best);
    pick.pop_back();
  }
}

// Dense tableau simplex. t has m constraint rows followed by the objective row;
// last column is the rhs. basis[r] is the basic variable of row r.
// Minimises the objective row as reduced costs with Bland's rule.
// Returns false if unbounded.
bool simplex(std::vector<std::vector<double>>& t, std::vector<std::size_t>& basis, std::size_t nvars,
             const std::vector<bool>& allowed) {
  const std::size_t m = basis.size();
  const std::size_t rhs = t[0].size() - 1;
  for (int guard = 0; guard < 100000; ++guard) {
    std::size_t enter = nvars;
    for (std::size_t j = 0; j < nvars; ++j) {
      if (allowed[j] && t[m][j] < -kEps) {
        enter = j;
        break;
      }
    }
    if (enter == nvars) return true;
    std::size_t leave = m;
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m; ++r) {
      if (t[r][enter] > kEps) {
        const double q = t[r][rhs] / t[r][enter];
        if (q < ratio - kEps || (std::fabs(q - ratio) <= kEps && leave < m && basis[r] < basis[leave])) {
          ratio = q;
          leave = r;
        }
      }
    }
    if (leave == m) return false;
    const double piv = t[leave][enter];
    for (double& v : t[leave]) v /= piv;
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == leave) continue;
      const double f = t[r][enter];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k <= rhs; ++k) t[r][k] -= f * t[leave][k];
    }
    basis[leave] = enter;
  }
  return true;
}

}  // namespace

std::optional<double> vertex_enumeration_lp(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pick;
  choose(0, rows.size() + cols, cols, pick, rows, cols, best);
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

std::optional<double> textbook_lp(const std::vector<std::vector<double>>& rows, std::size_t cols,
                                  std::vector<double>* weights) {
  const std::size_t m = rows.size();
  if (m == 0) {
    if (weights) weights->assign(cols, 0.0);
    return 0.0;
  }
  // Variables: w (cols), surplus s (m), artificial a (m).
  const std::size_t nvars = cols + 2 * m;
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(nvars + 1, 0.0));
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < cols; ++c) t[r][c] = rows[r][c];
    t[r][cols + r] = -1.0;
    t[r][cols + m + r] = 1.0;
    t[r][nvars] = 1.0;
    basis[r] = cols + m + r;
  }
  // Phase 1 objective sum a, expressed in the nonbasic variables.
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t k = 0; k <= nvars; ++k) t[m][k] -= t[r][k];
  }
  for (std::size_t r = 0; r < m; ++r) t[m][cols + m + r] = 0.0;
  std::vector<bool> allowed(nvars, true);
  simplex(t, basis, nvars, allowed);
  if (-t[m][nvars] > 1e-7) return std::nullopt;
  // Drive remaining artificials out of the basis where possible.
  for (std::size_t r = 0; r < m; ++r) {
    if (basis[r] < cols + m) continue;
    for (std::size_t j = 0; j < cols + m; ++j) {
      if (std::fabs(t[r][j]) > 1e-9) {
        const double piv = t[r][j];
        for (double& v : t[r]) v /= piv;
        for (std::size_t q = 0; q <= m; ++q) {
          if (q == r) continue;
          const double f = t[q][j];
          if (f == 0.0) continue;
          for (std::size_t k = 0; k <= nvars; ++k) t[q][k] -= f * t[r][k];
        }
        basis[r] = j;
        break;
      }
    }
  }
  for (std::size_t j = cols + m; j < nvars; ++j) allowed[j] = false;
  // Phase 2 objective sum w.
  std::fill(t[m].begin(), t[m].end(), 0.0);
  for (std::size_t c = 0; c < cols; ++c) t[m][c] = 1.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double f = t[m][basis[r]];
    if (f == 0.0) continue;
    for (std::size_t k = 0; k <= nvars; ++k) t[m][k] -= f * t[r][k];
  }
  simplex(t, basis, nvars, allowed);
  std::vector<double> w(cols, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (basis[r] < cols) w[basis[r]] = t[r][nvars];
  }
  double obj = 0.0;
  for (double v : w) obj += v;
  if (weights) *weights = w;
  return obj;
}

std::size_t brute_force_min_support(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  for (std::size_t k = 0; k <= cols; ++k) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << cols); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcountll(mask)) != k) continue;
      std::vector<std::vector<double>> sub;
      for (const auto& row : rows) {
        std::vector<double> r;
        for (std::size_t c = 0; c < cols; ++c) {
          if (mask >> c & 1) r.push_back(row[c]);
        }
        sub.push_back(std::move(r));
      }
      if (textbook_lp(sub, k)) return k;
    }
  }
  return cols + 1;
}

}  // namespace pace::testing
