#include "pace/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pace/error.hpp"

namespace pace {

namespace {

void sort_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

DiscreteDomain::DiscreteDomain(std::vector<std::vector<double>> levels)
    : levels_(std::move(levels)) {
  for (auto& l : levels_) {
    for (double a : l) {
      if (!std::isfinite(a)) throw Error(ErrorCode::kModelMalformed, "non-finite split level");
    }
    sort_unique(l);
  }
}

std::uint64_t DiscreteDomain::cell_count() const {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const auto k = static_cast<std::uint64_t>(interval_count(i));
    if (total > std::numeric_limits<std::uint64_t>::max() / k) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    total *= k;
  }
  return total;
}

bool DiscreteDomain::contains(int feature, double threshold) const {
  if (feature < 0 || static_cast<std::size_t>(feature) >= levels_.size()) return false;
  const auto& l = levels_[static_cast<std::size_t>(feature)];
  return std::binary_search(l.begin(), l.end(), threshold);
}

int DiscreteDomain::level_index(int feature, double threshold) const {
  if (feature < 0 || static_cast<std::size_t>(feature) >= levels_.size()) {
    throw Error(ErrorCode::kModelMalformed, "feature " + std::to_string(feature) +
                                                " outside the discrete domain");
  }
  const auto& l = levels_[static_cast<std::size_t>(feature)];
  auto it = std::lower_bound(l.begin(), l.end(), threshold);
  if (it == l.end() || *it != threshold) {
    throw Error(ErrorCode::kModelMalformed,
                "threshold " + std::to_string(threshold) + " on feature " +
                    std::to_string(feature) + " is not a registered split level");
  }
  return static_cast<int>(it - l.begin());
}

std::vector<int> DiscreteDomain::encode(std::span<const double> raw) const {
  if (raw.size() != levels_.size()) {
    throw Error(ErrorCode::kInvalidSample, "sample has " + std::to_string(raw.size()) +
                                               " features, domain has " +
                                               std::to_string(levels_.size()));
  }
  std::vector<int> cell(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (std::isnan(raw[i])) {
      throw Error(ErrorCode::kInvalidSample, "NaN in feature " + std::to_string(i));
    }
    const auto& l = levels_[i];
    // Number of levels strictly below the value: x <= a stays in the lower interval.
    cell[i] = static_cast<int>(std::lower_bound(l.begin(), l.end(), raw[i]) - l.begin());
  }
  return cell;
}

std::vector<double> DiscreteDomain::representative(std::span<const int> cell) const {
  if (cell.size() != levels_.size()) {
    throw Error(ErrorCode::kInvalidCell, "cell length differs from domain feature count");
  }
  std::vector<double> raw(cell.size());
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const auto& l = levels_[i];
    const int k = cell[i];
    if (k < 0 || k > static_cast<int>(l.size())) {
      throw Error(ErrorCode::kInvalidCell, "interval index " + std::to_string(k) +
                                               " out of range for feature " + std::to_string(i));
    }
    if (l.empty()) {
      raw[i] = 0.0;
    } else if (k == 0) {
      raw[i] = l.front();
    } else if (k == static_cast<int>(l.size())) {
      raw[i] = l.back() + 1.0;
    } else {
      raw[i] = 0.5 * (l[static_cast<std::size_t>(k) - 1] + l[static_cast<std::size_t>(k)]);
    }
  }
  return raw;
}

void DiscreteDomain::check_closed(const Tree& tree) const {
  for (const Node& n : tree.nodes()) {
    if (!n.is_leaf()) level_index(n.feature, n.threshold);
  }
}

DomainBuilder::DomainBuilder(int feature_count)
    : levels_(static_cast<std::size_t>(std::max(feature_count, 0))) {}

DomainBuilder& DomainBuilder::add(const Tree& tree) {
  for (const Node& n : tree.nodes()) {
    if (n.is_leaf()) continue;
    if (static_cast<std::size_t>(n.feature) >= levels_.size()) {
      throw Error(ErrorCode::kModelMalformed, "tree splits on feature " +
                                                  std::to_string(n.feature) + " >= n");
    }
    levels_[static_cast<std::size_t>(n.feature)].push_back(n.threshold);
  }
  return *this;
}

DomainBuilder& DomainBuilder::add(const WeightedEnsemble& ens) {
  for (const Tree& t : ens.trees) add(t);
  return *this;
}

DomainBuilder& DomainBuilder::add_levels(int feature, std::span<const double> levels) {
  if (feature < 0 || static_cast<std::size_t>(feature) >= levels_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "feature out of range");
  }
  auto& l = levels_[static_cast<std::size_t>(feature)];
  l.insert(l.end(), levels.begin(), levels.end());
  return *this;
}

DiscreteDomain DomainBuilder::build() const { return DiscreteDomain(levels_); }

DiscreteDomain build_domain(std::span<const Tree> trees, int feature_count) {
  DomainBuilder b(feature_count);
  for (const Tree& t : trees) b.add(t);
  return b.build();
}

double pow10(int digits) {
  double p = 1.0;
  for (int i = 0; i < digits; ++i) p *= 10.0;
  return p;
}

ScaledCoefficient scale(double value, int digits) {
  if (digits < 0 || digits > 18) {
    throw Error(ErrorCode::kInvalidArgument, "scaling digits must be in [0, 18]");
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kScalingOverflow, "cannot scale a non-finite coefficient");
  }
  const double x = value * pow10(digits);
  // 2^62 leaves headroom for sums of a few coefficients before int64 wraps.
  constexpr double kLimit = 4611686018427387904.0;
  if (std::fabs(x) >= kLimit) {
    throw Error(ErrorCode::kScalingOverflow,
                "coefficient " + std::to_string(value) + " overflows at d=" +
                    std::to_string(digits) + "; use fewer scaling digits");
  }
  return {static_cast<std::int64_t>(std::llround(x)), digits};
}

}  // namespace pace
