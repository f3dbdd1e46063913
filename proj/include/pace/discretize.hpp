#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pace/ensemble.hpp"

namespace pace {

// Per-feature ordered split levels. Feature i has levels(i).size() + 1
// intervals; interval k covers (a_{k-1}, a_k] with a_{-1} = -inf and the last
// interval unbounded above.
class DiscreteDomain {
 public:
  DiscreteDomain() = default;
  // Levels are sorted and deduplicated.
  explicit DiscreteDomain(std::vector<std::vector<double>> levels);

  std::size_t feature_count() const { return levels_.size(); }
  const std::vector<double>& levels(std::size_t feature) const { return levels_[feature]; }
  const std::vector<std::vector<double>>& all_levels() const { return levels_; }
  int interval_count(std::size_t feature) const {
    return static_cast<int>(levels_[feature].size()) + 1;
  }
  // Product of interval counts, saturated at UINT64_MAX.
  std::uint64_t cell_count() const;

  bool contains(int feature, double threshold) const;
  // Position of `threshold` in the level set of `feature`; throws kModelMalformed
  // if the threshold is not registered.
  int level_index(int feature, double threshold) const;

  std::vector<int> encode(std::span<const double> raw) const;
  std::vector<double> representative(std::span<const int> cell) const;

  // kModelMalformed unless every split threshold of `tree` is a registered level.
  void check_closed(const Tree& tree) const;

  bool operator==(const DiscreteDomain&) const = default;

 private:
  std::vector<std::vector<double>> levels_;
};

// Accumulates thresholds from trees and extra edge lists.
class DomainBuilder {
 public:
  explicit DomainBuilder(int feature_count);
  DomainBuilder& add(const Tree& tree);
  DomainBuilder& add(const WeightedEnsemble& ens);
  DomainBuilder& add_levels(int feature, std::span<const double> levels);
  DiscreteDomain build() const;

 private:
  std::vector<std::vector<double>> levels_;
};

DiscreteDomain build_domain(std::span<const Tree> trees, int feature_count);

constexpr int kDefaultScaleDigits = 9;

struct ScaledCoefficient {
  std::int64_t value = 0;
  int digits = kDefaultScaleDigits;
};

// round(value * 10^digits), half away from zero. kScalingOverflow if the
// result does not fit a signed 63-bit magnitude.
ScaledCoefficient scale(double value, int digits = kDefaultScaleDigits);
double pow10(int digits);

}  // namespace pace
