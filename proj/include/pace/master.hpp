#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "pace/ensemble.hpp"
#include "pace/simplex.hpp"

namespace pace {

// A faithfulness sample: a cell of the discrete domain, its representative raw
// vector and the label voted by the original ensemble there.
struct LabeledSample {
  std::vector<double> raw;
  std::vector<int> cell;
  Label y_orig = 0;
};

struct MasterRow {
  std::size_t sample = 0;
  Label rival = 0;
};

struct MasterSolution {
  std::vector<double> weights;  // one per column
  std::vector<double> duals;    // one per row
  double objective = 0.0;       // l(h)
  double dual_objective = 0.0;
  double feasibility_residual = 0.0;
  bool degenerate = false;      // no rows
};

// The l1 master: min sum_h w_h  s.t.  sum_h w_h (h_{y^o}(x) - h_y(x)) >= 1 for
// every stored sample x and rival label y != y^o, w >= 0.
class MasterProblem {
 public:
  MasterProblem(int label_count, int feature_count, bool warm_start = true);

  static MasterProblem build(std::span<const Tree> candidates,
                             std::span<const LabeledSample> samples, int label_count,
                             int feature_count);

  // Returns the column index.
  std::size_t add_column(const Tree& learner);
  // Adds one row per rival label; returns the number of rows added.
  std::size_t add_sample(const LabeledSample& sample);
  void add_row(const LabeledSample& sample, Label rival);

  MasterSolution solve();

  std::size_t row_count() const { return rows_.size(); }
  std::size_t column_count() const { return columns_.size(); }
  const std::vector<MasterRow>& rows() const { return rows_; }
  const std::vector<LabeledSample>& samples() const { return samples_; }
  const std::vector<Tree>& columns() const { return columns_; }
  // A[(x, y), h] for one column over all rows.
  std::vector<double> column_entries(std::size_t col) const;
  double entry(std::size_t row, std::size_t col) const { return simplex_.coefficient(row, col); }

  // Margin entries h_{y^o}(x) - h_y(x) of an arbitrary learner over all rows.
  std::vector<double> entries_for(const Tree& learner) const;

  // Writes the current master in CPLEX LP text format.
  void dump_lp(std::ostream& out) const;

 private:
  double coefficient(const Tree& learner, const LabeledSample& s, Label rival) const;

  int label_count_;
  int feature_count_;
  bool warm_start_;
  std::vector<Tree> columns_;
  std::vector<LabeledSample> samples_;
  std::vector<MasterRow> rows_;
  lp::CoveringSimplex simplex_;
};

}  // namespace pace
