#include "pace/master.hpp"

#include <ostream>

#include "pace/error.hpp"

namespace pace {

MasterProblem::MasterProblem(int label_count, int feature_count, bool warm_start)
    : label_count_(label_count), feature_count_(feature_count), warm_start_(warm_start) {
  if (label_count < 2) throw Error(ErrorCode::kInvalidArgument, "master needs >= 2 labels");
}

MasterProblem MasterProblem::build(std::span<const Tree> candidates,
                                   std::span<const LabeledSample> samples, int label_count,
                                   int feature_count) {
  MasterProblem m(label_count, feature_count);
  for (const Tree& t : candidates) m.add_column(t);
  for (const LabeledSample& s : samples) m.add_sample(s);
  return m;
}

double MasterProblem::coefficient(const Tree& learner, const LabeledSample& s,
                                  Label rival) const {
  const auto& v = learner.scores(s.raw);
  return v[static_cast<std::size_t>(s.y_orig)] - v[static_cast<std::size_t>(rival)];
}

std::vector<double> MasterProblem::entries_for(const Tree& learner) const {
  std::vector<double> e(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    e[r] = coefficient(learner, samples_[rows_[r].sample], rows_[r].rival);
  }
  return e;
}

std::size_t MasterProblem::add_column(const Tree& learner) {
  if (static_cast<int>(learner.label_count()) != label_count_) {
    throw Error(ErrorCode::kModelMalformed, "learner label count differs from master");
  }
  if (feature_count_ > 0 && learner.max_feature() >= feature_count_) {
    throw Error(ErrorCode::kModelMalformed, "learner splits on an unknown feature");
  }
  simplex_.add_column(entries_for(learner), 1.0);
  columns_.push_back(learner);
  return columns_.size() - 1;
}

void MasterProblem::add_row(const LabeledSample& sample, Label rival) {
  if (rival == sample.y_orig) {
    throw Error(ErrorCode::kInvalidArgument, "rival label equals the original vote");
  }
  if (rival < 0 || rival >= label_count_ || sample.y_orig < 0 || sample.y_orig >= label_count_) {
    throw Error(ErrorCode::kInvalidArgument, "label out of range");
  }
  std::size_t idx = samples_.size();
  if (samples_.empty() || samples_.back().cell != sample.cell ||
      samples_.back().raw != sample.raw) {
    samples_.push_back(sample);
  } else {
    idx = samples_.size() - 1;
  }
  std::vector<double> coeffs(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) coeffs[c] = coefficient(columns_[c], sample, rival);
  simplex_.add_row(coeffs, 1.0);
  rows_.push_back({idx, rival});
}

std::size_t MasterProblem::add_sample(const LabeledSample& sample) {
  std::size_t added = 0;
  for (Label y = 0; y < label_count_; ++y) {
    if (y == sample.y_orig) continue;
    add_row(sample, y);
    ++added;
  }
  return added;
}

MasterSolution MasterProblem::solve() {
  MasterSolution out;
  if (rows_.empty()) {
    out.weights.assign(columns_.size(), 0.0);
    out.degenerate = true;
    return out;
  }
  if (!warm_start_) simplex_.reset_basis();
  const lp::Solution s = simplex_.solve();
  if (s.status == lp::Status::kInfeasible) {
    throw Error(ErrorCode::kInternalConsistency,
                "master LP infeasible: some faithfulness row has no positive coefficient");
  }
  out.weights = s.weights;
  out.duals = s.duals;
  out.objective = s.primal_objective;
  out.dual_objective = s.dual_objective;
  out.feasibility_residual = s.feasibility_residual;
  return out;
}

std::vector<double> MasterProblem::column_entries(std::size_t col) const {
  std::vector<double> e(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) e[r] = simplex_.coefficient(r, col);
  return e;
}

void MasterProblem::dump_lp(std::ostream& out) const {
  out << "\\ l1 faithfulness master: " << rows_.size() << " rows, " << columns_.size()
      << " columns\n";
  out << "Minimize\n obj:";
  for (std::size_t c = 0; c < columns_.size(); ++c) out << (c ? " + " : " ") << "w" << c;
  if (columns_.empty()) out << " 0";
  out << "\nSubject To\n";
  out.precision(17);
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    out << " r" << r << "_x" << rows_[r].sample << "_y" << rows_[r].rival << ":";
    bool any = false;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const double a = simplex_.coefficient(r, c);
      if (a == 0.0) continue;
      out << (a < 0 ? " - " : (any ? " + " : " ")) << (a < 0 ? -a : a) << " w" << c;
      any = true;
    }
    if (!any) out << " 0 w0";
    out << " >= 1\n";
  }
  out << "Bounds\n";
  for (std::size_t c = 0; c < columns_.size(); ++c) out << " w" << c << " >= 0\n";
  out << "End\n";
}

}  // namespace pace
