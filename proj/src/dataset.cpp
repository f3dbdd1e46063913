#include "pace/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "pace/error.hpp"

namespace pace {

std::vector<std::vector<double>> Dataset::rows(const std::vector<std::size_t>& idx) const {
  std::vector<std::vector<double>> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(x[i]);
  return out;
}

std::vector<Label> Dataset::labels(const std::vector<std::size_t>& idx) const {
  std::vector<Label> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(y[i]);
  return out;
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

bool has_empty_bin(const std::vector<double>& sorted, const std::vector<double>& edges) {
  // Bin k covers (e_{k-1}, e_k]; the last bin is unbounded above.
  std::vector<std::size_t> count(edges.size() + 1, 0);
  for (double v : sorted) {
    const auto k = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
    ++count[k];
  }
  return std::find(count.begin(), count.end(), 0u) != count.end();
}

std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && issp(static_cast<unsigned char>(s[b]))) ++b;
  s = s.substr(b);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(v);
}

}  // namespace

std::vector<double> uniform_edges(const std::vector<double>& values, int bins) {
  if (values.empty()) return {};
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (!(*mx > *mn)) return {};
  std::vector<double> e;
  for (int k = 1; k < bins; ++k) e.push_back(*mn + (*mx - *mn) * k / bins);
  return e;
}

std::vector<double> quantile_edges(std::vector<double> values, int bins, bool* used_uniform) {
  if (used_uniform) *used_uniform = false;
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  std::vector<double> e;
  for (int k = 1; k < bins; ++k) e.push_back(quantile_sorted(values, static_cast<double>(k) / bins));
  if (!has_empty_bin(values, e)) return e;
  if (used_uniform) *used_uniform = true;
  return uniform_edges(values, bins);
}

void bin_and_split(Dataset& d, std::uint64_t seed) {
  const std::size_t n = d.feature_count();
  d.edges.assign(n, {});
  d.binary.assign(n, false);
  d.binning.assign(n, "quantile");
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> col;
    col.reserve(d.x.size());
    for (const auto& row : d.x) col.push_back(row[i]);
    const bool binary = !col.empty() && std::all_of(col.begin(), col.end(), [](double v) { return v == 0.0 || v == 1.0; });
    if (binary) {
      d.binary[i] = true;
      d.binning[i] = "binary";
      d.edges[i] = {0.5};
      continue;
    }
    bool uniform = false;
    d.edges[i] = quantile_edges(col, kBinCount, &uniform);
    if (uniform) d.binning[i] = "uniform";
  }
  std::vector<std::size_t> idx(d.x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(kTrainFraction * static_cast<double>(idx.size())));
  d.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  d.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(d.train.begin(), d.train.end());
  std::sort(d.test.begin(), d.test.end());
}

Dataset make_dataset(std::vector<std::string> names, std::vector<std::vector<double>> x,
                     std::vector<std::string> labels, std::uint64_t seed) {
  if (x.size() != labels.size()) throw Error(ErrorCode::kIngestion, "row count differs from label count");
  if (x.empty()) throw Error(ErrorCode::kIngestion, "dataset has no rows");
  Dataset d;
  d.feature_names = std::move(names);
  d.x = std::move(x);
  std::vector<std::string> classes = labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  // Numeric labels order numerically.
  bool numeric = true;
  for (const auto& c : classes) {
    double v;
    numeric = numeric && parse_double(c, v);
  }
  if (numeric) {
    std::sort(classes.begin(), classes.end(), [](const std::string& a, const std::string& b) {
      return std::strtod(a.c_str(), nullptr) < std::strtod(b.c_str(), nullptr);
    });
  }
  d.classes = classes;
  for (const auto& l : labels) {
    d.y.push_back(static_cast<Label>(std::find(classes.begin(), classes.end(), l) - classes.begin()));
  }
  bin_and_split(d, seed);
  return d;
}

Dataset ingest_csv(const std::string& path, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIngestion, "cannot open '" + path + "'");
  std::string line;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    if (!trim(line).empty()) header = split_line(line);
  }
  if (header.size() < 2) throw Error(ErrorCode::kIngestion, "header needs at least one feature and a label");
  const std::size_t nf = header.size() - 1;
  std::vector<std::vector<double>> x;
  std::vector<std::string> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kIngestion, "line " + std::to_string(lineno) + ": expected " +
                                             std::to_string(header.size()) + " cells, got " +
                                             std::to_string(cells.size()));
    }
    std::vector<double> row(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      if (!parse_double(cells[i], row[i])) {
        throw Error(ErrorCode::kIngestion, "line " + std::to_string(lineno) + ", column '" + header[i] +
                                               "': non-numeric value '" + cells[i] + "'");
      }
    }
    if (cells[nf].empty()) throw Error(ErrorCode::kIngestion, "line " + std::to_string(lineno) + ": empty label");
    x.push_back(std::move(row));
    labels.push_back(cells[nf]);
  }
  header.pop_back();
  return make_dataset(std::move(header), std::move(x), std::move(labels), seed);
}

BaselineKind baseline_from_string(const std::string& s) {
  if (s == "bagged") return BaselineKind::kBagged;
  if (s == "boosted") return BaselineKind::kBoosted;
  throw Error(ErrorCode::kInvalidArgument, "unknown baseline kind '" + s + "'");
}

namespace {

double gini(const std::vector<double>& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (total <= 0.0) return 0.0;
  double s = 0.0;
  for (double v : w) s += (v / total) * (v / total);
  return total * (1.0 - s);
}

struct TreeFitter {
  const std::vector<std::vector<double>>& x;
  const std::vector<Label>& y;
  const std::vector<double>& sw;
  int labels;
  const std::vector<std::vector<double>>& edges;
  bool one_hot;
  int per_split;
  std::mt19937_64 rng;
  std::vector<Node> nodes;

  std::vector<double> class_weights(const std::vector<std::size_t>& idx) const {
    std::vector<double> w(static_cast<std::size_t>(labels), 0.0);
    for (std::size_t i : idx) w[static_cast<std::size_t>(y[i])] += sw[i];
    return w;
  }

  std::vector<int> candidate_features() {
    std::vector<int> f(edges.size());
    std::iota(f.begin(), f.end(), 0);
    if (per_split <= 0 || per_split >= static_cast<int>(f.size())) return f;
    for (int k = 0; k < per_split; ++k) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), f.size() - 1);
      std::swap(f[static_cast<std::size_t>(k)], f[pick(rng)]);
    }
    f.resize(static_cast<std::size_t>(per_split));
    std::sort(f.begin(), f.end());
    return f;
  }

  int grow(const std::vector<std::size_t>& idx, int depth, int max_depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[static_cast<std::size_t>(id)].depth = depth;
    nodes[static_cast<std::size_t>(id)].support = static_cast<int>(idx.size());
    const auto cw = class_weights(idx);
    const double parent = gini(cw);

    int best_f = -1;
    double best_t = 0.0;
    double best_score = parent - 1e-12 * std::max(1.0, parent);
    if (depth < max_depth && parent > 0.0) {
      for (int f : candidate_features()) {
        for (double e : edges[static_cast<std::size_t>(f)]) {
          std::vector<double> l(static_cast<std::size_t>(labels), 0.0);
          std::size_t nl = 0;
          for (std::size_t i : idx) {
            if (x[i][static_cast<std::size_t>(f)] <= e) {
              l[static_cast<std::size_t>(y[i])] += sw[i];
              ++nl;
            }
          }
          if (nl == 0 || nl == idx.size()) continue;
          std::vector<double> r(cw);
          for (std::size_t k = 0; k < r.size(); ++k) r[k] -= l[k];
          const double score = gini(l) + gini(r);
          if (score < best_score) {
            best_score = score;
            best_f = f;
            best_t = e;
          }
        }
      }
    }
    if (best_f < 0) {
      std::vector<double> s(static_cast<std::size_t>(labels), 0.0);
      const double total = std::accumulate(cw.begin(), cw.end(), 0.0);
      if (one_hot) {
        s[static_cast<std::size_t>(std::max_element(cw.begin(), cw.end()) - cw.begin())] = 1.0;
      } else {
        for (std::size_t k = 0; k < s.size(); ++k) s[k] = total > 0.0 ? cw[k] / total : 1.0 / labels;
      }
      nodes[static_cast<std::size_t>(id)].scores = std::move(s);
      return id;
    }
    std::vector<std::size_t> li, ri;
    for (std::size_t i : idx) (x[i][static_cast<std::size_t>(best_f)] <= best_t ? li : ri).push_back(i);
    nodes[static_cast<std::size_t>(id)].feature = best_f;
    nodes[static_cast<std::size_t>(id)].threshold = best_t;
    const int l = grow(li, depth + 1, max_depth);
    const int r = grow(ri, depth + 1, max_depth);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

}  // namespace

Tree fit_tree(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
              const std::vector<double>& sample_weight, int labels,
              const std::vector<std::vector<double>>& edges, int max_depth, bool one_hot,
              int features_per_split, std::uint64_t seed) {
  if (max_depth < 1) throw Error(ErrorCode::kInvalidArgument, "tree depth must be >= 1");
  if (x.empty()) throw Error(ErrorCode::kInvalidArgument, "no training rows");
  TreeFitter f{x, y, sample_weight, labels, edges, one_hot, features_per_split, std::mt19937_64(seed), {}};
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  f.grow(idx, 0, max_depth);
  return Tree(std::move(f.nodes));
}

WeightedEnsemble train_baseline(const std::vector<std::vector<double>>& x, const std::vector<Label>& y,
                                int labels, const std::vector<std::vector<double>>& edges,
                                const TrainParams& p) {
  if (p.n_estimators < 1) throw Error(ErrorCode::kInvalidArgument, "n_estimators must be >= 1");
  if (p.max_depth < 1) throw Error(ErrorCode::kInvalidArgument, "depth must be >= 1");
  if (x.empty() || x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "empty or ragged training data");
  if (std::all_of(y.begin(), y.end(), [&](Label v) { return v == y.front(); })) {
    throw Error(ErrorCode::kDegenerateModel, "training data holds a single class");
  }
  WeightedEnsemble ens;
  ens.label_count = labels;
  ens.feature_count = static_cast<int>(edges.size());
  std::mt19937_64 rng(p.seed);
  const std::size_t n = x.size();

  if (p.kind == BaselineKind::kBagged) {
    ens.kind = EnsembleKind::kBagged;
    ens.leaf_mode = LeafMode::kProbability;
    const int per_split = p.feature_subsampling
                              ? std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(edges.size())))))
                              : 0;
    for (int t = 0; t < p.n_estimators; ++t) {
      std::vector<double> sw(n, 1.0);
      if (p.bootstrap) {
        std::fill(sw.begin(), sw.end(), 0.0);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t k = 0; k < n; ++k) sw[pick(rng)] += 1.0;
      }
      // Rows outside the bootstrap keep weight 0 and leave the impurities untouched.
      std::vector<std::vector<double>> bx;
      std::vector<Label> by;
      std::vector<double> bw;
      for (std::size_t i = 0; i < n; ++i) {
        if (sw[i] > 0.0) {
          bx.push_back(x[i]);
          by.push_back(y[i]);
          bw.push_back(sw[i]);
        }
      }
      ens.trees.push_back(fit_tree(bx, by, bw, labels, edges, p.max_depth, false, per_split, rng()));
      ens.weights.push_back(1.0);
    }
    return ens;
  }

  // Multiclass AdaBoost with discrete (SAMME) stage weights.
  ens.kind = EnsembleKind::kBoosted;
  ens.leaf_mode = LeafMode::kOneHot;
  std::vector<double> sw(n, 1.0 / static_cast<double>(n));
  const double k = labels;
  for (int t = 0; t < p.n_estimators; ++t) {
    Tree tree = fit_tree(x, y, sw, labels, edges, p.max_depth, true, 0, rng());
    double err = 0.0;
    std::vector<bool> wrong(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = tree.scores(x[i]);
      wrong[i] = s[static_cast<std::size_t>(y[i])] != 1.0;
      if (wrong[i]) err += sw[i];
    }
    if (err >= 1.0 - 1.0 / k) {
      if (ens.trees.empty()) {
        ens.trees.push_back(std::move(tree));
        ens.weights.push_back(1.0);
      }
      break;
    }
    const double e = std::max(err, 1e-10);
    const double alpha = std::log((1.0 - e) / e) + std::log(k - 1.0);
    ens.trees.push_back(std::move(tree));
    ens.weights.push_back(alpha);
    if (err <= 1e-10) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (wrong[i]) sw[i] *= std::exp(alpha);
      total += sw[i];
    }
    for (double& v : sw) v /= total;
  }
  return ens;
}

double accuracy(const WeightedEnsemble& ens, const std::vector<std::vector<double>>& x,
                const std::vector<Label>& y) {
  if (x.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < x.size(); ++i) ok += vote(ens, x[i]) == y[i] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(x.size());
}

}  // namespace pace
