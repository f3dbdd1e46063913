// Models cross the boundary as JSON text; the Python package wraps these in dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pace/dataset.hpp"
#include "pace/driver.hpp"
#include "pace/error.hpp"
#include "pace/model_io.hpp"
#include "pace/separation.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

using Rows = std::vector<std::vector<double>>;

pace::WeightedEnsemble ensemble(const std::string& text) {
  return pace::io::ensemble_from_json(json::parse(text));
}

pace::IsolationForest forest(const std::string& text) {
  if (text.empty()) return {};
  return pace::io::iforest_from_json(json::parse(text));
}

// Run domain plus the levels of `extra` trees, so both ensembles are closed over it.
pace::DiscreteDomain domain_for(const pace::WeightedEnsemble& orig, const pace::IsolationForest& f,
                                const pace::WeightedEnsemble* extra) {
  std::vector<std::vector<double>> edges;
  if (extra) edges = pace::build_domain(extra->trees, extra->feature_count).all_levels();
  return pace::build_run_domain(orig, f, edges);
}

std::vector<int> vote_rows(const std::string& model, const Rows& rows) {
  const auto e = ensemble(model);
  std::vector<int> out;
  for (const auto& r : rows) out.push_back(pace::vote(e, r));
  return out;
}

Rows score_rows(const std::string& model, const Rows& rows) {
  const auto e = ensemble(model);
  Rows out;
  for (const auto& r : rows) out.push_back(pace::ensemble_scores(e, r));
  return out;
}

std::vector<double> plausibility_rows(const std::string& iforest, const Rows& rows) {
  const auto f = forest(iforest);
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(pace::plausibility(f, r));
  return out;
}

std::string train_baseline(const Rows& x, const std::vector<int>& y, int labels, const Rows& edges,
                           const std::string& kind, int n_estimators, int max_depth, std::uint64_t seed) {
  pace::TrainParams p;
  p.kind = pace::baseline_from_string(kind);
  p.n_estimators = n_estimators;
  p.max_depth = max_depth;
  p.seed = seed;
  return pace::io::ensemble_to_json(pace::train_baseline(x, y, labels, edges, p)).dump();
}

std::string train_iforest(const Rows& x, int n_trees, int subsample, std::uint64_t seed, const Rows& snap) {
  pace::IForestParams p;
  p.n_trees = n_trees;
  p.subsample_size = subsample;
  p.seed = seed;
  p.snap_edges = snap;
  return pace::io::iforest_to_json(pace::train_iforest(x, p)).dump();
}

pace::PaceConfig config_from(const json& o) {
  using P = pace::PlausibilityThreshold::Provenance;
  pace::PaceConfig c;
  c.eta = o.value("eta", 0.0);
  if (o.contains("delta_raw")) c.delta = {P::kRaw, o["delta_raw"].get<double>()};
  else if (o.contains("delta_scaled")) c.delta = {P::kScaled, o["delta_scaled"].get<double>()};
  else c.delta = {P::kFraction, o.value("delta_frac", 0.0)};
  c.mode = pace::mode_from_string(o.value("mode", std::string("full")));
  c.pricer = pace::pricer_from_string(o.value("pricer", std::string("stumps")));
  c.family.max_depth = o.value("gen_depth", 1);
  c.max_generated_learners = o.value("max_new", 100);
  c.digits = o.value("scale_digits", pace::kDefaultScaleDigits);
  c.seed = o.value("seed", std::uint64_t{0});
  c.time_limit_seconds = o.value("time_limit", 300.0);
  c.threads = o.value("threads", 1);
  c.l0_node_budget = o.value("l0_node_budget", std::uint64_t{0});
  c.l0_time_limit_seconds = o.value("l0_time_limit", 30.0);
  return c;
}

std::string compress(const Rows& train, const std::string& model, const std::string& iforest,
                     const std::string& options, const Rows& edges, bool verify_global) {
  const auto orig = ensemble(model);
  const auto f = forest(iforest);
  const auto cfg = config_from(json::parse(options.empty() ? "{}" : options));
  const auto domain = pace::build_run_domain(orig, f, edges);
  py::gil_scoped_release release;
  auto report = pace::run_pace(cfg, train, orig, f, domain);
  if (verify_global) {
    report.global = pace::certify_global(orig, report.final_ensemble, f, domain, cfg.eta,
                                         report.delta.delta_raw, cfg.digits);
  }
  return pace::report_to_json(report, cfg).dump();
}

py::dict certify(const std::string& orig_text, const std::string& compressed_text, const std::string& iforest,
                 double eta, double delta_raw, int digits) {
  const auto orig = ensemble(orig_text);
  const auto comp = ensemble(compressed_text);
  const auto f = forest(iforest);
  const auto domain = domain_for(orig, f, &comp);
  const auto g = pace::certify_global(orig, comp, f, domain, eta, delta_raw, digits);
  py::dict d;
  d["ran"] = g.ran;
  d["agrees"] = g.agrees();
  d["cells"] = g.cells;
  d["region_cells"] = g.region_cells;
  d["disagreements"] = g.disagreements;
  d["first_disagreement"] = g.first_disagreement;
  d["notice"] = g.notice;
  return d;
}

// A representative point where the current ensemble does not vote y_orig
// although the original does with margin and plausibility; None if there is none.
py::object find_witness(const std::string& orig_text, const std::string& current_text, const std::string& iforest,
                        double eta, double delta_raw, int y_orig, int y_alt, int digits, bool exhaustive) {
  const auto orig = ensemble(orig_text);
  const auto cur = ensemble(current_text);
  const auto f = forest(iforest);
  const auto domain = domain_for(orig, f, &cur);
  const auto inst = pace::build_instance(orig, cur, f, domain, eta, delta_raw, y_orig, y_alt, digits);
  const auto res = exhaustive ? pace::brute_force_oracle(inst) : pace::find_witness(inst);
  if (!res.found()) return py::none();
  py::dict d;
  d["cell"] = res.cell;
  d["point"] = domain.representative(res.cell);
  d["nodes"] = res.stats.nodes;
  return d;
}

}  // namespace

PYBIND11_MODULE(_pace, m) {
  m.doc() = "Certified compression of tree ensembles";

  static py::exception<pace::Error> error(m, "PaceError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const pace::Error& e) {
      py::set_error(error, e.what());
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("vote", &vote_rows, py::arg("model"), py::arg("rows"));
  m.def("scores", &score_rows, py::arg("model"), py::arg("rows"));
  m.def("plausibility", &plausibility_rows, py::arg("iforest"), py::arg("rows"));
  m.def("correction", &pace::correction, py::arg("support"));
  m.def("train_baseline", &train_baseline, py::arg("x"), py::arg("y"), py::arg("n_labels"), py::arg("edges"),
        py::arg("kind") = "bagged", py::arg("n_estimators") = 10, py::arg("max_depth") = 2, py::arg("seed") = 0);
  m.def("train_iforest", &train_iforest, py::arg("x"), py::arg("n_trees") = 100, py::arg("subsample") = 256,
        py::arg("seed") = 0, py::arg("snap_edges") = Rows{});
  m.def("compress", &compress, py::arg("train"), py::arg("model"), py::arg("iforest") = "",
        py::arg("options") = "", py::arg("edges") = Rows{}, py::arg("verify_global") = false);
  m.def("certify", &certify, py::arg("original"), py::arg("compressed"), py::arg("iforest") = "",
        py::arg("eta") = 0.0, py::arg("delta_raw") = 0.0, py::arg("digits") = pace::kDefaultScaleDigits);
  m.def("find_witness", &find_witness, py::arg("original"), py::arg("current"), py::arg("iforest") = "",
        py::arg("eta") = 0.0, py::arg("delta_raw") = 0.0, py::arg("y_orig") = 0, py::arg("y_alt") = 1,
        py::arg("digits") = pace::kDefaultScaleDigits, py::arg("exhaustive") = false);
}
