// pace: compress a tree ensemble while certifying faithfulness on a region.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "pace/dataset.hpp"
#include "pace/driver.hpp"
#include "pace/error.hpp"
#include "pace/model_io.hpp"

namespace {

struct Args {
  std::string data;
  std::string load_model;
  std::string load_iforest;
  std::string save_model;
  std::string save_iforest;
  std::string kind = "bagged";
  int n_est = 10;
  int depth = 2;
  double eta = 0.0;
  double delta_raw = 0.0;
  double delta_scaled = 0.0;
  double delta_frac = 0.0;
  std::string mode = "full";
  std::string pricer = "stumps";
  int gen_depth = 1;
  int max_new = 100;
  int scale_digits = pace::kDefaultScaleDigits;
  std::uint64_t seed = 0;
  double time_limit = 300.0;
  int threads = 1;
  std::uint64_t l0_nodes = 0;
  double l0_time_limit = 30.0;
  int iforest_trees = 100;
  int iforest_subsample = 256;
  bool verify_global = false;
  std::string out = "pace_out";
};

int compress(const Args& a, const CLI::App& cmd) {
  using namespace pace;
  const Dataset d = ingest_csv(a.data, a.seed);
  const auto train_x = d.rows(d.train);
  const auto train_y = d.labels(d.train);
  const auto test_x = d.rows(d.test);
  const auto test_y = d.labels(d.test);

  WeightedEnsemble orig;
  if (!a.load_model.empty()) {
    orig = io::ensemble_from_json(io::read_json_file(a.load_model));
  } else {
    TrainParams p;
    p.kind = baseline_from_string(a.kind);
    p.n_estimators = a.n_est;
    p.max_depth = a.depth;
    p.seed = a.seed;
    orig = train_baseline(train_x, train_y, d.label_count(), d.edges, p);
  }
  if (orig.feature_count != static_cast<int>(d.feature_count())) {
    throw Error(ErrorCode::kInvalidInput, "model feature count differs from the dataset");
  }

  PaceConfig cfg;
  cfg.eta = a.eta;
  using P = PlausibilityThreshold::Provenance;
  if (cmd.count("--delta-raw")) cfg.delta = {P::kRaw, a.delta_raw};
  else if (cmd.count("--delta-scaled")) cfg.delta = {P::kScaled, a.delta_scaled};
  else cfg.delta = {P::kFraction, a.delta_frac};
  cfg.mode = mode_from_string(a.mode);
  cfg.pricer = pricer_from_string(a.pricer);
  cfg.family.max_depth = a.gen_depth;
  cfg.max_generated_learners = a.max_new;
  cfg.digits = a.scale_digits;
  cfg.seed = a.seed;
  cfg.time_limit_seconds = a.time_limit;
  cfg.threads = a.threads;
  cfg.l0_node_budget = a.l0_nodes;
  cfg.l0_time_limit_seconds = a.l0_time_limit;

  IsolationForest forest;
  if (!a.load_iforest.empty()) {
    forest = io::iforest_from_json(io::read_json_file(a.load_iforest));
  } else if (cfg.delta.value != 0.0 || cfg.delta.kind == P::kScaled) {
    IForestParams ip;
    ip.n_trees = a.iforest_trees;
    ip.subsample_size = a.iforest_subsample;
    ip.seed = a.seed;
    ip.snap_edges = d.edges;
    forest = train_iforest(train_x, ip);
  }

  const DiscreteDomain domain = build_run_domain(orig, forest, d.edges);
  CompressionReport report = run_pace(cfg, train_x, orig, forest, domain);
  if (a.verify_global) {
    report.global = certify_global(orig, report.final_ensemble, forest, domain, cfg.eta,
                                   report.delta.delta_raw, cfg.digits);
  }

  auto j = report_to_json(report, cfg);
  j["dataset"] = {{"path", a.data},
                  {"rows", d.x.size()},
                  {"features", d.feature_count()},
                  {"labels", d.label_count()},
                  {"train", d.train.size()},
                  {"test", d.test.size()},
                  {"binning", d.binning}};
  j["baseline"] = {{"source", a.load_model.empty() ? "trained" : a.load_model},
                   {"kind", to_string(orig.kind)},
                   {"boosting_variant", orig.kind == EnsembleKind::kBoosted ? "SAMME" : ""},
                   {"trees", orig.size()}};
  j["domain"] = {{"cells", domain.cell_count()}};
  j["accuracy"] = {{"original_train", accuracy(orig, train_x, train_y)},
                   {"original_test", accuracy(orig, test_x, test_y)},
                   {"compressed_train", accuracy(report.final_ensemble, train_x, train_y)},
                   {"compressed_test", accuracy(report.final_ensemble, test_x, test_y)}};

  std::filesystem::create_directories(a.out);
  const auto dir = std::filesystem::path(a.out);
  io::write_json_file((dir / "report.json").string(), j);
  io::write_json_file((dir / "model.json").string(), io::ensemble_to_json(report.final_ensemble));
  if (!a.save_model.empty()) io::write_json_file(a.save_model, io::ensemble_to_json(orig));
  if (!a.save_iforest.empty() && !forest.empty()) {
    io::write_json_file(a.save_iforest, io::iforest_to_json(forest));
  }

  std::cout << "S=" << report.size << " P=" << report.generated_fraction << " T=" << report.wall_seconds
            << "s original=" << orig.size() << " region=" << report.region_size
            << " certified=" << (report.certified() ? "yes" : "no")
            << (report.phase2.ran && !report.l0_optimal ? " (support not proven minimal)" : "");
  if (report.global) {
    std::cout << " global=" << (report.global->ran ? (report.global->agrees() ? "agree" : "DISAGREE") : "skipped");
  }
  std::cout << "\nwrote " << (dir / "report.json").string() << " and " << (dir / "model.json").string() << "\n";
  if (report.global && report.global->ran && !report.global->agrees()) return 1;
  return report.certified() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prune-and-compress tree ensembles with a faithfulness certificate"};
  app.require_subcommand(1);
  Args a;
  auto* c = app.add_subcommand("compress", "Train or load an ensemble and compress it");
  c->add_option("--data", a.data, "CSV with header; last column is the label")->required()->check(CLI::ExistingFile);
  auto* load = c->add_option("--load-model", a.load_model, "Ensemble JSON to compress")->check(CLI::ExistingFile);
  c->add_option("--load-iforest", a.load_iforest, "Isolation forest JSON")->check(CLI::ExistingFile);
  c->add_option("--save-model", a.save_model, "Write the trained baseline here");
  c->add_option("--save-iforest", a.save_iforest, "Write the isolation forest here");
  auto* kind = c->add_option("--kind", a.kind, "Baseline trainer")->check(CLI::IsMember({"bagged", "boosted"}));
  auto* nest = c->add_option("--n-est", a.n_est, "Baseline tree count")->check(CLI::PositiveNumber);
  auto* depth = c->add_option("--depth", a.depth, "Baseline tree depth")->check(CLI::PositiveNumber);
  load->excludes(kind)->excludes(nest)->excludes(depth);
  c->add_option("--eta", a.eta, "Confidence margin")->check(CLI::NonNegativeNumber);
  auto* dr = c->add_option("--delta-raw", a.delta_raw, "Plausibility threshold on summed path lengths");
  auto* ds = c->add_option("--delta-scaled", a.delta_scaled, "Plausibility threshold in (0, 1]");
  auto* df = c->add_option("--delta-frac", a.delta_frac, "Fraction of training points flagged as outliers")
                 ->check(CLI::Range(0.0, 1.0));
  dr->excludes(ds)->excludes(df);
  ds->excludes(df);
  c->add_option("--mode", a.mode)->check(CLI::IsMember({"full", "generate-only", "prune-only"}));
  c->add_option("--pricer", a.pricer)->check(CLI::IsMember({"stumps", "greedy"}));
  c->add_option("--gen-depth", a.gen_depth, "Depth of greedily priced learners")->check(CLI::PositiveNumber);
  c->add_option("--max-new", a.max_new, "Cap on generated learners")->check(CLI::NonNegativeNumber);
  c->add_option("--scale-digits", a.scale_digits)->check(CLI::Range(1, 15));
  c->add_option("--seed", a.seed);
  c->add_option("--time-limit", a.time_limit, "Seconds; 0 disables");
  c->add_option("--threads", a.threads)->check(CLI::PositiveNumber);
  c->add_option("--l0-node-budget", a.l0_nodes, "Branch-and-bound nodes per l0 solve; 0 disables");
  c->add_option("--l0-time-limit", a.l0_time_limit, "Seconds per l0 solve; 0 disables")
      ->check(CLI::NonNegativeNumber);
  c->add_option("--iforest-trees", a.iforest_trees)->check(CLI::PositiveNumber);
  c->add_option("--iforest-subsample", a.iforest_subsample)->check(CLI::PositiveNumber);
  c->add_flag("--verify-global", a.verify_global, "Enumerate every cell and compare votes");
  c->add_option("--out", a.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "usage error\n";
    return 1;
  }
  try {
    return compress(a, *c);
  } catch (const pace::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
