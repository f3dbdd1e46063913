#include "pace/driver.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pace/error.hpp"
#include "pace/log.hpp"
#include "pace/model_io.hpp"

namespace pace {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::kFull: return "full";
    case Mode::kGenerateOnly: return "generate-only";
    case Mode::kPruneOnly: return "prune-only";
  }
  return "?";
}

const char* to_string(PricerKind p) {
  return p == PricerKind::kExactStumps ? "stumps" : "greedy";
}

Mode mode_from_string(const std::string& s) {
  if (s == "full") return Mode::kFull;
  if (s == "generate-only" || s == "generate_only") return Mode::kGenerateOnly;
  if (s == "prune-only" || s == "prune_only") return Mode::kPruneOnly;
  throw Error(ErrorCode::kInvalidArgument, "unknown mode '" + s + "'");
}

PricerKind pricer_from_string(const std::string& s) {
  if (s == "stumps" || s == "exact_stumps") return PricerKind::kExactStumps;
  if (s == "greedy" || s == "heuristic") return PricerKind::kHeuristic;
  throw Error(ErrorCode::kInvalidArgument, "unknown pricer '" + s + "'");
}

void PaceConfig::validate() const {
  if (!(eta >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "eta must be >= 0");
  if (max_generated_learners < 0) throw Error(ErrorCode::kInvalidArgument, "max_generated_learners must be >= 0");
  if (digits < 1 || digits > 15) throw Error(ErrorCode::kInvalidArgument, "scale digits must lie in [1, 15]");
  if (family.max_depth < 1) throw Error(ErrorCode::kInvalidArgument, "generated tree depth must be >= 1");
  if (threads < 1) throw Error(ErrorCode::kInvalidArgument, "threads must be >= 1");
}

bool CompressionReport::certified() const {
  if (phase2.ran) return phase2.certified;
  return phase1.ran && phase1.certified;
}

namespace {

double elapsed(const PaceState& s) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - s.start).count();
}

bool out_of_time(const PaceConfig& c, const PaceState& s) {
  return c.time_limit_seconds > 0.0 && elapsed(s) > c.time_limit_seconds;
}

WeightedEnsemble with_weights(const PaceState& state, const PaceContext& ctx,
                              const std::vector<double>& w) {
  WeightedEnsemble e;
  e.trees = state.master.columns();
  e.weights = w;
  e.weights.resize(e.trees.size(), 0.0);
  e.label_count = ctx.orig->label_count;
  e.feature_count = ctx.orig->feature_count;
  e.kind = EnsembleKind::kCompressed;
  e.leaf_mode = ctx.orig->leaf_mode;
  e.generated = state.generated;
  return e;
}

// Adds every witness as a new region sample; returns the number added.
std::size_t separate(const PaceConfig& config, const PaceContext& ctx, PaceState& state,
                     const std::vector<double>& w) {
  PairSearchOptions opt;
  opt.digits = config.digits;
  opt.search.node_budget = config.separation_node_budget;
  opt.objective_mode = config.objective_separation;
  opt.threads = config.threads;
  const auto pairs = find_all_pairs(*ctx.orig, with_weights(state, ctx, w), *ctx.forest, *ctx.domain,
                                    ctx.eta, ctx.delta_raw, opt);
  state.counters.separation_instances += pairs.size();
  std::uint64_t nodes = 0;
  for (const auto& p : pairs) nodes += p.result.stats.nodes;
  trace("separation: ", pairs.size(), " instances, ", nodes, " nodes, t=", elapsed(state), "s");
  std::size_t added = 0;
  std::set<std::vector<int>> fresh;
  for (const auto& p : pairs) {
    if (!p.result.found()) continue;
    if (!fresh.insert(p.result.cell).second) continue;
    for (const auto& s : state.master.samples()) {
      if (s.cell == p.result.cell) {
        throw Error(ErrorCode::kInternalConsistency,
                    "separation returned a cell whose rows are already in the master");
      }
    }
    state.master.add_sample(sample_from_cell(ctx, p.result.cell, p.y_orig));
    trace("witness pair (", p.y_orig, ",", p.y_alt, ") cell ", nlohmann::json(p.result.cell).dump(),
          " raw ", nlohmann::json(state.master.samples().back().raw).dump(), " nodes ", p.result.stats.nodes);
    ++added;
  }
  state.counters.witnesses_added += added;
  return added;
}

void solve_l1(PaceState& state) {
  state.l1 = state.master.solve();
  ++state.counters.masters_solved;
  state.weights = state.l1.weights;
  trace("master: rows=", state.master.row_count(), " cols=", state.master.column_count(),
        " l1=", state.l1.objective, " t=", elapsed(state), "s");
}

}  // namespace

LabeledSample sample_from_cell(const PaceContext& ctx, std::span<const int> cell, Label y_orig) {
  LabeledSample s;
  s.cell.assign(cell.begin(), cell.end());
  s.raw = ctx.domain->representative(cell);
  s.y_orig = y_orig;
  return s;
}

std::vector<LabeledSample> init_region(const std::vector<std::vector<double>>& train,
                                       const PaceContext& ctx, int digits) {
  const ScaledEnsemble orig(*ctx.orig, digits);
  const bool plaus = ctx.delta_raw > 0.0;
  ScaledForest forest;
  if (plaus) {
    if (ctx.forest->empty()) throw Error(ErrorCode::kInvalidArgument, "delta > 0 needs an isolation forest");
    forest = ScaledForest(*ctx.forest, digits);
  }
  const __int128 eta_s = scale(ctx.eta, digits).value;
  const __int128 delta_s = plaus ? scale(ctx.delta_raw, digits).value : 0;
  std::vector<LabeledSample> out;
  std::set<std::vector<int>> seen;
  for (const auto& x : train) {
    auto cell = ctx.domain->encode(x);
    if (seen.count(cell)) continue;
    const auto raw = ctx.domain->representative(cell);
    const Label y = orig.vote(raw);
    if (orig.min_margin(raw, y) <= eta_s) continue;
    if (plaus && forest.score(raw) < delta_s) continue;
    seen.insert(cell);
    out.push_back({raw, std::move(cell), y});
  }
  return out;
}

PaceState make_state(const PaceContext& ctx, const std::vector<LabeledSample>& region,
                     const PaceConfig& config) {
  PaceState state(ctx.orig->label_count, ctx.orig->feature_count, config.warm_start);
  for (const Tree& t : ctx.orig->trees) {
    ctx.domain->check_closed(t);
    state.master.add_column(t);
    state.generated.push_back(false);
  }
  for (const auto& s : region) state.master.add_sample(s);
  state.weights = ctx.orig->weights;
  return state;
}

WeightedEnsemble current_ensemble(const PaceState& state, const PaceContext& ctx) {
  return with_weights(state, ctx, state.weights);
}

void run_phase1(const PaceConfig& config, const PaceContext& ctx, PaceState& state) {
  state.phase1.ran = true;
  int generated = 0;
  double last_l1 = 0.0;
  bool have_last = false;
  while (true) {
    solve_l1(state);
    // Only a pure column addition must not raise ell; witness rows reset the baseline.
    if (have_last && state.l1.objective > last_l1 + 1e-7 * (1.0 + std::fabs(last_l1))) {
      throw Error(ErrorCode::kInternalConsistency, "master objective increased after adding a learner");
    }
    state.l1_history.push_back(state.l1.objective);
    try {
      while (separate(config, ctx, state, state.weights) > 0) solve_l1(state);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kBudgetExceeded) throw;
      state.phase1.certified = false;
      state.phase1.note = "separation budget exceeded";
      state.pricing_complete = false;
      return;
    }
    state.phase1.certified = true;

    if (generated >= config.max_generated_learners) {
      if (config.max_generated_learners > 0) {
        state.pricing_complete = false;
        state.phase1.note = "generated-learner cap reached";
      }
      return;
    }
    if (out_of_time(config, state)) {
      state.pricing_complete = false;
      state.phase1.note = "time limit reached before pricing";
      return;
    }
    if (state.master.row_count() == 0) return;
    const DualVector duals = DualVector::from(state.master, state.l1, ctx.orig->label_count);
    const PricingOutcome price = config.pricer == PricerKind::kExactStumps
                                     ? price_exact_stumps(duals, *ctx.domain)
                                     : price_heuristic(duals, *ctx.domain, config.family);
    ++state.counters.pricing_calls;
    state.last_reduced_cost = price.reduced_cost;
    trace("pricing: reduced cost ", price.reduced_cost, " t=", elapsed(state), "s");
    if (!price.learner || !is_improving(price, config.tol_reduced_cost)) return;
    const bool duplicate = std::any_of(state.master.columns().begin(), state.master.columns().end(),
                                       [&](const Tree& t) { return t.structurally_equal(*price.learner); });
    if (duplicate) {
      state.phase1.note = "pricer returned an existing learner; stopping";
      return;
    }
    state.master.add_column(*price.learner);
    state.generated.push_back(true);
    ++generated;
    ++state.counters.learners_generated;
    last_l1 = state.l1.objective;
    have_last = true;
  }
}

void run_phase2(const PaceConfig& config, const PaceContext& ctx, PaceState& state) {
  state.phase2.ran = true;
  L0Options opt;
  opt.node_budget = config.l0_node_budget;
  std::vector<std::size_t> prev_support;
  while (true) {
    opt.time_limit_seconds = config.l0_time_limit_seconds;
    if (config.time_limit_seconds > 0.0) {
      const double left = std::max(1.0, config.time_limit_seconds - elapsed(state));
      opt.time_limit_seconds = opt.time_limit_seconds > 0.0 ? std::min(opt.time_limit_seconds, left) : left;
    }
    // The original trees always cover the region; the last support often still does.
    opt.hints.clear();
    std::vector<std::size_t> orig_cols(ctx.orig->size());
    for (std::size_t j = 0; j < orig_cols.size(); ++j) orig_cols[j] = j;
    opt.hints.push_back(std::move(orig_cols));
    if (!prev_support.empty()) opt.hints.push_back(prev_support);
    const L0Result r = solve_l0(state.master, opt);
    prev_support = r.support;
    state.l0_optimal = r.optimal;
    ++state.counters.l0_solved;
    trace("l0: support=", r.support.size(), " l1-support=", r.l1_support_size, " nodes=", r.nodes,
          " lps=", r.lp_solves, " t=", elapsed(state), "s");
    state.weights = r.weights;
    std::size_t added = 0;
    try {
      added = separate(config, ctx, state, state.weights);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kBudgetExceeded) throw;
      state.phase2.note = "separation budget exceeded";
      return;
    }
    if (added == 0) {
      state.phase2.certified = true;
      return;
    }
    if (out_of_time(config, state)) {
      state.phase2.note = "time limit reached with unresolved witnesses";
      return;
    }
  }
}

DiscreteDomain build_run_domain(const WeightedEnsemble& orig, const IsolationForest& forest,
                                const std::vector<std::vector<double>>& extra_edges) {
  int n = orig.feature_count;
  n = std::max(n, forest.feature_count);
  n = std::max(n, static_cast<int>(extra_edges.size()));
  for (const Tree& t : orig.trees) n = std::max(n, t.max_feature() + 1);
  for (const Tree& t : forest.trees) n = std::max(n, t.max_feature() + 1);
  DomainBuilder b(n);
  b.add(orig);
  for (const Tree& t : forest.trees) b.add(t);
  for (std::size_t i = 0; i < extra_edges.size(); ++i) b.add_levels(static_cast<int>(i), extra_edges[i]);
  return b.build();
}

CompressionReport run_pace(const PaceConfig& config, const std::vector<std::vector<double>>& train,
                           const WeightedEnsemble& orig, const IsolationForest& forest,
                           const DiscreteDomain& domain) {
  config.validate();
  orig.validate();
  if (orig.empty()) throw Error(ErrorCode::kEmptyModel, "original ensemble has no trees");
  if (orig.label_count < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two labels");

  CompressionReport report;
  report.original_size = orig.size();
  report.eta = config.eta;
  if (forest.empty()) {
    if (config.delta.value != 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "a nonzero delta needs an isolation forest");
    }
    report.delta.provenance = config.delta.kind;
  } else {
    std::vector<double> scores;
    scores.reserve(train.size());
    for (const auto& x : train) scores.push_back(plausibility(forest, x));
    report.delta = resolve_delta(config.delta, forest, scores);
  }

  PaceContext ctx{&orig, &forest, &domain, config.eta, report.delta.delta_raw};
  const auto region = init_region(train, ctx, config.digits);
  report.region_size = region.size();
  PaceState state = make_state(ctx, region, config);

  if (config.mode != Mode::kPruneOnly) run_phase1(config, ctx, state);
  if (config.mode != Mode::kGenerateOnly) run_phase2(config, ctx, state);

  const WeightedEnsemble all = current_ensemble(state, ctx);
  report.final_ensemble = support_of(all, kSupportTol);
  report.final_ensemble.kind = EnsembleKind::kCompressed;
  report.size = report.final_ensemble.size();
  std::size_t gen = 0;
  for (bool g : report.final_ensemble.generated) gen += g ? 1 : 0;
  report.generated_fraction = report.size ? static_cast<double>(gen) / static_cast<double>(report.size) : 0.0;
  report.counters = state.counters;
  report.phase1 = state.phase1;
  report.phase2 = state.phase2;
  report.pricing_complete = state.pricing_complete;
  report.l0_optimal = state.l0_optimal;
  report.last_reduced_cost = state.last_reduced_cost;
  report.l1_objective = state.l1.objective;
  report.l1_history = state.l1_history;
  report.wall_seconds = elapsed(state);
  return report;
}

GlobalCheck certify_global(const WeightedEnsemble& orig, const WeightedEnsemble& compressed,
                           const IsolationForest& forest, const DiscreteDomain& domain, double eta,
                           double delta_raw, int digits, std::uint64_t cap) {
  GlobalCheck g;
  const std::uint64_t cells = domain.cell_count();
  if (cells > cap) {
    g.notice = "skipped: " + std::to_string(cells) + " cells exceed the enumeration cap";
    return g;
  }
  const ScaledEnsemble so(orig, digits);
  const ScaledEnsemble sc(compressed, digits);
  const bool plaus = delta_raw > 0.0;
  ScaledForest sf;
  if (plaus) sf = ScaledForest(forest, digits);
  const __int128 eta_s = scale(eta, digits).value;
  const __int128 delta_s = plaus ? scale(delta_raw, digits).value : 0;

  const std::size_t nf = domain.feature_count();
  std::vector<int> cell(nf, 0);
  g.ran = true;
  for (std::uint64_t n = 0; n < cells; ++n) {
    ++g.cells;
    const auto raw = domain.representative(cell);
    const Label y = so.vote(raw);
    if (so.min_margin(raw, y) > eta_s && (!plaus || sf.score(raw) >= delta_s)) {
      ++g.region_cells;
      if (sc.vote(raw) != y) {
        if (g.disagreements == 0) g.first_disagreement = cell;
        ++g.disagreements;
      }
      if (vote(compressed, raw) != vote(orig, raw)) ++g.double_disagreements;
    }
    for (std::size_t i = nf; i-- > 0;) {
      if (++cell[i] < domain.interval_count(i)) break;
      cell[i] = 0;
    }
  }
  return g;
}

nlohmann::json report_to_json(const CompressionReport& r, const PaceConfig& c) {
  nlohmann::json j;
  j["config"] = {
      {"eta", c.eta},
      {"delta", {{"kind", to_string(c.delta.kind)}, {"value", c.delta.value}}},
      {"mode", to_string(c.mode)},
      {"pricer", to_string(c.pricer)},
      {"max_depth", c.family.max_depth},
      {"max_generated_learners", c.max_generated_learners},
      {"tol_reduced_cost", c.tol_reduced_cost},
      {"time_limit_seconds", c.time_limit_seconds},
      {"seed", c.seed},
      {"scale_digits", c.digits},
      {"threads", c.threads},
      {"l0_node_budget", c.l0_node_budget},
      {"l0_time_limit_seconds", c.l0_time_limit_seconds},
  };
  j["S"] = r.size;
  j["P"] = r.generated_fraction;
  j["T"] = r.wall_seconds;
  j["original_size"] = r.original_size;
  j["region_size"] = r.region_size;
  j["counters"] = {
      {"masters_solved", r.counters.masters_solved},
      {"l0_solved", r.counters.l0_solved},
      {"separation_instances", r.counters.separation_instances},
      {"witnesses_added", r.counters.witnesses_added},
      {"learners_generated", r.counters.learners_generated},
      {"pricing_calls", r.counters.pricing_calls},
  };
  auto phase = [](const PhaseCertificate& p) {
    nlohmann::json o{{"ran", p.ran}, {"separation_empty", p.certified}};
    if (!p.note.empty()) o["note"] = p.note;
    return o;
  };
  j["certificate"] = {
      {"region", {{"eta", r.eta}, {"delta_raw", r.delta.delta_raw}}},
      {"phase1", phase(r.phase1)},
      {"phase2", phase(r.phase2)},
      {"certified", r.certified()},
  };
  j["pricing_complete"] = r.pricing_complete;
  j["l0_optimal"] = r.l0_optimal;
  j["last_reduced_cost"] = r.last_reduced_cost;
  j["l1_objective"] = r.l1_objective;
  j["l1_history"] = r.l1_history;
  if (r.global) {
    const GlobalCheck& g = *r.global;
    nlohmann::json o{{"ran", g.ran},
                     {"cells", g.cells},
                     {"region_cells", g.region_cells},
                     {"disagreements", g.disagreements},
                     {"double_disagreements", g.double_disagreements},
                     {"agrees", g.agrees()}};
    if (!g.notice.empty()) o["notice"] = g.notice;
    if (!g.first_disagreement.empty()) o["first_disagreement"] = g.first_disagreement;
    j["global_check"] = o;
  }
  j["model"] = io::ensemble_to_json(r.final_ensemble);
  return j;
}

}  // namespace pace
