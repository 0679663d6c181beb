#include "dynperc/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "dynperc/analysis.hpp"
#include "dynperc/error.hpp"
#include "dynperc/full_process.hpp"
#include "dynperc/identities.hpp"
#include "dynperc/parallel.hpp"
#include "dynperc/regeneration.hpp"
#include "dynperc/spectral_profile.hpp"
#include "json.hpp"
#include "stats_internal.hpp"
#include "toml.hpp"

#ifndef DYNPERC_VERSION
#define DYNPERC_VERSION "0.0.0"
#endif

namespace dynperc {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& what) { fail(ErrorCode::kConfigError, what); }

// ---------------------------------------------------------------------------
// Config parsing: TOML is converted to JSON, then one JSON walker applies it.

json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json j = json::object();
    for (auto&& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (const auto* a = node.as_array()) {
    json j = json::array();
    for (const auto& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  if (const auto* v = node.as_string()) return v->get();
  config_error("unsupported TOML value type (dates and times are not accepted)");
}

std::size_t as_count(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::size_t>(v.get<long long>());
  config_error("key '" + key + "' must be a non-negative integer");
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) config_error("key '" + key + "' must be a number");
  return v.get<double>();
}

std::string as_text(const json& v, const std::string& key) {
  if (!v.is_string()) config_error("key '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> as_reals(const json& v, const std::string& key) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) config_error("key '" + key + "' must be a number or a non-empty list of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(as_real(x, key));
  return out;
}

std::vector<std::size_t> as_counts(const json& v, const std::string& key) {
  if (!v.is_array()) return {as_count(v, key)};
  if (v.empty()) config_error("key '" + key + "' must not be empty");
  std::vector<std::size_t> out;
  for (const auto& x : v) out.push_back(as_count(x, key));
  return out;
}

RunMode parse_mode(const std::string& s) {
  if (s == "exact") return RunMode::kExact;
  if (s == "monte-carlo") return RunMode::kMonteCarlo;
  if (s == "both") return RunMode::kBoth;
  config_error("key 'mode' must be one of exact, monte-carlo, both (got '" + s + "')");
}

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::kExact: return "exact";
    case RunMode::kMonteCarlo: return "monte-carlo";
    case RunMode::kBoth: return "both";
  }
  return "both";
}

void apply_graph(GraphSpec& g, const json& j) {
  if (!j.is_object()) config_error("key 'graph' must be a table");
  for (const auto& [k, v] : j.items()) {
    const std::string key = "graph." + k;
    if (k == "builder") g.builder = as_text(v, key);
    else if (k == "n") g.n = as_count(v, key);
    else if (k == "d") g.d = as_count(v, key);
    else if (k == "file") g.file = as_text(v, key);
    else config_error("unknown key '" + key + "'");
  }
}

void apply_json(ExperimentConfig& c, const json& j) {
  if (!j.is_object()) config_error("config root must be a table");
  for (const auto& [k, v] : j.items()) {
    if (k == "experiment") c.experiment = as_text(v, k);
    else if (k == "graph") apply_graph(c.graph, v);
    else if (k == "grid") {
      if (!v.is_object()) config_error("key 'grid' must be a table");
      for (const auto& [gk, gv] : v.items()) {
        if (gk == "mu") c.grid.mus = as_reals(gv, "grid.mu");
        else if (gk == "p") c.grid.ps = as_reals(gv, "grid.p");
        else config_error("unknown key 'grid." + gk + "'");
      }
    }
    else if (k == "samples") c.samples = as_count(v, k);
    else if (k == "events") c.events = as_count(v, k);
    else if (k == "seed") c.seed = as_count(v, k);
    else if (k == "workers") c.workers = as_count(v, k);
    else if (k == "mode") c.mode = parse_mode(as_text(v, k));
    else if (k == "output_dir") c.output_dir = as_text(v, k);
    else if (k == "dims") c.dims = as_counts(v, k);
    else if (k == "deltas") c.deltas = as_reals(v, k);
    else if (k == "random_chains") c.random_chains = as_count(v, k);
    else if (k == "fuzz_cases") c.fuzz_cases = as_count(v, k);
    else if (k == "stability") {
      if (!v.is_boolean()) config_error("key 'stability' must be a boolean");
      c.stability = v.get<bool>();
    }
    else config_error("unknown key '" + k + "'");
  }
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
  }
  if (text.find(',') != std::string::npos) {
    json arr = json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) arr.push_back(parse_override_value(item));
    return arr;
  }
  return text;
}

std::uint64_t sub_seed(const ExperimentConfig& c, std::uint64_t k) { return SeedStream(c.seed).child(k).master(); }

// ---------------------------------------------------------------------------

struct Context {
  const ExperimentConfig& cfg;
  const Graph& g;
  std::size_t workers;
  ComparisonReport report;
  std::ostringstream summary;

  Context(const ExperimentConfig& c, const Graph& graph)
      : cfg(c), g(graph), workers(resolve_workers(c.workers)) {
    report.experiment = c.experiment;
    report.graph = graph.descriptor();
  }

  // Maximum ratio without the finiteness verdict (for non-comparison runs).
  void set_constant() {
    report.empirical_constant = 0.0;
    for (const auto& c : report.cells)
      if (std::isfinite(c.ratio)) report.empirical_constant = std::max(report.empirical_constant, c.ratio);
  }
};

std::string pct(double x) { return format_number(100.0 * x) + "%"; }

Vertex farthest_from(const Graph& g, Vertex x) {
  const auto d = bfs_distances(g, x);
  return static_cast<Vertex>(std::max_element(d.begin(), d.end()) - d.begin());
}

void run_regeneration_spacing(Context& ctx) {
  ctx.report.ratio_label = "mean spacing / e^{1/mu}";
  bool means_ok = true;
  bool lb_ok = true;
  std::uint64_t k = 0;
  for (const auto& prm : ctx.cfg.grid.cells()) {
    const Environment eta0 = sample_environment(ctx.g, prm.p, sub_seed(ctx.cfg, k++));
    const auto trace =
        simulate_with_infection(ctx.g, prm, 0, eta0, InitialInfection::kEmpty, ctx.cfg.samples, sub_seed(ctx.cfg, k++));
    const auto d = spacing_diagnostics(trace.spacings);
    const double target = std::exp(1.0 / prm.mu);
    const double rel = std::abs(d.mean / target - 1.0);
    means_ok = means_ok && std::abs(d.mean - target) <= 4.0 * d.std_error;
    lb_ok = lb_ok && d.ljung_box_p > 1e-3;
    ctx.report.cells.push_back({prm.mu, prm.p, d.mean, target, d.mean / target,
                                {{"std_error", d.std_error},
                                 {"rel_error", rel},
                                 {"ljung_box_p", d.ljung_box_p},
                                 {"tail_rate", d.tail_rate},
                                 {"tail_r2", d.tail_r2}}});
    ctx.summary << "mu=" << format_number(prm.mu) << " p=" << format_number(prm.p) << ": mean spacing "
                << format_number(d.mean) << " vs e^{1/mu} = " << format_number(target) << " (relative error "
                << pct(rel) << ", " << trace.spacings.size() << " regenerations)\n";
  }
  ctx.set_constant();
  ctx.report.add_verdict("mean spacing within 4 standard errors of e^{1/mu}", means_ok, {}, true);
  ctx.report.add_verdict("spacings uncorrelated (Ljung-Box p > 0.001)", lb_ok, {}, true);
}

void run_infection_occupancy(Context& ctx) {
  ctx.report.ratio_label = "mean |R| / (1/mu)";
  bool ok = true;
  std::uint64_t k = 0;
  for (const auto& prm : ctx.cfg.grid.cells()) {
    const auto r = infection_occupancy_test(ctx.g, prm, ctx.cfg.events, sub_seed(ctx.cfg, k++));
    ok = ok && r.p_value > 0.01;
    ctx.report.cells.push_back({prm.mu, prm.p, r.mean, 1.0 / prm.mu, r.mean * prm.mu,
                                {{"chi2", r.chi2},
                                 {"dof", r.dof},
                                 {"p_value", r.p_value},
                                 {"snapshots", static_cast<double>(r.snapshots)}}});
    ctx.summary << "mu=" << format_number(prm.mu) << ": mean |R| " << format_number(r.mean) << " vs "
                << format_number(1.0 / prm.mu) << ", chi-square p-value " << format_number(r.p_value) << "\n";
  }
  ctx.set_constant();
  ctx.report.add_verdict("|R| matches Poisson(1/mu) (chi-square p > 0.01)", ok, {}, true);
}

void run_first_regeneration(Context& ctx) {
  ctx.report.ratio_label = "mean emptying time / birth-death value";
  bool ok = true;
  std::uint64_t k = 0;
  for (const auto& prm : ctx.cfg.grid.cells()) {
    const auto est =
        first_regeneration_from_all_infected(ctx.g, prm, sub_seed(ctx.cfg, k++), ctx.cfg.samples, ctx.workers);
    const double exact = birth_death_emptying_time(ctx.g.edge_count(), prm.mu);
    ok = ok && std::abs(est.mean - exact) <= 4.0 * est.std_error;
    ctx.report.cells.push_back(
        {prm.mu, prm.p, est.mean, exact, est.mean / exact, {{"std_error", est.std_error}}});
    ctx.summary << "mu=" << format_number(prm.mu) << ": mean first emptying " << format_number(est.mean)
                << " vs exact " << format_number(exact) << "\n";
  }
  ctx.set_constant();
  ctx.report.add_verdict("emptying time within 4 standard errors of the birth-death value", ok, {}, true);
}

void run_infection_invariant(Context& ctx) {
  ctx.report.ratio_label = "mean refreshes per edge / (mu horizon)";
  bool inv_ok = true;
  bool rate_ok = true;
  std::uint64_t k = 0;
  for (const auto& prm : ctx.cfg.grid.cells()) {
    const auto inv = run_invariant_check(ctx.g, prm, ctx.cfg.events, sub_seed(ctx.cfg, k++));
    inv_ok = inv_ok && inv.violations == 0 && inv.final_scan_ok;
    const double horizon = 50.0 / prm.mu;
    const std::size_t reps = std::max<std::size_t>(20, ctx.cfg.samples / 1000);
    const auto rr = refresh_rate_check(ctx.g, prm, horizon, reps, sub_seed(ctx.cfg, k++), ctx.workers);
    rate_ok = rate_ok && rr.dispersion_p > 1e-3 && rr.max_abs_z < 4.5;
    double mean = 0.0;
    for (double v : rr.mean_counts) mean += v / static_cast<double>(rr.mean_counts.size());
    ctx.report.cells.push_back({prm.mu, prm.p, mean, prm.mu * horizon, mean / (prm.mu * horizon),
                                {{"invariant_checks", static_cast<double>(inv.checks)},
                                 {"invariant_violations", static_cast<double>(inv.violations)},
                                 {"max_abs_z", rr.max_abs_z},
                                 {"dispersion_p", rr.dispersion_p}}});
    ctx.summary << "mu=" << format_number(prm.mu) << " p=" << format_number(prm.p) << ": " << inv.checks
                << " invariant checks, " << inv.violations << " violations\n";
  }
  ctx.set_constant();
  ctx.report.add_verdict("real element present iff examined since last refresh", inv_ok);
  ctx.report.add_verdict("per-edge refresh counts Poisson(mu t)", rate_ok, {}, true);
}

void run_aux_stationarity(Context& ctx) {
  ctx.report.ratio_label = "TV(empirical Y law, pi) / threshold";
  const auto pi = stationary_distribution(ctx.g).weights();
  const double threshold = std::max(0.005, 5.0 / std::sqrt(static_cast<double>(ctx.cfg.samples)));
  bool ok = true;
  std::uint64_t k = 0;
  for (const auto& prm : ctx.cfg.grid.cells()) {
    const auto ys = aux_chain_sample(ctx.g, prm, 0, ctx.cfg.samples, sub_seed(ctx.cfg, k++));
    std::vector<double> emp(ctx.g.vertex_count(), 0.0);
    for (Vertex y : ys) emp[y] += 1.0 / static_cast<double>(ys.size());
    const double tv = tv_distance(emp, pi);
    ok = ok && tv < threshold;
    ctx.report.cells.push_back({prm.mu, prm.p, tv, threshold, tv / threshold, {}});
    ctx.summary << "mu=" << format_number(prm.mu) << " p=" << format_number(prm.p) << ": TV(Y law, pi) = "
                << format_number(tv) << " over " << ys.size() << " steps\n";
  }
  ctx.set_constant();
  ctx.report.add_verdict("auxiliary chain law matches pi (TV < " + format_number(threshold) + ")", ok, {}, true);
}

void run_regeneration_independence(Context& ctx) {
  ctx.report.ratio_label = "max TV / threshold";
  const double threshold = std::max(0.01, 10.0 / std::sqrt(static_cast<double>(ctx.cfg.samples)));
  bool ok = true;
  std::uint64_t k = 0;
  for (const auto& prm : ctx.cfg.grid.cells()) {
    const auto r = regeneration_independence_test(ctx.g, prm, ctx.cfg.samples, sub_seed(ctx.cfg, k++), 0, ctx.workers);
    ok = ok && r.tv_marginal < threshold && r.tv_product_gap < threshold;
    const double worst = std::max(r.tv_marginal, r.tv_product_gap);
    ctx.report.cells.push_back({prm.mu, prm.p, worst, threshold, worst / threshold,
                                {{"tv_marginal", r.tv_marginal}, {"tv_product_gap", r.tv_product_gap}}});
    ctx.summary << "mu=" << format_number(prm.mu) << " p=" << format_number(prm.p) << ": TV(env, pi_p) = "
                << format_number(r.tv_marginal) << ", TV(joint, product) = " << format_number(r.tv_product_gap)
                << "\n";
  }
  ctx.set_constant();
  ctx.report.add_verdict("fresh environment independent of position (TV < " + format_number(threshold) + ")", ok, {},
                         true);
}

void run_holding_probability(Context& ctx) {
  ctx.report.ratio_label = "min P_aux(x,x) / lower bound";
  bool ok = true;
  std::uint64_t k = 0;
  const std::size_t n = ctx.g.vertex_count();
  for (const auto& prm : ctx.cfg.grid.cells()) {
    const auto est = estimate_aux_transition(ctx.g, prm, ctx.cfg.samples, sub_seed(ctx.cfg, k++), ctx.workers);
    const double lo = (1.0 - prm.p) / 2.0;
    const double hi = 1.0 - prm.p / 2.0;
    const double small_p = 1.0 - 2.0 * std::exp(2.0) * prm.p;
    double min_hold = 1.0;
    double max_hold = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      const double ph = est.p[x][x];
      min_hold = std::min(min_hold, ph);
      max_hold = std::max(max_hold, ph);
      ok = ok && est.ci_high[x][x] >= lo && est.ci_low[x][x] <= hi && est.ci_high[x][x] >= small_p;
    }
    const double lower = std::max(lo, small_p);
    ctx.report.cells.push_back({prm.mu, prm.p, min_hold, lower, min_hold / lower,
                                {{"max_hold", max_hold}, {"upper_bound", hi}, {"small_p_bound", small_p}}});
    ctx.summary << "mu=" << format_number(prm.mu) << " p=" << format_number(prm.p) << ": P_aux(x,x) in ["
                << format_number(min_hold) << ", " << format_number(max_hold) << "], bounds ["
                << format_number(lo) << ", " << format_number(hi) << "], 1-2e^2 p = " << format_number(small_p)
                << "\n";
  }
  ctx.set_constant();
  ctx.report.add_verdict("holding probabilities consistent with their bounds (95% Wilson)", ok, {}, true);
}

void run_aux_transition_bound(Context& ctx) {
  ctx.report.ratio_label = "min CI lower edge / (P_SRW p mu/(1+mu))";
  bool ok = true;
  bool sym_ok = true;
  std::uint64_t k = 0;
  const auto pi = stationary_distribution(ctx.g).weights();
  for (const auto& prm : ctx.cfg.grid.cells()) {
    const auto est = estimate_aux_transition(ctx.g, prm, ctx.cfg.samples, sub_seed(ctx.cfg, k++), ctx.workers);
    double worst = std::numeric_limits<double>::infinity();
    double worst_low = 0.0;
    double worst_bound = 0.0;
    for (Vertex x = 0; x < ctx.g.vertex_count(); ++x) {
      for (const auto& nb : ctx.g.neighbors(x)) {
        const double bound = prm.p * prm.mu / (1.0 + prm.mu) / static_cast<double>(ctx.g.degree(x));
        const double low = est.ci_low[x][nb.vertex];
        const double reverse = pi[nb.vertex] * est.p[nb.vertex][x] / pi[x];
        sym_ok = sym_ok && 0.5 * (est.p[x][nb.vertex] + reverse) >= bound;
        if (low / bound < worst) {
          worst = low / bound;
          worst_low = low;
          worst_bound = bound;
        }
      }
    }
    ok = ok && worst >= 1.0;
    ctx.report.cells.push_back({prm.mu, prm.p, worst_low, worst_bound, worst, {}});
    ctx.summary << "mu=" << format_number(prm.mu) << " p=" << format_number(prm.p)
                << ": smallest CI lower edge / bound = " << format_number(worst) << "\n";
  }
  ctx.set_constant();
  ctx.report.add_verdict("auxiliary transitions dominate P_SRW p mu/(1+mu) (95% lower edge)", ok, {}, true);
  ctx.report.add_verdict("symmetrized auxiliary transitions dominate the same bound", sym_ok, {}, true);
}

void run_wald_identity(Context& ctx) {
  ctx.report.ratio_label = "E[T_y] / E[tau_N]";
  bool eq_ok = true;
  bool ineq_ok = true;
  std::uint64_t k = 0;
  const Vertex y = farthest_from(ctx.g, 0);
  for (const auto& prm : ctx.cfg.grid.cells()) {
    const auto w = wald_cross_estimate(ctx.g, prm, 0, y, ctx.cfg.samples, sub_seed(ctx.cfg, k++), ctx.workers);
    eq_ok = eq_ok && std::abs(w.wald_difference) <= 4.0 * w.wald_difference_se;
    const double se = std::hypot(w.direct.std_error, w.regen_time.std_error);
    ineq_ok = ineq_ok && w.direct.mean <= w.regen_time.mean + 4.0 * se;
    ctx.report.cells.push_back({prm.mu, prm.p, w.direct.mean, w.regen_time.mean,
                                w.direct.mean / w.regen_time.mean,
                                {{"aux_steps", w.aux_steps.mean},
                                 {"wald_prediction", w.wald_prediction},
                                 {"wald_difference", w.wald_difference},
                                 {"wald_difference_se", w.wald_difference_se}}});
    ctx.summary << "mu=" << format_number(prm.mu) << " p=" << format_number(prm.p) << ": E[T_y] "
                << format_number(w.direct.mean) << ", E[tau_N] " << format_number(w.regen_time.mean)
                << ", e^{1/mu} E[N] " << format_number(w.wald_prediction) << "\n";
  }
  ctx.set_constant();
  ctx.report.add_verdict("E[tau_N] = e^{1/mu} E[N] within 4 standard errors", eq_ok, {}, true);
  ctx.report.add_verdict("E[T_y] <= E[tau_N] within 4 standard errors", ineq_ok, {}, true);
}

void run_exact_identities(Context& ctx) {
  ctx.report.ratio_label = "checks passed / checks applicable";
  struct Agg {
    bool pass = true;
    std::size_t chains = 0;
    std::size_t cases = 0;
    double worst = -std::numeric_limits<double>::infinity();
  };
  std::map<std::string, Agg> agg;
  std::vector<std::string> order;
  std::uint64_t k = 0;
  auto run_chain = [&](const std::string& label, const ChainSpec& c) {
    IdentityOptions o;
    o.seed = sub_seed(ctx.cfg, k++);
    o.fuzz_cases = ctx.cfg.fuzz_cases;
    o.workers = ctx.workers;
    const auto checks = exact_identity_suite(c, o);
    std::size_t applicable = 0;
    std::size_t passed = 0;
    for (const auto& ch : checks) {
      if (ch.skipped) continue;
      if (!agg.count(ch.name)) order.push_back(ch.name);
      auto& a = agg[ch.name];
      a.pass = a.pass && ch.pass;
      ++a.chains;
      a.cases += ch.cases;
      a.worst = std::max(a.worst, ch.worst);
      ++applicable;
      passed += ch.pass ? 1 : 0;
    }
    ctx.summary << label << " (" << c.states() << " states): " << passed << "/" << applicable << " checks pass\n";
    return std::make_pair(passed, applicable);
  };
  run_chain("SRW continuous", srw_chain(ctx.g, true));
  run_chain("SRW discrete", srw_chain(ctx.g, false));
  for (const auto& prm : ctx.cfg.grid.cells()) {
    if ((ctx.g.vertex_count() << ctx.g.edge_count()) > 64 || prm.p <= 0.0 || prm.p >= 1.0) continue;
    const auto [passed, applicable] =
        run_chain("full process mu=" + format_number(prm.mu) + " p=" + format_number(prm.p),
                  build_full_generator(ctx.g, prm));
    ctx.report.cells.push_back({prm.mu, prm.p, static_cast<double>(passed), static_cast<double>(applicable),
                                static_cast<double>(passed) / static_cast<double>(applicable), {}});
  }
  Rng rng = SeedStream(ctx.cfg.seed).engine(0x1d);
  for (std::size_t i = 0; i < ctx.cfg.random_chains; ++i) {
    const bool continuous = i % 2 == 0;
    run_chain("random reversible #" + std::to_string(i), random_reversible_chain(6, rng, continuous));
    run_chain("random non-reversible #" + std::to_string(i), random_nonreversible_chain(6, rng, continuous));
  }
  ctx.set_constant();
  for (const auto& name : order) {
    const auto& a = agg[name];
    ctx.report.add_verdict(name, a.pass,
                           std::to_string(a.chains) + " chains, " + std::to_string(a.cases) +
                               " cases, worst relative violation " + format_number(a.worst));
  }
}

void run_spectral_profile(Context& ctx) {
  ctx.report.ratio_label = "t_sp^full(1/4) / t_sp^SRW(1/4)";
  const double eps = 0.25;
  const double t_sp_srw = spectral_profile_time(srw_chain(ctx.g, true), eps);
  bool ok = true;
  std::size_t certified = 0;
  for (const auto& prm : ctx.cfg.grid.cells()) {
    const ChainSpec full = build_full_generator(ctx.g, prm);
    const auto& pi = full.stationary();
    const double pi_min = *std::min_element(pi.begin(), pi.end());
    const double t_mix = mixing_time(full, eps, DistanceNorm::kLinf);
    double t_sp = kNaN;
    double exact = 0.0;
    if (full.states() <= 20) {
      const auto prof = SubsetProfile::enumerate(full, ctx.workers);
      t_sp = spectral_profile_time(prof.breakpoint_table(), pi_min, eps);
      exact = 1.0;
      ok = ok && t_mix - 1e-4 * relaxation_time(full) <= t_sp * (1.0 + 1e-8);
      ++certified;
    }
    ctx.report.cells.push_back({prm.mu, prm.p, t_sp, t_sp_srw, t_sp / t_sp_srw,
                                {{"t_mix_linf", t_mix}, {"profile_exact", exact}, {"gap", spectral_gap(full)}}});
    ctx.summary << "mu=" << format_number(prm.mu) << " p=" << format_number(prm.p) << ": t_mix^Linf(1/4) "
                << format_number(t_mix) << ", profile time "
                << (exact > 0 ? format_number(t_sp) : std::string("not certified (over 20 states)")) << "\n";
  }
  ctx.summary << "SRW profile time t_sp(1/4) = " << format_number(t_sp_srw) << "\n";
  ctx.set_constant();
  ctx.report.add_verdict("Linf mixing time below spectral-profile time", ok,
                         std::to_string(certified) + " full chains with an exact profile");
}

void run_tilted_hypercube(Context& ctx) {
  ctx.report.ratio_label = "Linf distance at t(delta) / delta";
  const double mu = ctx.cfg.grid.mus.front();
  bool ok = true;
  bool mix_ok = true;
  bool cross_ok = true;
  for (std::size_t d : ctx.cfg.dims) {
    for (double p : ctx.cfg.grid.ps) {
      for (double delta : ctx.cfg.deltas) {
        const double t = tilted_mixing_time_bound(d, p, mu, delta);
        const double dist = tilted_linf_distance(d, p, mu, t);
        const double t_mix = tilted_linf_mixing_time(d, p, mu, delta);
        ok = ok && dist <= delta;
        mix_ok = mix_ok && t_mix <= t;
        if (d <= 6) {
          const ChainSpec c = tilted_hypercube_chain(d, p, mu);
          const KernelEvaluator k(c);
          const double direct = distance_at(k, c.stationary(), t, DistanceNorm::kLinf, WorstCaseStart{});
          cross_ok = cross_ok && std::abs(direct - dist) <= 1e-9 * std::max(1.0, dist);
        }
        ctx.report.cells.push_back({mu, p, dist, delta, dist / delta,
                                    {{"d", static_cast<double>(d)}, {"t_bound", t}, {"t_mix_linf", t_mix}}});
      }
    }
  }
  ctx.summary << ctx.report.cells.size() << " (d, p, delta) cells, worst distance/delta "
              << format_number([&] {
                   double w = 0.0;
                   for (const auto& c : ctx.report.cells) w = std::max(w, c.ratio);
                   return w;
                 }())
              << "\n";
  ctx.set_constant();
  ctx.report.add_verdict("Linf distance at t(delta) <= delta", ok);
  ctx.report.add_verdict("Linf mixing time <= t(delta)", mix_ok);
  ctx.report.add_verdict("product formula matches the exact generator (d <= 6)", cross_ok);
}

void run_moderate_growth(Context& ctx) {
  ctx.report.ratio_label = "(Var f / E(f,f)) / t_rel^full";
  bool bkk = true;
  bool var = true;
  bool base = true;
  bool mc_ok = true;
  const auto cells = ctx.cfg.grid.cells();
  const double z = detail::normal_quantile(1.0 - 0.05 / (4.0 * static_cast<double>(cells.size())));
  std::uint64_t k = 0;
  for (const auto& prm : cells) {
    const auto r = moderate_growth_lower_bound(ctx.g, prm);
    bkk = bkk && r.bkk_holds;
    var = var && r.variational_holds;
    base = base && !(r.alternate_base_gap > 1e-12);
    double mc_m = kNaN;
    double mc_n = kNaN;
    if (ctx.cfg.mode != RunMode::kExact) {
      const auto mc = cluster_stats(ctx.g, prm.p, ClusterMethod::kMonteCarlo, ctx.cfg.samples, sub_seed(ctx.cfg, k++),
                                    0, ctx.workers);
      mc_m = mc.m_p;
      mc_n = mc.n_p;
      mc_ok = mc_ok && std::abs(mc.m_p - r.stats.m_p) <= z * mc.m_se && std::abs(mc.n_p - r.stats.n_p) <= z * mc.n_se;
    }
    ctx.report.cells.push_back({prm.mu, prm.p, r.variational, r.t_rel_full, r.variational / r.t_rel_full,
                                {{"dirichlet_f", r.dirichlet_f},
                                 {"bkk_rhs", r.bkk_rhs},
                                 {"m_p", r.stats.m_p},
                                 {"n_p", r.stats.n_p},
                                 {"mc_m_p", mc_m},
                                 {"mc_n_p", mc_n},
                                 {"diameter", static_cast<double>(r.diameter)},
                                 {"applicable", r.applicable ? 1.0 : 0.0},
                                 {"bound", r.bound}}});
    ctx.summary << "mu=" << format_number(prm.mu) << " p=" << format_number(prm.p) << ": E(f,f) "
                << format_number(r.dirichlet_f) << " <= 4 mu p M_p " << format_number(r.bkk_rhs) << "; Var/E "
                << format_number(r.variational) << " <= t_rel " << format_number(r.t_rel_full) << "; N_p "
                << format_number(r.stats.n_p) << (r.applicable ? "" : " > diameter/4: lower bound not applicable")
                << "\n";
  }
  ctx.set_constant();
  ctx.report.add_verdict("E(f,f) <= 4 mu p M_p", bkk);
  ctx.report.add_verdict("Var(f)/E(f,f) <= t_rel^full", var);
  ctx.report.add_verdict("cluster statistics independent of the base vertex", base);
  if (ctx.cfg.mode != RunMode::kExact)
    ctx.report.add_verdict("exact and Monte Carlo cluster statistics agree (joint 95%)", mc_ok, {}, true);
}

double relative_change(double a, double b) { return std::abs(b - a) / std::max(std::abs(a), 1e-300); }

void add_stability(Context& ctx, const std::string& what, double base, double other, bool statistical) {
  const double change = relative_change(base, other);
  ctx.report.add_verdict("empirical constant stable under " + what + " (< 20%)", change < 0.2,
                         format_number(base) + " -> " + format_number(other) + " (" + pct(change) + ")", statistical);
}

double max_extra(const ComparisonReport& r, const std::string& name) {
  double m = 0.0;
  for (const auto& c : r.cells)
    for (const auto& [k, v] : c.extras)
      if (k == name && std::isfinite(v)) m = std::max(m, v);
  return m;
}

void comparison_summary(Context& ctx) {
  ctx.summary << ctx.report.ratio_label << ": empirical constant " << format_number(ctx.report.empirical_constant)
              << " over " << ctx.report.cells.size() << " grid cells\n";
}

void run_hitting_comparison(Context& ctx) {
  HittingComparisonOptions o;
  o.exact = ctx.cfg.mode != RunMode::kMonteCarlo;
  o.mc_samples = ctx.cfg.mode == RunMode::kExact ? 0 : ctx.cfg.samples;
  o.seed = sub_seed(ctx.cfg, 0);
  o.workers = ctx.workers;
  auto r = check_hitting_comparison(ctx.g, ctx.cfg.grid, o);
  r.experiment = ctx.report.experiment;
  ctx.report = std::move(r);
  comparison_summary(ctx);
  if (o.mc_samples > 0)
    ctx.summary << "Monte Carlo constant " << format_number(max_extra(ctx.report, "mc_ratio")) << "\n";
  if (!ctx.cfg.stability) return;
  auto refined_opts = o;
  refined_opts.mc_samples = 0;
  refined_opts.exact = true;
  if (o.exact) {
    const auto refined = check_hitting_comparison(ctx.g, ctx.cfg.grid.refined(), refined_opts);
    add_stability(ctx, "grid refinement", ctx.report.empirical_constant, refined.empirical_constant, false);
  }
  if (o.mc_samples > 0) {
    auto reseeded = o;
    reseeded.exact = false;
    reseeded.seed = sub_seed(ctx.cfg, 1);
    const auto other = check_hitting_comparison(ctx.g, ctx.cfg.grid, reseeded);
    add_stability(ctx, "seed change (Monte Carlo)", max_extra(ctx.report, "mc_ratio"), other.empirical_constant, true);
  }
}

void run_relaxation_comparison(Context& ctx) {
  auto r = check_relaxation_comparison(ctx.g, ctx.cfg.grid, ctx.workers);
  ctx.report = std::move(r);
  comparison_summary(ctx);
  if (ctx.cfg.stability) {
    const auto refined = check_relaxation_comparison(ctx.g, ctx.cfg.grid.refined(), ctx.workers);
    add_stability(ctx, "grid refinement", ctx.report.empirical_constant, refined.empirical_constant, false);
  }
}

void run_mixing_comparison(Context& ctx) {
  ctx.report = mixing_upper_bound_experiment(ctx.g, ctx.cfg.grid, ctx.workers);
  comparison_summary(ctx);
  if (ctx.cfg.stability) {
    const auto refined = mixing_upper_bound_experiment(ctx.g, ctx.cfg.grid.refined(), ctx.workers);
    add_stability(ctx, "grid refinement", ctx.report.empirical_constant, refined.empirical_constant, false);
  }
}

void run_ls_comparison(Context& ctx) {
  ctx.report = check_ls_comparison(ctx.g, ctx.cfg.grid, ctx.workers, sub_seed(ctx.cfg, 0));
  comparison_summary(ctx);
  if (ctx.cfg.stability) {
    const auto refined = check_ls_comparison(ctx.g, ctx.cfg.grid.refined(), ctx.workers, sub_seed(ctx.cfg, 0));
    add_stability(ctx, "grid refinement", ctx.report.empirical_constant, refined.empirical_constant, false);
    const auto reseeded = check_ls_comparison(ctx.g, ctx.cfg.grid, ctx.workers, sub_seed(ctx.cfg, 1));
    add_stability(ctx, "seed change", ctx.report.empirical_constant, reseeded.empirical_constant, false);
  }
}

struct Entry {
  ExperimentInfo info;
  std::function<void(Context&)> run;
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      {{"regeneration-spacing", "regeneration spacings of the infected-set construction: mean e^{1/mu}, no serial correlation",
        "regeneration spacing law"},
       run_regeneration_spacing},
      {{"infection-occupancy", "size of the infected multiset along a long run against Poisson(1/mu)",
        "birth-death dynamics of the infected set"},
       run_infection_occupancy},
      {{"first-regeneration", "mean emptying time of R started with every edge infected vs the birth-death formula",
        "birth-death dynamics of the infected set"},
       run_first_regeneration},
      {{"infection-invariant", "real element present iff the edge was examined since its last refresh; refresh rate mu per edge",
        "infected-set construction"},
       run_infection_invariant},
      {{"aux-stationarity", "empirical law of the auxiliary chain against the degree-biased law pi",
        "stationarity of the auxiliary chain"},
       run_aux_stationarity},
      {{"regeneration-independence", "environment at the first regeneration: law pi_p and independence from the walk",
        "fresh environment at regeneration"},
       run_regeneration_independence},
      {{"holding-probability", "holding probabilities of the auxiliary chain against their two-sided bounds",
        "holding probabilities of the auxiliary chain"},
       run_holding_probability},
      {{"aux-transition-bound", "auxiliary transitions across edges against P_SRW(x,y) p mu/(1+mu)",
        "auxiliary vs SRW transition bound"},
       run_aux_transition_bound},
      {{"wald-identity", "full-process hitting time against hitting counted in regenerations (Wald's identity)",
        "hitting times through regenerations"},
       run_wald_identity},
      {{"exact-identities", "exact identities and inequalities on small chains: kernels, profiles, hitting, Lagrange",
        "spectral-profile toolkit"},
       run_exact_identities},
      {{"spectral-profile", "spectral-profile time of the full process and of SRW; Linf mixing below profile time",
        "spectral-profile mixing bound"},
       run_spectral_profile},
      {{"tilted-hypercube", "Linf distance of the environment chain at the tilted-hypercube time t(delta)",
        "tilted-hypercube mixing"},
       run_tilted_hypercube},
      {{"moderate-growth", "cluster test function: Dirichlet form vs 4 mu p M_p and the variational relaxation bound",
        "moderate-growth relaxation lower bound"},
       run_moderate_growth},
      {{"hitting-comparison", "worst full-process hitting time against SRW, constant p t_hit^full / t_hit^SRW",
        "hitting-time comparison with SRW"},
       run_hitting_comparison},
      {{"relaxation-comparison", "full-process relaxation time against t_rel^SRW / (mu p)",
        "relaxation-time comparison with SRW"},
       run_relaxation_comparison},
      {{"mixing-comparison", "full-process Linf mixing time against the SRW profile time plus |log(1-p)|/mu",
        "mixing-time comparison with SRW"},
       run_mixing_comparison},
      {{"ls-comparison", "log-Sobolev brackets of the full process against the SRW lower bound",
        "log-Sobolev comparison with SRW"},
       run_ls_comparison},
  };
  return entries;
}

const Entry* find_entry(const std::string& name) {
  for (const auto& e : registry())
    if (e.info.name == name) return &e;
  return nullptr;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> infos = [] {
    std::vector<ExperimentInfo> v;
    for (const auto& e : registry()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

Graph build_graph(const GraphSpec& s) {
  if (s.builder == "cycle") return build_cycle(s.n);
  if (s.builder == "path") return build_path(s.n);
  if (s.builder == "star") return build_star(s.n);
  if (s.builder == "complete") return build_complete(s.n);
  if (s.builder == "hypercube") return build_hypercube(s.d);
  if (s.builder == "torus") return build_torus(s.n, s.d);
  if (s.builder == "file") {
    if (s.file.empty()) config_error("graph.builder = \"file\" needs graph.file");
    return read_edge_list_file(s.file);
  }
  config_error("unknown graph builder '" + s.builder + "'");
}

ExperimentConfig parse_config(const std::string& text, const std::string& format) {
  std::string fmt = format;
  if (fmt == "auto") {
    const auto pos = text.find_first_not_of(" \t\r\n");
    fmt = pos != std::string::npos && text[pos] == '{' ? "json" : "toml";
  }
  json j;
  if (fmt == "json") {
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      config_error(std::string("invalid JSON config: ") + e.what());
    }
  } else if (fmt == "toml") {
    try {
      j = toml_to_json(toml::parse(text));
    } catch (const toml::parse_error& e) {
      config_error(std::string("invalid TOML config: ") + std::string(e.description()));
    }
  } else {
    config_error("unknown config format '" + format + "'");
  }
  ExperimentConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string ext = std::filesystem::path(path).extension().string();
  return parse_config(ss.str(), ext == ".json" ? "json" : ext == ".toml" ? "toml" : "auto");
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) config_error("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  json value = parse_override_value(assignment.substr(eq + 1));
  // Build {"a": {"b": value}} from "a.b".
  std::vector<std::string> parts;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) value = json{{*it, value}};
  apply_json(cfg, value);
}

void validate_config(const ExperimentConfig& c) {
  if (c.experiment.empty()) config_error("key 'experiment' is required");
  if (find_entry(c.experiment) == nullptr) config_error("unknown experiment '" + c.experiment + "'");
  if (c.grid.mus.empty() || c.grid.ps.empty()) config_error("grid.mu and grid.p must be non-empty");
  for (double mu : c.grid.mus)
    if (!(mu > 0.0) || !std::isfinite(mu)) config_error("grid.mu values must be positive");
  for (double p : c.grid.ps)
    if (!(p > 0.0 && p < 1.0)) config_error("grid.p values must lie in (0, 1)");
  if (c.samples == 0) config_error("key 'samples' must be positive");
  if (c.events == 0) config_error("key 'events' must be positive");
  for (double d : c.deltas)
    if (!(d > 0.0)) config_error("deltas must be positive");
  for (std::size_t d : c.dims)
    if (d == 0 || d > 64) config_error("dims must lie in [1, 64]");
  if (c.output_dir.empty()) config_error("key 'output_dir' must not be empty");
  try {
    (void)build_graph(c.graph);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    config_error(std::string("graph: ") + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["graph"] = {{"builder", c.graph.builder}, {"n", c.graph.n}, {"d", c.graph.d}, {"file", c.graph.file}};
  j["grid"] = {{"mu", c.grid.mus}, {"p", c.grid.ps}};
  j["samples"] = c.samples;
  j["events"] = c.events;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["mode"] = mode_name(c.mode);
  j["output_dir"] = c.output_dir;
  j["dims"] = c.dims;
  j["deltas"] = c.deltas;
  j["random_chains"] = c.random_chains;
  j["fuzz_cases"] = c.fuzz_cases;
  j["stability"] = c.stability;
  return j.dump(2);
}

bool ExperimentOutcome::exact_pass() const { return report.exact_pass(); }

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const Graph g = build_graph(cfg.graph);
  Context ctx(cfg, g);
  find_entry(cfg.experiment)->run(ctx);
  ctx.report.experiment = cfg.experiment;
  ctx.report.graph = g.descriptor();

  std::ostringstream s;
  s << "experiment: " << cfg.experiment << "\n"
    << "graph: " << g.descriptor() << " (" << g.vertex_count() << " vertices, " << g.edge_count() << " edges)\n"
    << "seed: " << cfg.seed << "\n\n"
    << ctx.summary.str() << "\n";
  for (const auto& v : ctx.report.verdicts) {
    s << (v.pass ? "[PASS] " : "[FAIL] ") << (v.statistical ? "(statistical) " : "") << v.name;
    if (!v.detail.empty()) s << ": " << v.detail;
    s << "\n";
  }
  s << "\nexact verdicts: " << (ctx.report.exact_pass() ? "all pass" : "FAILED") << "\n";
  return {std::move(ctx.report), s.str()};
}

int run_and_write(const ExperimentConfig& cfg, RunArtifacts* artifacts, ExperimentOutcome* outcome) {
  validate_config(cfg);
  const auto start = std::chrono::steady_clock::now();
  ExperimentOutcome out = run_experiment(cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  RunArtifacts a;
  a.report_json = report_to_json(out.report);
  std::ostringstream csv;
  write_report_csv(csv, out.report);
  a.report_csv = csv.str();
  a.summary = out.summary;
  a.resolved_config = config_to_json(cfg);
  json manifest{{"tool", "dynperc"},
                {"version", version_string()},
                {"experiment", cfg.experiment},
                {"seed", cfg.seed},
                {"workers", resolve_workers(cfg.workers)},
                {"wall_time_seconds", wall},
                {"exact_pass", out.exact_pass()},
                {"all_pass", out.report.all_pass()}};
  a.manifest = manifest.dump(2);

  const std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create output directory " + dir.string() + ": " + ec.message());
  write_text(dir / "report.json", a.report_json + "\n");
  write_text(dir / "report.csv", a.report_csv);
  write_text(dir / "manifest.json", a.manifest + "\n");
  write_text(dir / "summary.txt", a.summary);
  write_text(dir / "config.resolved.json", a.resolved_config + "\n");
  const int code = out.exact_pass() ? 0 : 1;
  if (artifacts != nullptr) *artifacts = std::move(a);
  if (outcome != nullptr) *outcome = std::move(out);
  return code;
}

const char* version_string() { return DYNPERC_VERSION; }

}  // namespace dynperc
