#include "dynperc/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>

#include "dynperc/analysis.hpp"
#include "dynperc/error.hpp"
#include "dynperc/log_sobolev.hpp"
#include "dynperc/parallel.hpp"
#include "dynperc/spectral_profile.hpp"
#include "json.hpp"
#include "stats_internal.hpp"

namespace dynperc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> refine_axis(const std::vector<double>& v) {
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
    if (i + 1 < v.size()) out.push_back(0.5 * (v[i] + v[i + 1]));
  }
  return out;
}

nlohmann::json json_number(double v) {
  if (!std::isfinite(v)) return format_number(v);
  return std::strtod(format_number(v).c_str(), nullptr);
}

double srw_worst_hitting(const Graph& g) {
  const Eigen::MatrixXd h = hitting_times(srw_chain(g, true));
  return h.maxCoeff();
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t index) { return SeedStream(seed).child(index).master(); }

}  // namespace

std::vector<FullParams> ParamGrid::cells() const {
  std::vector<FullParams> out;
  for (double mu : mus)
    for (double p : ps) out.push_back({mu, p});
  return out;
}

ParamGrid ParamGrid::refined() const { return {refine_axis(mus), refine_axis(ps)}; }

bool ComparisonReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

bool ComparisonReport::exact_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.statistical || v.pass; });
}

void ComparisonReport::add_verdict(std::string name, bool pass, std::string detail, bool statistical) {
  verdicts.push_back({std::move(name), pass, std::move(detail), statistical});
}

void ComparisonReport::finalize() {
  empirical_constant = 0.0;
  bool finite = !cells.empty();
  for (const auto& c : cells) {
    finite = finite && std::isfinite(c.ratio) && c.ratio > 0.0;
    empirical_constant = std::max(empirical_constant, c.ratio);
  }
  add_verdict("ratios finite and positive", finite, "max " + ratio_label + " = " + format_number(empirical_constant));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string report_to_json(const ComparisonReport& r) {
  nlohmann::json j;
  j["experiment"] = r.experiment;
  j["graph"] = r.graph;
  j["ratio_label"] = r.ratio_label;
  j["empirical_constant"] = json_number(r.empirical_constant);
  j["all_pass"] = r.all_pass();
  j["exact_pass"] = r.exact_pass();
  j["cells"] = nlohmann::json::array();
  for (const auto& c : r.cells) {
    nlohmann::json cell{{"mu", json_number(c.mu)},
                        {"p", json_number(c.p)},
                        {"full", json_number(c.full_value)},
                        {"srw", json_number(c.srw_value)},
                        {"ratio", json_number(c.ratio)}};
    for (const auto& [k, v] : c.extras) cell[k] = json_number(v);
    j["cells"].push_back(std::move(cell));
  }
  j["verdicts"] = nlohmann::json::array();
  for (const auto& v : r.verdicts) j["verdicts"].push_back(
        {{"name", v.name}, {"pass", v.pass}, {"statistical", v.statistical}, {"detail", v.detail}});
  return j.dump(2);
}

void write_report_csv(std::ostream& out, const ComparisonReport& r) {
  out << "mu,p,full,srw,ratio";
  if (!r.cells.empty())
    for (const auto& e : r.cells.front().extras) out << ',' << e.first;
  out << '\n';
  for (const auto& c : r.cells) {
    out << format_number(c.mu) << ',' << format_number(c.p) << ',' << format_number(c.full_value) << ','
        << format_number(c.srw_value) << ',' << format_number(c.ratio);
    for (const auto& e : c.extras) out << ',' << format_number(e.second);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

ComparisonReport check_hitting_comparison(const Graph& g, const ParamGrid& grid, const HittingComparisonOptions& opts) {
  if (!opts.exact && opts.mc_samples == 0)
    fail(ErrorCode::kInvalidArgument, "hitting comparison: enable the exact path or set a Monte Carlo budget");
  const std::size_t n = g.vertex_count();
  const std::size_t m = g.edge_count();
  const double srw = srw_worst_hitting(g);
  const auto cells = grid.cells();
  const Environment closed(m, false);

  struct PairCheck {
    double estimate;
    double se;
    double exact;
  };
  struct CellOut {
    ComparisonCell cell;
    std::vector<PairCheck> checks;
  };

  const std::size_t workers = resolve_workers(opts.workers);
  // Cells run one after another; the Monte Carlo estimators parallelize
  // internally over fixed chunks.
  std::vector<CellOut> outs;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const FullParams& prm = cells[ci];
    validate_params(prm);
    CellOut out;
    double exact_worst = kNaN;
    std::vector<std::vector<double>> exact_by_target;
    if (opts.exact) {
      exact_worst = 0.0;
      for (Vertex y = 0; y < n; ++y) {
        exact_by_target.push_back(full_hitting_times_to_vertex(g, prm, y, opts.exact_state_limit));
        for (double v : exact_by_target.back()) exact_worst = std::max(exact_worst, v);
      }
    }
    double mc_closed = kNaN;
    double mc_stationary = kNaN;
    if (opts.mc_samples > 0) {
      mc_closed = 0.0;
      mc_stationary = 0.0;
      std::uint64_t k = 0;
      for (Vertex x = 0; x < n; ++x) {
        for (Vertex y = 0; y < n; ++y) {
          if (x == y) continue;
          const std::uint64_t base = (static_cast<std::uint64_t>(ci) << 32) + 2 * k++;
          const auto c = estimate_hitting_time_full(g, prm, x, closed, y, opts.mc_samples,
                                                    derived_seed(opts.seed, base), workers);
          const auto s = estimate_hitting_time_full_stationary_env(g, prm, x, y, opts.mc_samples,
                                                                   derived_seed(opts.seed, base + 1), workers);
          mc_closed = std::max(mc_closed, c.mean);
          mc_stationary = std::max(mc_stationary, s.mean);
          if (opts.exact)
            out.checks.push_back({c.mean, c.std_error, exact_by_target[y][full_state_index(x, 0, m)]});
        }
      }
    }
    const double mc_worst = std::max(mc_closed, mc_stationary);
    const double full = opts.exact ? exact_worst : mc_worst;
    out.cell = {prm.mu, prm.p, full, srw, prm.p * full / srw,
                {{"exact_worst", exact_worst},
                 {"mc_closed_worst", mc_closed},
                 {"mc_stationary_worst", mc_stationary},
                 {"mc_ratio", prm.p * mc_worst / srw}}};
    outs.push_back(std::move(out));
  }

  ComparisonReport r;
  r.experiment = "hitting-comparison";
  r.graph = g.descriptor();
  r.ratio_label = "p t_hit^full / t_hit^SRW";
  std::size_t total_checks = 0;
  for (const auto& o : outs) {
    r.cells.push_back(o.cell);
    total_checks += o.checks.size();
  }
  r.finalize();
  if (total_checks > 0) {
    const double z = detail::normal_quantile(1.0 - 0.05 / (2.0 * static_cast<double>(total_checks)));
    double worst_z = 0.0;
    for (const auto& o : outs)
      for (const auto& c : o.checks) worst_z = std::max(worst_z, std::abs(c.estimate - c.exact) / c.se);
    r.add_verdict("exact and Monte Carlo hitting times agree (joint 95%)", worst_z <= z,
                  "max |z| = " + format_number(worst_z) + " vs " + format_number(z) + " over " +
                      std::to_string(total_checks) + " pairs",
                  true);
  }
  if (opts.exact) {
    bool dominates = true;
    for (const auto& c : r.cells) dominates = dominates && c.full_value >= c.srw_value * (1.0 - 1e-9);
    r.add_verdict("full worst hitting time dominates SRW", dominates);
  }
  return r;
}

ComparisonReport check_relaxation_comparison(const Graph& g, const ParamGrid& grid, std::size_t workers,
                                             std::size_t exact_state_limit) {
  const double srw = relaxation_time(srw_chain(g, true));
  const auto cells = grid.cells();
  const auto computed = parallel_map(cells.size(), resolve_workers(workers), [&](std::size_t i) {
    const FullParams& prm = cells[i];
    validate_params(prm);
    const double full = relaxation_time(build_full_generator(g, prm, exact_state_limit));
    return ComparisonCell{prm.mu, prm.p, full, srw, full * prm.mu * prm.p / srw, {{"env_t_rel", 1.0 / prm.mu}}};
  });
  ComparisonReport r;
  r.experiment = "relaxation-comparison";
  r.graph = g.descriptor();
  r.ratio_label = "mu p t_rel^full / t_rel^SRW";
  r.cells = computed;
  r.finalize();
  bool projection = true;
  for (const auto& c : r.cells) projection = projection && c.full_value >= (1.0 / c.mu) * (1.0 - 1e-9);
  r.add_verdict("t_rel^full >= t_rel of the environment alone", projection);
  return r;
}

ComparisonReport check_ls_comparison(const Graph& g, const ParamGrid& grid, std::size_t workers,
                                     std::uint64_t seed) {
  const ChainSpec srw = srw_chain(g, true);
  LogSobolevOptions lo;
  lo.seed = seed;
  lo.workers = workers;
  const LogSobolevResult srw_ls = log_sobolev_constant(srw, lo);
  const auto& pi = srw.stationary();
  const double pi_min = *std::min_element(pi.begin(), pi.end());
  const auto cells = grid.cells();
  std::vector<ComparisonCell> computed;
  bool brackets_ok = srw_ls.lower <= srw_ls.upper * (1.0 + 1e-9);
  for (const auto& prm : cells) {
    validate_params(prm);
    const LogSobolevResult full = log_sobolev_constant(build_full_generator(g, prm), lo);
    brackets_ok = brackets_ok && full.lower <= full.upper * (1.0 + 1e-9) &&
                  full.lower <= full.estimate * (1.0 + 1e-9);
    const double second = 1.0 / (std::log(1.0 / pi_min) * std::log(1.0 / (prm.p * (1.0 - prm.p))));
    const double rhs = prm.mu * std::min(prm.p * srw_ls.upper, second);
    computed.push_back({prm.mu, prm.p, full.lower, srw_ls.upper, rhs / full.lower,
                        {{"full_upper", full.upper},
                         {"full_estimate", full.estimate},
                         {"srw_lower", srw_ls.lower},
                         {"rhs", rhs},
                         {"second_term_active", second < prm.p * srw_ls.upper ? 1.0 : 0.0}}});
  }
  ComparisonReport r;
  r.experiment = "ls-comparison";
  r.graph = g.descriptor();
  r.ratio_label = "mu min(p c_LS^SRW, 1/(log(1/pi_*) log(1/(p(1-p))))) / c_LS^full";
  r.cells = std::move(computed);
  r.finalize();
  r.add_verdict("log-Sobolev brackets consistent", brackets_ok);
  return r;
}

ComparisonReport mixing_upper_bound_experiment(const Graph& g, const ParamGrid& grid, std::size_t workers,
                                               std::size_t exact_state_limit) {
  const double eps = 0.25;
  const double t_sp = spectral_profile_time(srw_chain(g, true), eps);
  const std::size_t m = g.edge_count();
  const auto cells = grid.cells();
  const auto computed = parallel_map(cells.size(), resolve_workers(workers), [&](std::size_t i) {
    const FullParams& prm = cells[i];
    validate_params(prm);
    const ChainSpec full = build_full_generator(g, prm, exact_state_limit);
    const double t_full = mixing_time(full, eps, DistanceNorm::kLinf, WorstCaseStart{}, exact_state_limit);
    const double additive = std::abs(std::log(1.0 - prm.p)) / prm.mu;
    const double rhs = t_sp / (prm.mu * prm.p) + additive;
    const double t_env = tilted_linf_mixing_time(m, prm.p, prm.mu, eps);
    const double env_bound = tilted_mixing_time_bound(m, prm.p, prm.mu, eps);
    return ComparisonCell{prm.mu, prm.p, t_full, rhs, t_full / rhs,
                          {{"t_sp_srw", t_sp},
                           {"additive_term", additive},
                           {"env_t_mix", t_env},
                           {"env_bound", env_bound},
                           {"env_share_of_additive", t_env / additive}}};
  });
  ComparisonReport r;
  r.experiment = "mixing-comparison";
  r.graph = g.descriptor();
  r.ratio_label = "t_mix^full / ((1/(mu p)) t_sp^SRW + |log(1-p)|/mu)";
  r.cells = computed;
  r.finalize();
  bool env_ok = true;
  bool projection = true;
  for (const auto& c : r.cells) {
    const double t_env = c.extras[2].second;
    env_ok = env_ok && t_env <= c.extras[3].second * (1.0 + 1e-12);
    projection = projection && c.full_value >= t_env * (1.0 - 1e-9);
  }
  r.add_verdict("environment Linf mixing time within tilted-hypercube bound", env_ok);
  r.add_verdict("full Linf mixing time >= environment Linf mixing time", projection);
  return r;
}

// ---------------------------------------------------------------------------

Cluster open_cluster(const Graph& g, const Environment& eta, Vertex base) {
  std::vector<char> in(g.vertex_count(), 0);
  Cluster c{{base}, 0};
  in[base] = 1;
  for (std::size_t head = 0; head < c.vertices.size(); ++head) {
    for (const auto& nb : g.neighbors(c.vertices[head])) {
      if (!eta.open(nb.edge) || in[nb.vertex]) continue;
      in[nb.vertex] = 1;
      c.vertices.push_back(nb.vertex);
    }
  }
  for (const auto& e : g.edges())
    if (in[e.u] != in[e.v]) ++c.boundary;
  return c;
}

namespace {

void require_transitive(const Graph& g) {
  if (!g.certified_transitive() && !looks_vertex_transitive(g))
    fail(ErrorCode::kNotTransitive, "cluster statistics need a vertex-transitive graph");
}

}  // namespace

ClusterStats cluster_stats(const Graph& g, double p, ClusterMethod method, std::size_t budget, std::uint64_t seed,
                           Vertex base, std::size_t workers) {
  require_transitive(g);
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::kInvalidArgument, "cluster_stats: p must lie in [0, 1]");
  if (base >= g.vertex_count()) fail(ErrorCode::kOutOfRange, "cluster_stats: base vertex out of range");
  const std::size_t m = g.edge_count();
  workers = resolve_workers(workers);
  ClusterStats s{};
  s.method = method;
  s.base = base;

  if (method == ClusterMethod::kExact) {
    if (m > 20) fail(ErrorCode::kTooLarge, "cluster_stats: exact enumeration needs |E| <= 20");
    const ChunkPlan plan{std::size_t{1} << m, 4096};
    const auto parts = parallel_map(plan.count(), workers, [&](std::size_t k) {
      std::pair<double, double> acc{0.0, 0.0};
      for (std::size_t i = 0; i < plan.size_of(k); ++i) {
        const auto idx = static_cast<std::uint64_t>(k * plan.chunk + i);
        const Environment eta = Environment::from_index(m, idx);
        const auto open = static_cast<double>(eta.count_open());
        const double w = std::pow(p, open) * std::pow(1.0 - p, static_cast<double>(m) - open);
        if (w == 0.0) continue;
        const Cluster c = open_cluster(g, eta, base);
        const auto size = static_cast<double>(c.vertices.size());
        acc.first += w * static_cast<double>(c.boundary) * size * size;
        acc.second += w * size;
      }
      return acc;
    });
    for (const auto& [mp, np] : parts) {
      s.m_p += mp;
      s.n_p += np;
    }
    s.samples = plan.total;
    return s;
  }

  if (budget == 0) fail(ErrorCode::kInvalidArgument, "cluster_stats: Monte Carlo budget must be positive");
  const ChunkPlan plan{budget, 10000};
  const SeedStream stream(seed);
  const auto parts = parallel_map(plan.count(), workers, [&](std::size_t k) {
    Rng rng = stream.engine(k);
    std::pair<detail::RunningMoments, detail::RunningMoments> acc;
    for (std::size_t i = 0; i < plan.size_of(k); ++i) {
      const Cluster c = open_cluster(g, sample_environment(g, p, rng), base);
      const auto size = static_cast<double>(c.vertices.size());
      acc.first.add(static_cast<double>(c.boundary) * size * size);
      acc.second.add(size);
    }
    return acc;
  });
  detail::RunningMoments mm;
  detail::RunningMoments nm;
  for (const auto& [a, b] : parts) {
    mm.merge(a);
    nm.merge(b);
  }
  s.m_p = mm.mean();
  s.n_p = nm.mean();
  s.m_se = mm.std_error();
  s.n_se = nm.std_error();
  s.samples = budget;
  return s;
}

std::vector<double> cluster_distance_function(const Graph& g, Vertex origin) {
  const std::size_t n = g.vertex_count();
  const std::size_t m = g.edge_count();
  if (m > 20) fail(ErrorCode::kTooLarge, "cluster_distance_function: needs |E| <= 20");
  const auto dist = bfs_distances(g, origin);
  std::vector<double> f(n << m);
  std::vector<double> mean_of(n);
  for (std::uint64_t idx = 0; idx < (std::uint64_t{1} << m); ++idx) {
    const Environment eta = Environment::from_index(m, idx);
    std::vector<char> done(n, 0);
    for (Vertex x = 0; x < n; ++x) {
      if (done[x]) continue;
      const Cluster c = open_cluster(g, eta, x);
      double sum = 0.0;
      for (Vertex v : c.vertices) sum += static_cast<double>(dist[v]);
      const double mean = sum / static_cast<double>(c.vertices.size());
      for (Vertex v : c.vertices) {
        done[v] = 1;
        mean_of[v] = mean;
      }
    }
    for (Vertex x = 0; x < n; ++x) f[full_state_index(x, idx, m)] = mean_of[x];
  }
  return f;
}

ModerateGrowthResult moderate_growth_lower_bound(const Graph& g, const FullParams& params,
                                                 const ModerateGrowthOptions& opts) {
  validate_params(params);
  require_transitive(g);
  const bool exact = g.edge_count() <= 20;
  const auto method = exact ? ClusterMethod::kExact : ClusterMethod::kMonteCarlo;
  ModerateGrowthResult r{};
  r.stats = cluster_stats(g, params.p, method);
  r.diameter = diameter(g);
  const double gamma = static_cast<double>(r.diameter);
  r.applicable = r.stats.n_p <= gamma / 4.0;
  if (!r.applicable && opts.strict)
    fail(ErrorCode::kPreconditionFailed, "moderate growth bound: N_p exceeds diameter / 4");
  r.bound = r.applicable ? (gamma - 4.0 * r.stats.n_p) * (gamma - 4.0 * r.stats.n_p) /
                               (params.mu * params.p * r.stats.m_p)
                         : kNaN;
  if (exact && g.vertex_count() > 1) {
    const ClusterStats alt = cluster_stats(g, params.p, method, 0, 0, 1);
    r.alternate_base_gap = std::max(std::abs(alt.m_p - r.stats.m_p), std::abs(alt.n_p - r.stats.n_p));
  } else {
    r.alternate_base_gap = kNaN;
  }

  const ChainSpec full = build_full_generator(g, params, opts.exact_state_limit);
  const auto f = cluster_distance_function(g, 0);
  r.dirichlet_f = dirichlet_form(full, f);
  r.variance_f = variance(full.stationary(), f);
  r.variational = r.variance_f / r.dirichlet_f;
  r.t_rel_full = relaxation_time(full);
  r.bkk_rhs = 4.0 * params.mu * params.p * r.stats.m_p;
  r.bkk_holds = r.dirichlet_f <= r.bkk_rhs * (1.0 + 1e-8);
  r.variational_holds = r.variational <= r.t_rel_full * (1.0 + 1e-8);
  return r;
}

}  // namespace dynperc
