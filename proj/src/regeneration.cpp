#include "dynperc/regeneration.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>

#include "dynperc/error.hpp"
#include "dynperc/parallel.hpp"
#include "stats_internal.hpp"

namespace dynperc {

namespace {

constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();

}  // namespace

InfectedWalk::InfectedWalk(const Graph& g, FullParams params, Vertex x0, Environment eta0, InitialInfection init,
                           Rng rng)
    : g_(&g), params_(params), pos_(x0), env_(std::move(eta0)), rng_(std::move(rng)) {
  validate_params(params);
  const std::size_t m = g.edge_count();
  if (m == 0) fail(ErrorCode::kInvalidArgument, "infection process needs at least one edge");
  if (x0 >= g.vertex_count()) fail(ErrorCode::kOutOfRange, "start vertex out of range");
  if (env_.size() != m) fail(ErrorCode::kInvalidArgument, "environment size does not match |E|");
  real_.assign(m, 0);
  copies_.assign(m, 0);
  free_pos_.assign(m, kNoSlot);
  refresh_counts_.assign(m, 0);
  for (EdgeId e = 0; e < m; ++e) {
    if (init == InitialInfection::kAllEdges) {
      real_[e] = 1;
      tokens_.push_back(e);
    } else {
      free_edge(e);
    }
  }
}

void InfectedWalk::set_instrumented(bool on) {
  instrumented_ = on;
  if (on) {
    // Treat the initial real elements as examined at time 0 and everything
    // else as refreshed at time 0.
    const std::size_t m = g_->edge_count();
    last_exam_.assign(m, -1.0);
    last_refresh_.assign(m, -1.0);
    for (EdgeId e = 0; e < m; ++e) (real_[e] ? last_exam_ : last_refresh_)[e] = time_;
  }
}

void InfectedWalk::free_edge(EdgeId e) {
  free_pos_[e] = free_.size();
  free_.push_back(e);
}

void InfectedWalk::unfree_edge(EdgeId e) {
  const std::size_t slot = free_pos_[e];
  const EdgeId last = free_.back();
  free_[slot] = last;
  free_pos_[last] = slot;
  free_.pop_back();
  free_pos_[e] = kNoSlot;
}

void InfectedWalk::refresh(EdgeId e) {
  env_.set(e, bernoulli(rng_, params_.p));
  ++refresh_counts_[e];
  if (instrumented_) last_refresh_[e] = time_;
}

void InfectedWalk::add_element(EdgeId e) {
  if (real_[e]) {
    ++copies_[e];
  } else {
    real_[e] = 1;
    unfree_edge(e);
  }
  tokens_.push_back(e);
}

void InfectedWalk::check_edge(EdgeId e) {
  ++invariant_checks_;
  const bool examined_since_refresh = last_exam_[e] > last_refresh_[e];
  if (examined_since_refresh != (real_[e] != 0)) ++invariant_violations_;
}

bool InfectedWalk::invariant_holds() const {
  if (!instrumented_) return true;
  for (EdgeId e = 0; e < g_->edge_count(); ++e) {
    if ((last_exam_[e] > last_refresh_[e]) != (real_[e] != 0)) return false;
    if ((free_pos_[e] == kNoSlot) != (real_[e] != 0)) return false;
  }
  return true;
}

InfectionEvent InfectedWalk::step() {
  const double mu = params_.mu;
  const double removal_rate = mu * static_cast<double>(tokens_.size());
  const double free_rate = mu * static_cast<double>(free_.size());
  const double total = 1.0 + removal_rate + free_rate;
  time_ += exponential(rng_, total);
  const double u = uniform01(rng_) * total;

  InfectionEvent ev{time_, InfectionEventKind::kWalkAttempt, 0};
  if (u < 1.0) {
    const auto nbrs = g_->neighbors(pos_);
    const auto& nb = nbrs[uniform_index(rng_, nbrs.size())];
    ++walk_attempts_;
    if (env_.open(nb.edge)) pos_ = nb.vertex;
    add_element(nb.edge);
    if (instrumented_) last_exam_[nb.edge] = time_;
    ev.edge = nb.edge;
  } else if (u < 1.0 + removal_rate) {
    // Uniform element of R: a uniform token names the edge, then a uniform
    // sub-element among its real element and copies.
    const auto idx = static_cast<std::size_t>(uniform_index(rng_, tokens_.size()));
    const EdgeId e = tokens_[idx];
    tokens_[idx] = tokens_.back();
    tokens_.pop_back();
    const std::uint64_t held = static_cast<std::uint64_t>(real_[e]) + copies_[e];
    const bool take_real = real_[e] && uniform_index(rng_, held) == 0;
    if (take_real) {
      real_[e] = 0;
      free_edge(e);
      refresh(e);
      ev.kind = InfectionEventKind::kRemoveReal;
    } else {
      --copies_[e];
      ev.kind = InfectionEventKind::kRemoveCopy;
    }
    ev.edge = e;
  } else {
    const EdgeId e = free_[uniform_index(rng_, free_.size())];
    refresh(e);
    ev.kind = InfectionEventKind::kFreeRefresh;
    ev.edge = e;
  }
  if (instrumented_) check_edge(ev.edge);
  return ev;
}

double InfectedWalk::run_to_regeneration() {
  if (tokens_.empty()) {
    while (tokens_.empty()) step();
  }
  while (!tokens_.empty()) step();
  return time_;
}

// ---------------------------------------------------------------------------

RegenerationTrace simulate_with_infection(const Graph& g, const FullParams& params, Vertex x0,
                                          const Environment& eta0, InitialInfection init, std::size_t n_regens,
                                          std::uint64_t seed) {
  if (n_regens == 0) fail(ErrorCode::kInvalidArgument, "n_regens must be at least 1");
  InfectedWalk walk(g, params, x0, eta0, init, SeedStream(seed).engine(0));
  RegenerationTrace trace;
  trace.taus.reserve(n_regens + 1);
  trace.positions.reserve(n_regens + 1);
  trace.spacings.reserve(n_regens);
  trace.taus.push_back(0.0);
  trace.positions.push_back(x0);
  for (std::size_t i = 0; i < n_regens; ++i) {
    const double tau = walk.run_to_regeneration();
    trace.spacings.push_back(tau - trace.taus.back());
    trace.taus.push_back(tau);
    trace.positions.push_back(walk.position());
  }
  return trace;
}

void write_trace_csv(std::ostream& out, const RegenerationTrace& trace) {
  const auto old_precision = out.precision(12);
  out << "i,tau,spacing,position\n";
  for (std::size_t i = 0; i < trace.taus.size(); ++i) {
    out << i << ',' << trace.taus[i] << ',';
    if (i > 0) out << trace.spacings[i - 1];
    out << ',' << trace.positions[i] << '\n';
  }
  out.precision(old_precision);
}

namespace {

constexpr std::size_t kChunk = 1000;

MeanEstimate finish(const detail::RunningMoments& m) {
  const double z = detail::normal_quantile(0.975);
  const double se = m.std_error();
  return {m.mean(), se, m.mean() - z * se, m.mean() + z * se, m.count()};
}

}  // namespace

MeanEstimate first_regeneration_from_all_infected(const Graph& g, const FullParams& params, std::uint64_t seed,
                                                  std::size_t n_samples, std::size_t workers) {
  validate_params(params);
  if (n_samples == 0) fail(ErrorCode::kInvalidArgument, "n_samples must be at least 1");
  const ChunkPlan plan{n_samples, kChunk};
  const SeedStream stream(seed);
  const auto parts = parallel_map(plan.count(), resolve_workers(workers), [&](std::size_t k) {
    Rng rng = stream.engine(k);
    detail::RunningMoments acc;
    for (std::size_t i = 0; i < plan.size_of(k); ++i) {
      Environment env = sample_environment(g, params.p, rng);
      InfectedWalk walk(g, params, 0, std::move(env), InitialInfection::kAllEdges, std::move(rng));
      acc.add(walk.run_to_regeneration());
      rng = std::move(walk.rng());
    }
    return acc;
  });
  detail::RunningMoments total;
  for (const auto& p : parts) total.merge(p);
  return finish(total);
}

double birth_death_emptying_time(std::size_t k, double mu) {
  if (!(mu > 0.0)) fail(ErrorCode::kInvalidArgument, "mu must be positive");
  // E_j[T_{j-1}] = P(N >= j) / (pi_j mu j) with N ~ Poisson(1/mu).
  const double lambda = 1.0 / mu;
  double total = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    // P(N >= j) / pi_j = sum_{i >= j} lambda^{i-j} j! / i!
    double ratio = 0.0;
    double term = 1.0;
    for (std::size_t i = j; term > 1e-18 * ratio || i == j; ++i) {
      ratio += term;
      term *= lambda / static_cast<double>(i + 1);
    }
    total += ratio / (mu * static_cast<double>(j));
  }
  return total;
}

std::vector<Vertex> aux_chain_sample(const Graph& g, const FullParams& params, Vertex x0, std::size_t n_steps,
                                     std::uint64_t seed) {
  Rng rng = SeedStream(seed).engine(0);
  Environment env = sample_environment(g, params.p, rng);
  InfectedWalk walk(g, params, x0, std::move(env), InitialInfection::kEmpty, std::move(rng));
  std::vector<Vertex> out;
  out.reserve(n_steps);
  for (std::size_t i = 0; i < n_steps; ++i) {
    walk.run_to_regeneration();
    out.push_back(walk.position());
  }
  return out;
}

AuxTransitionEstimate estimate_aux_transition(const Graph& g, const FullParams& params,
                                              std::size_t n_samples_per_state, std::uint64_t seed,
                                              std::size_t workers) {
  validate_params(params);
  if (n_samples_per_state == 0) fail(ErrorCode::kInvalidArgument, "n_samples_per_state must be at least 1");
  const std::size_t n = g.vertex_count();
  const ChunkPlan plan{n_samples_per_state, kChunk * 10};
  const std::size_t per_state = plan.count();
  const SeedStream stream(seed);
  const auto parts = parallel_map(n * per_state, resolve_workers(workers), [&](std::size_t job) {
    const auto x = static_cast<Vertex>(job / per_state);
    const std::size_t k = job % per_state;
    Rng rng = stream.engine(job);
    std::vector<std::uint64_t> counts(n, 0);
    for (std::size_t i = 0; i < plan.size_of(k); ++i) {
      Environment env = sample_environment(g, params.p, rng);
      InfectedWalk walk(g, params, x, std::move(env), InitialInfection::kEmpty, std::move(rng));
      walk.run_to_regeneration();
      ++counts[walk.position()];
      rng = std::move(walk.rng());
    }
    return counts;
  });
  AuxTransitionEstimate est;
  est.samples_per_state = n_samples_per_state;
  est.counts.assign(n, std::vector<std::uint64_t>(n, 0));
  for (std::size_t job = 0; job < parts.size(); ++job)
    for (std::size_t y = 0; y < n; ++y) est.counts[job / per_state][y] += parts[job][y];
  est.p.assign(n, std::vector<double>(n, 0.0));
  est.ci_low = est.p;
  est.ci_high = est.p;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      est.p[x][y] = static_cast<double>(est.counts[x][y]) / static_cast<double>(n_samples_per_state);
      const auto [lo, hi] = detail::wilson_interval(est.counts[x][y], n_samples_per_state);
      est.ci_low[x][y] = lo;
      est.ci_high[x][y] = hi;
    }
  }
  return est;
}

IndependenceResult regeneration_independence_test(const Graph& g, const FullParams& params, std::size_t n_samples,
                                                  std::uint64_t seed, Vertex x0, std::size_t workers) {
  validate_params(params);
  const std::size_t m = g.edge_count();
  if (m > 6 || (g.vertex_count() << m) > 64) {
    fail(ErrorCode::kTooLarge, "independence test needs |V| 2^|E| <= 64");
  }
  if (n_samples == 0) fail(ErrorCode::kInvalidArgument, "n_samples must be at least 1");
  const std::size_t envs = std::size_t{1} << m;
  const std::size_t cells = g.vertex_count() * envs;
  const ChunkPlan plan{n_samples, kChunk * 10};
  const SeedStream stream(seed);
  const auto parts = parallel_map(plan.count(), resolve_workers(workers), [&](std::size_t k) {
    Rng rng = stream.engine(k);
    std::vector<std::uint64_t> counts(cells, 0);
    for (std::size_t i = 0; i < plan.size_of(k); ++i) {
      Environment env = sample_environment(g, params.p, rng);
      InfectedWalk walk(g, params, x0, std::move(env), InitialInfection::kEmpty, std::move(rng));
      walk.run_to_regeneration();
      ++counts[full_state_index(walk.position(), walk.environment().index(), m)];
      rng = std::move(walk.rng());
    }
    return counts;
  });
  IndependenceResult res;
  res.samples = n_samples;
  res.joint_counts.assign(cells, 0);
  for (const auto& part : parts)
    for (std::size_t c = 0; c < cells; ++c) res.joint_counts[c] += part[c];

  const double total = static_cast<double>(n_samples);
  std::vector<double> px(g.vertex_count(), 0.0);
  std::vector<double> pe(envs, 0.0);
  for (std::size_t x = 0; x < g.vertex_count(); ++x) {
    for (std::size_t e = 0; e < envs; ++e) {
      const double f = static_cast<double>(res.joint_counts[full_state_index(x, e, m)]) / total;
      px[x] += f;
      pe[e] += f;
    }
  }
  double tv_marg = 0.0;
  for (std::size_t e = 0; e < envs; ++e) {
    const auto open = static_cast<double>(std::popcount(e));
    const double target = std::pow(params.p, open) * std::pow(1.0 - params.p, static_cast<double>(m) - open);
    tv_marg += std::abs(pe[e] - target);
  }
  double tv_prod = 0.0;
  for (std::size_t x = 0; x < g.vertex_count(); ++x) {
    for (std::size_t e = 0; e < envs; ++e) {
      const double f = static_cast<double>(res.joint_counts[full_state_index(x, e, m)]) / total;
      tv_prod += std::abs(f - px[x] * pe[e]);
    }
  }
  res.tv_marginal = 0.5 * tv_marg;
  res.tv_product_gap = 0.5 * tv_prod;
  return res;
}

OccupancyResult infection_occupancy_test(const Graph& g, const FullParams& params, std::size_t n_events,
                                         std::uint64_t seed, double spacing) {
  validate_params(params);
  if (spacing <= 0.0) spacing = 5.0 / params.mu;
  const double burn_in = 10.0 / params.mu;
  Rng rng = SeedStream(seed).engine(0);
  Environment env = sample_environment(g, params.p, rng);
  InfectedWalk walk(g, params, 0, std::move(env), InitialInfection::kEmpty, std::move(rng));
  OccupancyResult res{};
  double next = burn_in;
  std::size_t size_before = 0;
  for (std::size_t i = 0; i < n_events; ++i) {
    size_before = walk.infected_size();
    const double t = walk.step().time;
    // |R| on [previous event, t) was size_before; record every grid time passed.
    while (next < t) {
      if (res.histogram.size() <= size_before) res.histogram.resize(size_before + 1, 0);
      ++res.histogram[size_before];
      ++res.snapshots;
      next += spacing;
    }
  }
  const double lambda = 1.0 / params.mu;
  std::vector<double> observed(res.histogram.begin(), res.histogram.end());
  std::vector<double> expected(observed.size());
  double log_p = -lambda;
  double sum = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    if (k > 0) log_p += std::log(lambda) - std::log(static_cast<double>(k));
    expected[k] = std::exp(log_p);
    sum += observed[k] * static_cast<double>(k);
  }
  res.mean = res.snapshots > 0 ? sum / static_cast<double>(res.snapshots) : 0.0;
  const auto chi = detail::chi_square_test(observed, expected);
  res.chi2 = chi.statistic;
  res.dof = chi.dof;
  res.p_value = chi.p_value;
  return res;
}

SpacingDiagnostics spacing_diagnostics(const std::vector<double>& spacings, std::size_t lags) {
  if (spacings.size() < 2 * lags + 10) fail(ErrorCode::kInvalidArgument, "too few spacings for diagnostics");
  SpacingDiagnostics d{};
  detail::RunningMoments m;
  for (double s : spacings) m.add(s);
  d.mean = m.mean();
  d.std_error = m.std_error();
  const auto [q, pv] = detail::ljung_box(spacings, lags);
  d.ljung_box_q = q;
  d.ljung_box_p = pv;

  // Fit log S(t) = a - r t over the empirical survival between the median
  // and the 0.1% tail.
  std::vector<double> sorted = spacings;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const std::size_t first = n / 2;
  const std::size_t last = n - std::max<std::size_t>(10, n / 1000);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  std::size_t pts = 0;
  const std::size_t stride = std::max<std::size_t>(1, (last - first) / 200);
  for (std::size_t i = first; i < last; i += stride) {
    const double x = sorted[i];
    const double y = std::log(static_cast<double>(n - i) / static_cast<double>(n));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++pts;
  }
  const double np = static_cast<double>(pts);
  const double cov = sxy - sx * sy / np;
  const double vx = sxx - sx * sx / np;
  const double vy = syy - sy * sy / np;
  d.tail_rate = -cov / vx;
  d.tail_r2 = vy > 0.0 ? cov * cov / (vx * vy) : 1.0;
  return d;
}

InvariantReport run_invariant_check(const Graph& g, const FullParams& params, std::size_t n_events,
                                    std::uint64_t seed) {
  Rng rng = SeedStream(seed).engine(0);
  Environment env = sample_environment(g, params.p, rng);
  InfectedWalk walk(g, params, 0, std::move(env), InitialInfection::kEmpty, std::move(rng));
  walk.set_instrumented(true);
  bool scans_ok = true;
  for (std::size_t i = 0; i < n_events; ++i) {
    walk.step();
    if (i % 4096 == 0) scans_ok = scans_ok && walk.invariant_holds();
  }
  scans_ok = scans_ok && walk.invariant_holds();
  return {n_events, walk.invariant_checks(), walk.invariant_violations(), scans_ok};
}

RefreshRateReport refresh_rate_check(const Graph& g, const FullParams& params, double horizon,
                                     std::size_t replicates, std::uint64_t seed, std::size_t workers) {
  validate_params(params);
  if (!(horizon > 0.0) || replicates < 2) fail(ErrorCode::kInvalidArgument, "need horizon > 0 and >= 2 replicates");
  const std::size_t m = g.edge_count();
  const SeedStream stream(seed);
  const auto runs = parallel_map(replicates, resolve_workers(workers), [&](std::size_t r) {
    Rng rng = stream.engine(r);
    Environment env = sample_environment(g, params.p, rng);
    InfectedWalk walk(g, params, 0, std::move(env), InitialInfection::kEmpty, std::move(rng));
    // Count refreshes strictly before the horizon.
    std::vector<std::uint64_t> counts(m, 0);
    for (;;) {
      const auto ev = walk.step();
      if (ev.time > horizon) break;
      if (ev.kind == InfectionEventKind::kRemoveReal || ev.kind == InfectionEventKind::kFreeRefresh) ++counts[ev.edge];
    }
    return counts;
  });
  RefreshRateReport rep;
  rep.horizon = horizon;
  rep.replicates = replicates;
  rep.mean_counts.assign(m, 0.0);
  rep.var_counts.assign(m, 0.0);
  const double expect = params.mu * horizon;
  double dispersion = 0.0;
  for (std::size_t e = 0; e < m; ++e) {
    detail::RunningMoments acc;
    for (const auto& run : runs) {
      acc.add(static_cast<double>(run[e]));
      const double d = static_cast<double>(run[e]) - expect;
      dispersion += d * d / expect;
    }
    rep.mean_counts[e] = acc.mean();
    rep.var_counts[e] = acc.variance();
  }
  rep.max_abs_z = 0.0;
  for (std::size_t e = 0; e < m; ++e) {
    const double z = (rep.mean_counts[e] - expect) / std::sqrt(expect / static_cast<double>(replicates));
    rep.max_abs_z = std::max(rep.max_abs_z, std::abs(z));
  }
  // Under Poisson(mu t) counts, the summed squared standardized deviations
  // are approximately chi-square with m * replicates degrees of freedom.
  const double dof = static_cast<double>(m * replicates);
  const double upper = detail::chi_squared_survival(dispersion, dof);
  rep.dispersion_p = 2.0 * std::min(upper, 1.0 - upper);
  return rep;
}

WaldReport wald_cross_estimate(const Graph& g, const FullParams& params, Vertex x, Vertex y, std::size_t n_samples,
                               std::uint64_t seed, std::size_t workers) {
  validate_params(params);
  if (x == y) fail(ErrorCode::kSameState, "Wald cross-estimate needs distinct vertices");
  if (x >= g.vertex_count() || y >= g.vertex_count()) fail(ErrorCode::kOutOfRange, "vertex out of range");
  if (params.p == 0.0) fail(ErrorCode::kSingularSystem, "p = 0: the walk never moves");
  struct Part {
    detail::RunningMoments direct, regen, steps, diff;
  };
  const double mean_spacing = std::exp(1.0 / params.mu);
  const ChunkPlan plan{n_samples, kChunk};
  const SeedStream stream(seed);
  const auto parts = parallel_map(plan.count(), resolve_workers(workers), [&](std::size_t k) {
    Rng rng = stream.engine(k);
    Part part;
    for (std::size_t i = 0; i < plan.size_of(k); ++i) {
      Environment env = sample_environment(g, params.p, rng);
      InfectedWalk walk(g, params, x, std::move(env), InitialInfection::kEmpty, std::move(rng));
      double hit = -1.0;
      std::size_t steps = 0;
      double tau = 0.0;
      for (;;) {
        // One regeneration period, watching the walk coordinate event by event.
        while (walk.infected_size() == 0) {
          const auto ev = walk.step();
          if (hit < 0.0 && walk.position() == y) hit = ev.time;
        }
        while (walk.infected_size() != 0) {
          const auto ev = walk.step();
          if (hit < 0.0 && walk.position() == y) hit = ev.time;
        }
        ++steps;
        tau = walk.time();
        if (walk.position() == y) break;
      }
      part.direct.add(hit);
      part.regen.add(tau);
      part.steps.add(static_cast<double>(steps));
      part.diff.add(tau - mean_spacing * static_cast<double>(steps));
      rng = std::move(walk.rng());
    }
    return part;
  });
  Part total;
  for (const auto& p : parts) {
    total.direct.merge(p.direct);
    total.regen.merge(p.regen);
    total.steps.merge(p.steps);
    total.diff.merge(p.diff);
  }
  WaldReport rep{};
  rep.direct = finish(total.direct);
  rep.regen_time = finish(total.regen);
  rep.aux_steps = finish(total.steps);
  rep.wald_prediction = mean_spacing * total.steps.mean();
  rep.wald_difference = total.diff.mean();
  rep.wald_difference_se = total.diff.std_error();
  return rep;
}

}  // namespace dynperc
