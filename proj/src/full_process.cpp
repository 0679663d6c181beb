#include "dynperc/full_process.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>

#include "dynperc/error.hpp"
#include "dynperc/parallel.hpp"
#include "stats_internal.hpp"

namespace dynperc {

Environment::Environment(std::size_t edges, bool open)
    : words_((edges + 63) / 64, open ? ~0ULL : 0ULL), size_(edges) {
  if (open && edges % 64 != 0) words_.back() = (1ULL << (edges % 64)) - 1;
}

Environment Environment::from_index(std::size_t edges, std::uint64_t index) {
  if (edges > 64) fail(ErrorCode::kTooLarge, "environment index needs at most 64 edges");
  Environment env(edges);
  if (edges > 0) env.words_[0] = edges == 64 ? index : index & ((1ULL << edges) - 1);
  return env;
}

std::size_t Environment::count_open() const {
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

std::uint64_t Environment::index() const {
  if (size_ > 64) fail(ErrorCode::kTooLarge, "environment index needs at most 64 edges");
  return words_.empty() ? 0 : words_[0];
}

std::vector<std::string> validate_params(const FullParams& params) {
  if (!(params.mu > 0.0) || !std::isfinite(params.mu)) fail(ErrorCode::kInvalidArgument, "mu must be positive");
  if (!(params.p >= 0.0 && params.p <= 1.0)) fail(ErrorCode::kInvalidArgument, "p must lie in [0, 1]");
  std::vector<std::string> warnings;
  if (params.mu > 1.0) {
    warnings.push_back("mu = " + std::to_string(params.mu) +
                       " > 1: comparison constants are only stated for mu in (0, 1]");
  }
  return warnings;
}

Environment sample_environment(const Graph& g, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::kInvalidArgument, "p must lie in [0, 1]");
  Environment env(g.edge_count());
  for (EdgeId e = 0; e < g.edge_count(); ++e) env.set(e, bernoulli(rng, p));
  return env;
}

Environment sample_environment(const Graph& g, double p, std::uint64_t seed) {
  Rng rng = SeedStream(seed).engine(0);
  return sample_environment(g, p, rng);
}

FullProcessSimulator::FullProcessSimulator(const Graph& g, FullParams params, Vertex x0, Environment eta0, Rng rng)
    : g_(&g), params_(params), pos_(x0), env_(std::move(eta0)), rng_(std::move(rng)) {
  validate_params(params);
  if (x0 >= g.vertex_count()) fail(ErrorCode::kOutOfRange, "start vertex out of range");
  if (env_.size() != g.edge_count()) fail(ErrorCode::kInvalidArgument, "environment size does not match |E|");
  if (g.edge_count() == 0) fail(ErrorCode::kInvalidArgument, "full process needs at least one edge");
  total_rate_ = 1.0 + params.mu * static_cast<double>(g.edge_count());
  walk_share_ = 1.0 / total_rate_;
}

FullEvent FullProcessSimulator::step() {
  time_ += exponential(rng_, total_rate_);
  if (uniform01(rng_) < walk_share_) {
    const auto nbrs = g_->neighbors(pos_);
    const auto& nb = nbrs[uniform_index(rng_, nbrs.size())];
    const bool open = env_.open(nb.edge);
    if (open) pos_ = nb.vertex;
    return {time_, EventKind::kWalkAttempt, nb.edge, open, pos_};
  }
  const auto e = static_cast<EdgeId>(uniform_index(rng_, g_->edge_count()));
  const bool value = bernoulli(rng_, params_.p);
  env_.set(e, value);
  return {time_, EventKind::kRefresh, e, value, pos_};
}

FullTrajectory simulate(const Graph& g, const FullParams& params, Vertex x0, const Environment& eta0,
                        double horizon, std::uint64_t seed) {
  if (!(horizon > 0.0)) fail(ErrorCode::kInvalidArgument, "horizon must be positive");
  FullProcessSimulator sim(g, params, x0, eta0, SeedStream(seed).engine(0));
  FullTrajectory traj;
  traj.x0 = x0;
  traj.eta0 = eta0;
  traj.horizon = horizon;
  Vertex pos = x0;
  Environment env = eta0;
  for (;;) {
    const FullEvent ev = sim.step();
    if (ev.time > horizon) break;
    traj.events.push_back(ev);
    pos = ev.walk_pos;
    if (ev.kind == EventKind::kRefresh) env.set(ev.edge, ev.open);
  }
  traj.final_pos = pos;
  traj.final_env = std::move(env);
  return traj;
}

void write_trajectory_csv(std::ostream& out, const FullTrajectory& traj) {
  const auto old_precision = out.precision(12);
  out << "time,kind,edge,open,walk_pos\n";
  for (const auto& ev : traj.events) {
    out << ev.time << ',' << (ev.kind == EventKind::kWalkAttempt ? "walk" : "refresh") << ',' << ev.edge << ','
        << (ev.open ? 1 : 0) << ',' << ev.walk_pos << '\n';
  }
  out.precision(old_precision);
}

namespace {

std::size_t checked_full_states(const Graph& g, std::size_t limit) {
  const std::size_t m = g.edge_count();
  if (m > 20) fail(ErrorCode::kTooLarge, "exact full process needs |E| <= 20");
  const std::size_t states = g.vertex_count() << m;
  if (states > limit) {
    fail(ErrorCode::kTooLarge, "full state space has " + std::to_string(states) + " states, limit is " +
                                   std::to_string(limit));
  }
  return states;
}

}  // namespace

SparseMatrix full_rate_matrix(const Graph& g, const FullParams& params, std::size_t exact_state_limit) {
  validate_params(params);
  const std::size_t states = checked_full_states(g, exact_state_limit);
  const std::size_t m = g.edge_count();
  const double open_rate = params.mu * params.p;
  const double close_rate = params.mu * (1.0 - params.p);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(states * (m + 4));
  for (std::size_t x = 0; x < g.vertex_count(); ++x) {
    const double walk_rate = 1.0 / static_cast<double>(g.degree(static_cast<Vertex>(x)));
    for (std::uint64_t eta = 0; eta < (1ULL << m); ++eta) {
      const auto s = static_cast<int>(full_state_index(x, eta, m));
      double out = 0.0;
      for (const auto& nb : g.neighbors(static_cast<Vertex>(x))) {
        if (!(eta >> nb.edge & 1ULL)) continue;
        t.emplace_back(s, static_cast<int>(full_state_index(nb.vertex, eta, m)), walk_rate);
        out += walk_rate;
      }
      for (std::size_t e = 0; e < m; ++e) {
        const bool is_open = eta >> e & 1ULL;
        const double rate = is_open ? close_rate : open_rate;
        if (rate == 0.0) continue;
        t.emplace_back(s, static_cast<int>(full_state_index(x, eta ^ (1ULL << e), m)), rate);
        out += rate;
      }
      t.emplace_back(s, s, -out);
    }
  }
  SparseMatrix q(static_cast<int>(states), static_cast<int>(states));
  q.setFromTriplets(t.begin(), t.end());
  q.makeCompressed();
  return q;
}

ChainSpec build_full_generator(const Graph& g, const FullParams& params, std::size_t exact_state_limit) {
  validate_params(params);
  if (params.p <= 0.0 || params.p >= 1.0) {
    fail(ErrorCode::kDegenerateP, "exact full generator needs p in (0, 1)");
  }
  const SparseMatrix q = full_rate_matrix(g, params, exact_state_limit);
  const std::size_t m = g.edge_count();
  const auto pi_v = stationary_distribution(g).weights();
  std::vector<double> pi(static_cast<std::size_t>(q.rows()));
  for (std::size_t x = 0; x < g.vertex_count(); ++x) {
    for (std::uint64_t eta = 0; eta < (1ULL << m); ++eta) {
      const auto open = static_cast<double>(std::popcount(eta));
      pi[full_state_index(x, eta, m)] =
          pi_v[x] * std::pow(params.p, open) * std::pow(1.0 - params.p, static_cast<double>(m) - open);
    }
  }
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(q.nonZeros()));
  for (int r = 0; r < q.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(q, r); it; ++it)
      entries.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(it.col()), it.value()});
  const std::size_t states = pi.size();
  return ChainSpec(ChainKind::kGenerator, states, entries, std::move(pi), true);
}

std::vector<double> full_hitting_times_to_vertex(const Graph& g, const FullParams& params, Vertex target,
                                                 std::size_t exact_state_limit) {
  if (target >= g.vertex_count()) fail(ErrorCode::kOutOfRange, "target vertex out of range");
  const SparseMatrix q = full_rate_matrix(g, params, exact_state_limit);
  const std::size_t m = g.edge_count();
  const std::size_t states = static_cast<std::size_t>(q.rows());
  // Free states: walk coordinate different from target.
  std::vector<int> slot(states, -1);
  std::vector<std::size_t> free_states;
  for (std::size_t s = 0; s < states; ++s) {
    if ((s >> m) == target) continue;
    slot[s] = static_cast<int>(free_states.size());
    free_states.push_back(s);
  }
  std::vector<double> h(states, 0.0);
  if (free_states.empty()) return h;
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t i = 0; i < free_states.size(); ++i) {
    for (SparseMatrix::InnerIterator it(q, static_cast<int>(free_states[i])); it; ++it) {
      const int j = slot[static_cast<std::size_t>(it.col())];
      if (j >= 0) t.emplace_back(static_cast<int>(i), j, -it.value());
    }
  }
  Eigen::SparseMatrix<double> a(static_cast<int>(free_states.size()), static_cast<int>(free_states.size()));
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) fail(ErrorCode::kSingularSystem, "full hitting-time system is singular");
  const Eigen::VectorXd rhs = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(free_states.size()));
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite() || (a * sol - rhs).cwiseAbs().maxCoeff() > 1e-6 * std::max(1.0, sol.cwiseAbs().maxCoeff())) {
    fail(ErrorCode::kSingularSystem, "full hitting-time system is singular");
  }
  for (std::size_t i = 0; i < free_states.size(); ++i) h[free_states[i]] = sol(static_cast<Eigen::Index>(i));
  return h;
}

double exact_hitting_time_full(const Graph& g, const FullParams& params, Vertex x0, const Environment& eta0,
                               Vertex target, std::size_t exact_state_limit) {
  if (x0 >= g.vertex_count()) fail(ErrorCode::kOutOfRange, "start vertex out of range");
  if (x0 == target) return 0.0;
  const auto h = full_hitting_times_to_vertex(g, params, target, exact_state_limit);
  return h[full_state_index(x0, eta0.index(), g.edge_count())];
}

namespace {

constexpr std::size_t kHittingChunk = 1000;

template <class EnvFn>
HittingEstimate estimate_hitting(const Graph& g, const FullParams& params, Vertex x0, Vertex target,
                                 std::size_t n_samples, std::uint64_t seed, std::size_t workers, EnvFn make_env) {
  validate_params(params);
  if (n_samples == 0) fail(ErrorCode::kInvalidArgument, "n_samples must be at least 1");
  if (x0 >= g.vertex_count() || target >= g.vertex_count()) fail(ErrorCode::kOutOfRange, "vertex out of range");
  if (x0 == target) return {0.0, 0.0, 0.0, 0.0, n_samples};
  if (params.p == 0.0) fail(ErrorCode::kSingularSystem, "p = 0: the walk never moves");
  const ChunkPlan plan{n_samples, kHittingChunk};
  const SeedStream stream(seed);
  const auto parts = parallel_map(plan.count(), resolve_workers(workers), [&](std::size_t k) {
    Rng rng = stream.engine(k);
    detail::RunningMoments acc;
    for (std::size_t i = 0; i < plan.size_of(k); ++i) {
      Environment env = make_env(rng);
      FullProcessSimulator sim(g, params, x0, std::move(env), std::move(rng));
      for (;;) {
        const FullEvent ev = sim.step();
        if (ev.walk_pos == target) {
          acc.add(ev.time);
          break;
        }
      }
      rng = std::move(sim.rng());
    }
    return acc;
  });
  detail::RunningMoments total;
  for (const auto& p : parts) total.merge(p);
  const double se = total.std_error();
  const double z = detail::normal_quantile(0.975);
  return {total.mean(), se, total.mean() - z * se, total.mean() + z * se, total.count()};
}

}  // namespace

HittingEstimate estimate_hitting_time_full(const Graph& g, const FullParams& params, Vertex x0,
                                           const Environment& eta0, Vertex target, std::size_t n_samples,
                                           std::uint64_t seed, std::size_t workers) {
  if (eta0.size() != g.edge_count()) fail(ErrorCode::kInvalidArgument, "environment size does not match |E|");
  return estimate_hitting(g, params, x0, target, n_samples, seed, workers, [&](Rng&) { return eta0; });
}

HittingEstimate estimate_hitting_time_full_stationary_env(const Graph& g, const FullParams& params, Vertex x0,
                                                          Vertex target, std::size_t n_samples,
                                                          std::uint64_t seed, std::size_t workers) {
  return estimate_hitting(g, params, x0, target, n_samples, seed, workers,
                          [&](Rng& rng) { return sample_environment(g, params.p, rng); });
}

// ---------------------------------------------------------------------------

namespace {

double checked_alpha(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::kDegenerateP, "p-tilted analysis needs p in (0, 1)");
  return std::min(p, 1.0 - p);
}

}  // namespace

ChainSpec tilted_hypercube_chain(std::size_t edge_count, double p, double mu, std::size_t exact_state_limit) {
  checked_alpha(p);
  if (!(mu > 0.0)) fail(ErrorCode::kInvalidArgument, "mu must be positive");
  if (edge_count == 0 || edge_count > 20 || (std::size_t{1} << edge_count) > exact_state_limit) {
    fail(ErrorCode::kTooLarge, "tilted hypercube dimension outside the exact range");
  }
  const std::size_t states = std::size_t{1} << edge_count;
  std::vector<Triplet> t;
  std::vector<double> pi(states);
  for (std::size_t a = 0; a < states; ++a) {
    double out = 0.0;
    for (std::size_t e = 0; e < edge_count; ++e) {
      const bool is_open = a >> e & 1U;
      const double rate = mu * (is_open ? 1.0 - p : p);
      t.push_back({a, a ^ (std::size_t{1} << e), rate});
      out += rate;
    }
    t.push_back({a, a, -out});
    const auto open = static_cast<double>(std::popcount(a));
    pi[a] = std::pow(p, open) * std::pow(1.0 - p, static_cast<double>(edge_count) - open);
  }
  return ChainSpec(ChainKind::kGenerator, states, t, std::move(pi), true);
}

double tilted_linf_distance(std::size_t d, double p, double mu, double t) {
  const double alpha = checked_alpha(p);
  const double decay = std::exp(-mu * std::max(0.0, t));
  // Per coordinate, Q_t(a,b)/nu(b) is 1 + decay (1 - nu(a))/nu(a) on the
  // diagonal and 1 - decay off it; extremes multiply across coordinates.
  const double hi = std::pow(1.0 + decay * (1.0 - alpha) / alpha, static_cast<double>(d));
  const double lo = std::pow(1.0 - decay, static_cast<double>(d));
  return std::max(hi - 1.0, 1.0 - lo);
}

double tilted_mixing_time_bound(std::size_t d, double p, double mu, double delta) {
  const double alpha = checked_alpha(p);
  if (d == 0) fail(ErrorCode::kInvalidArgument, "d must be at least 1");
  if (!(delta > 0.0)) fail(ErrorCode::kInvalidArgument, "delta must be positive");
  if (!(mu > 0.0)) fail(ErrorCode::kInvalidArgument, "mu must be positive");
  return std::log(static_cast<double>(d) * (1.0 - alpha) / (alpha * std::log1p(delta))) / mu;
}

double tilted_linf_mixing_time(std::size_t d, double p, double mu, double eps) {
  checked_alpha(p);
  if (!(eps > 0.0)) fail(ErrorCode::kInvalidArgument, "eps must be positive");
  if (tilted_linf_distance(d, p, mu, 0.0) <= eps) return 0.0;
  double hi = 1.0 / mu;
  while (tilted_linf_distance(d, p, mu, hi) > eps) hi *= 2.0;
  double lo = 0.0;
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    (tilted_linf_distance(d, p, mu, mid) <= eps ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace dynperc
