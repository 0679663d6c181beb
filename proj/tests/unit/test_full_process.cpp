#include <cmath>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "dynperc/analysis.hpp"
#include "dynperc/error.hpp"
#include "dynperc/full_process.hpp"
#include "support/oracles.hpp"

using namespace dynperc;

namespace {

ErrorCode error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

Graph from_small(const oracle::SmallGraph& s) { return build_from_edges(s.n, s.edges); }

}  // namespace

TEST_SUITE("full_process") {
  TEST_CASE("parameter validation") {
    CHECK(validate_params({1.0, 0.5}).empty());
    CHECK(validate_params({2.0, 0.5}).size() == 1);
    CHECK(error_of([] { validate_params({0.0, 0.5}); }) == ErrorCode::kInvalidArgument);
    CHECK(error_of([] { validate_params({1.0, 1.5}); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("sample_environment") {
    const Graph g = build_cycle(4);
    CHECK(sample_environment(g, 0.0, 1).count_open() == 0);
    CHECK(sample_environment(g, 1.0, 1).count_open() == 4);
    CHECK(sample_environment(g, 0.5, 42) == sample_environment(g, 0.5, 42));

    Rng rng = SeedStream(3).engine(0);
    const std::size_t n = 1000000;
    std::vector<std::size_t> open(4, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const Environment e = sample_environment(g, 0.5, rng);
      for (EdgeId k = 0; k < 4; ++k) open[k] += e.open(k);
    }
    const double sigma = std::sqrt(0.25 / static_cast<double>(n));
    for (auto c : open) CHECK(std::abs(static_cast<double>(c) / static_cast<double>(n) - 0.5) < 3 * sigma);
  }

  TEST_CASE("environment index round trip") {
    for (std::uint64_t idx : {0ULL, 5ULL, 1023ULL}) CHECK(Environment::from_index(10, idx).index() == idx);
  }

  TEST_CASE("simulation with p = 1 and p = 0") {
    const Graph g = build_cycle(5);
    const auto all_open = simulate(g, {1.0, 1.0}, 0, Environment(5, true), 200.0, 9);
    std::size_t attempts = 0;
    double prev = 0.0;
    for (const auto& ev : all_open.events) {
      CHECK(ev.time > prev);
      prev = ev.time;
      if (ev.kind == EventKind::kWalkAttempt) {
        ++attempts;
        CHECK(ev.open);
      } else {
        CHECK(ev.open);
      }
    }
    // Rate-1 Poisson count over time 200: mean 200, sd about 14.
    CHECK(std::abs(static_cast<double>(attempts) - 200.0) < 5 * std::sqrt(200.0));

    const auto closed = simulate(g, {1.0, 0.0}, 2, Environment(5, false), 100.0, 9);
    for (const auto& ev : closed.events) CHECK(ev.walk_pos == 2);
    CHECK(closed.final_pos == 2);
  }

  TEST_CASE("position changes only at successful walk attempts") {
    const Graph g = build_cycle(4);
    const auto t = simulate(g, {0.5, 0.5}, 0, sample_environment(g, 0.5, 1), 500.0, 4);
    Vertex pos = 0;
    Environment env = t.eta0;
    for (const auto& ev : t.events) {
      if (ev.kind == EventKind::kRefresh) {
        CHECK(ev.walk_pos == pos);
        env.set(ev.edge, ev.open);
      } else {
        CHECK(ev.open == env.open(ev.edge));
        if (!ev.open) CHECK(ev.walk_pos == pos);
        else CHECK(ev.walk_pos != pos);
      }
      pos = ev.walk_pos;
    }
    CHECK(env == t.final_env);
    std::ostringstream csv;
    write_trajectory_csv(csv, t);
    CHECK(csv.str().rfind("time,kind,edge,open,walk_pos\n", 0) == 0);
  }

  TEST_CASE("ergodic average on K_2") {
    const Graph g = build_hypercube(1);
    const auto t = simulate(g, {1.0, 0.5}, 0, Environment(1, false), 200000.0, 17);
    double at0 = 0.0;
    double prev = 0.0;
    Vertex pos = 0;
    for (const auto& ev : t.events) {
      if (pos == 0) at0 += ev.time - prev;
      prev = ev.time;
      pos = ev.walk_pos;
    }
    if (pos == 0) at0 += t.horizon - prev;
    CHECK(at0 / t.horizon == doctest::Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("exact generator matches an independent assembly") {
    for (const auto& s : {oracle::SmallGraph{2, {{0, 1}}}, oracle::SmallGraph{3, {{0, 1}, {1, 2}}}, oracle::cycle(3),
                          oracle::cycle(4)}) {
      const Graph g = from_small(s);
      for (auto [mu, p] : {std::pair{1.0, 0.5}, std::pair{0.25, 0.2}, std::pair{2.0, 0.9}}) {
        const ChainSpec c = build_full_generator(g, {mu, p});
        const Eigen::MatrixXd q = oracle::full_generator(s, mu, p);
        CHECK((c.generator_dense() - q).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(c.reversible());
        CHECK(stationarity_residual(c) < 1e-10);
        CHECK(detailed_balance_residual(c) < 1e-10);
        // pi x pi_p.
        const auto pi = stationary_distribution(g).weights();
        for (std::size_t x = 0; x < s.n; ++x)
          for (std::uint64_t eta = 0; eta < (1ULL << s.edges.size()); ++eta) {
            const auto env = Environment::from_index(s.edges.size(), eta);
            const double w = pi[x] * std::pow(p, static_cast<double>(env.count_open())) *
                             std::pow(1 - p, static_cast<double>(s.edges.size() - env.count_open()));
            CHECK(c.stationary()[full_state_index(x, eta, s.edges.size())] == doctest::Approx(w).epsilon(1e-12));
          }
      }
    }
    CHECK(build_full_generator(build_hypercube(1), {1.0, 0.5}).states() == 4);
    CHECK(build_full_generator(build_path(3), {1.0, 0.5}).states() == 12);
  }

  TEST_CASE("exact generator limits") {
    CHECK(error_of([] { build_full_generator(build_cycle(8), {1.0, 0.5}, 100); }) == ErrorCode::kTooLarge);
    CHECK(error_of([] { build_full_generator(build_cycle(4), {1.0, 0.0}); }) == ErrorCode::kDegenerateP);
  }

  TEST_CASE("K_2 full-process gap matches the closed form") {
    for (auto [mu, p] : {std::pair{1.0, 0.5}, std::pair{0.3, 0.2}, std::pair{0.5, 0.9}}) {
      const ChainSpec c = build_full_generator(build_hypercube(1), {mu, p});
      CHECK(spectral_gap(c) == doctest::Approx(oracle::k2_full_gap(mu, p)).epsilon(1e-10));
    }
  }

  TEST_CASE("full relaxation dominates the environment's") {
    for (const Graph& g : {build_path(3), build_cycle(3)}) {
      for (double p : {0.2, 0.7}) {
        const double full = relaxation_time(build_full_generator(g, {0.5, p}));
        const double env = relaxation_time(tilted_hypercube_chain(g.edge_count(), p, 0.5));
        CHECK(full >= env * (1 - 1e-10));
      }
    }
  }

  TEST_CASE("hitting times of the full process") {
    const Graph k2 = build_hypercube(1);
    CHECK(exact_hitting_time_full(k2, {1.0, 1.0 - 1e-12}, 0, Environment(1, true), 1) == doctest::Approx(1.0).epsilon(1e-6));
    const auto same = estimate_hitting_time_full(k2, {1.0, 0.5}, 0, Environment(1, false), 0, 10, 1);
    CHECK(same.mean == 0.0);
    const auto always = estimate_hitting_time_full(k2, {1.0, 1.0}, 0, Environment(1, true), 1, 200000, 1);
    CHECK(std::abs(always.mean - 1.0) < 4 * always.std_error);

    // Worst (x, eta) on K_2 against the 4-state dense oracle.
    const oracle::SmallGraph s{2, {{0, 1}}};
    const Eigen::VectorXd h = oracle::hitting_times(oracle::full_generator(s, 1.0, 0.5), {false, false, true, true});
    const double worst = std::max(h(0), h(1));
    CHECK(exact_hitting_time_full(k2, {1.0, 0.5}, 0, Environment(1, false), 1) == doctest::Approx(h(0)).epsilon(1e-10));
    CHECK(worst == doctest::Approx(h(0)));
    const auto mc = estimate_hitting_time_full(k2, {1.0, 0.5}, 0, Environment(1, false), 1, 200000, 7, 2);
    CHECK(std::abs(mc.mean - worst) < 4 * mc.std_error);

    const auto all = full_hitting_times_to_vertex(k2, {1.0, 0.5}, 1);
    CHECK(all[full_state_index(0, 0, 1)] == doctest::Approx(h(0)));
    CHECK(all[full_state_index(1, 0, 1)] == 0.0);
  }

  TEST_CASE("hitting estimates do not depend on the worker count") {
    const Graph g = build_cycle(4);
    const auto a = estimate_hitting_time_full(g, {0.5, 0.5}, 0, Environment(4, false), 2, 20000, 3, 1);
    const auto b = estimate_hitting_time_full(g, {0.5, 0.5}, 0, Environment(4, false), 2, 20000, 3, 4);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    const auto c = estimate_hitting_time_full_stationary_env(g, {0.5, 0.5}, 0, 2, 20000, 3, 1);
    const auto d = estimate_hitting_time_full_stationary_env(g, {0.5, 0.5}, 0, 2, 20000, 3, 3);
    CHECK(c.mean == d.mean);
  }

  TEST_CASE("collapsed generator agrees with literal refresh simulation") {
    // Law of eta_t for one edge starting closed: P(open) = p (1 - e^{-mu t}).
    const Graph g = build_hypercube(1);
    const double mu = 0.7;
    const double p = 0.3;
    const double horizon = 1.3;
    std::size_t open = 0;
    const std::size_t n = 1000000;
    Rng rng = SeedStream(5).engine(0);
    for (std::size_t i = 0; i < n; ++i) {
      FullProcessSimulator sim(g, {mu, p}, 0, Environment(1, false), Rng(rng()));
      Environment last = sim.environment();
      while (true) {
        const Environment before = sim.environment();
        sim.step();
        if (sim.time() > horizon) {
          last = before;
          break;
        }
      }
      open += last.open(0);
    }
    const double expected = p * (1 - std::exp(-mu * horizon));
    const double sd = std::sqrt(expected * (1 - expected) / static_cast<double>(n));
    CHECK(std::abs(static_cast<double>(open) / static_cast<double>(n) - expected) < 4 * sd);
    // The exact generator gives the same number.
    const Eigen::MatrixXd k = transition_kernel(build_full_generator(g, {mu, p}), horizon);
    CHECK(k(0, 1) + k(0, 3) == doctest::Approx(expected).epsilon(1e-10));
  }

  TEST_CASE("occupation measure converges to pi x pi_p") {
    const Graph g = build_cycle(3);
    const FullParams prm{1.0, 0.5};
    FullProcessSimulator sim(g, prm, 0, sample_environment(g, 0.5, 2), SeedStream(8).engine(0));
    std::vector<double> occ(24, 0.0);
    double prev = 0.0;
    for (std::size_t i = 0; i < 2000000; ++i) {
      const std::size_t s = full_state_index(sim.position(), sim.environment().index(), 3);
      sim.step();
      occ[s] += sim.time() - prev;
      prev = sim.time();
    }
    const auto pi = build_full_generator(g, prm).stationary();
    for (auto& v : occ) v /= prev;
    CHECK(tv_distance(occ, pi) < 0.01);
  }

  TEST_CASE("tilted hypercube") {
    CHECK(tilted_linf_distance(8, 0.3, 1.0, tilted_mixing_time_bound(8, 0.3, 1.0, 0.5)) <= 0.5);
    CHECK(spectral_gap(tilted_hypercube_chain(1, 0.5, 1.0)) == doctest::Approx(1.0));
    CHECK(error_of([] { tilted_hypercube_chain(2, 0.0, 1.0); }) == ErrorCode::kDegenerateP);
    CHECK(error_of([] { tilted_linf_distance(2, 1.0, 1.0, 1.0); }) == ErrorCode::kDegenerateP);
    CHECK(error_of([] { tilted_mixing_time_bound(2, 0.5, 1.0, 0.0); }) == ErrorCode::kInvalidArgument);

    // Product formula against a dense exponential of the 2^d generator.
    for (std::size_t d = 1; d <= 4; ++d) {
      for (double p : {0.2, 0.5}) {
        const ChainSpec c = tilted_hypercube_chain(d, p, 0.8);
        const auto& nu = c.stationary();
        for (double t : {0.1, 1.0, 3.0}) {
          const Eigen::MatrixXd k = (c.generator_dense() * t).exp();
          double worst = 0.0;
          for (Eigen::Index a = 0; a < k.rows(); ++a)
            for (Eigen::Index b = 0; b < k.cols(); ++b)
              worst = std::max(worst, std::abs(k(a, b) / nu[static_cast<std::size_t>(b)] - 1));
          CHECK(tilted_linf_distance(d, p, 0.8, t) == doctest::Approx(worst).epsilon(1e-10));
        }
      }
    }
    const double tm = tilted_linf_mixing_time(6, 0.4, 1.0, 0.25);
    CHECK(tilted_linf_distance(6, 0.4, 1.0, tm) <= 0.25 * (1 + 1e-9));
    CHECK(tilted_linf_distance(6, 0.4, 1.0, tm * (1 - 1e-6)) > 0.25);
  }
}
