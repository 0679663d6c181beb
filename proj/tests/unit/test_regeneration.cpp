#include <cmath>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "dynperc/error.hpp"
#include "dynperc/regeneration.hpp"
#include "support/oracles.hpp"

using namespace dynperc;

TEST_SUITE("regeneration") {
  TEST_CASE("infected set bookkeeping") {
    const Graph g = build_cycle(4);
    InfectedWalk w(g, {0.5, 0.5}, 0, sample_environment(g, 0.5, 1), InitialInfection::kEmpty, SeedStream(2).engine(0));
    w.set_instrumented(true);
    for (int i = 0; i < 100000; ++i) {
      const auto ev = w.step();
      std::size_t total = 0;
      for (EdgeId e = 0; e < 4; ++e) total += (w.real_present(e) ? 1 : 0) + w.copies(e);
      CHECK(total == w.infected_size());
      if (ev.kind == InfectionEventKind::kWalkAttempt) CHECK(w.real_present(ev.edge));
      if (ev.kind == InfectionEventKind::kRemoveReal || ev.kind == InfectionEventKind::kFreeRefresh)
        CHECK_FALSE(w.real_present(ev.edge));
    }
    CHECK(w.invariant_checks() > 0);
    CHECK(w.invariant_violations() == 0);
    CHECK(w.invariant_holds());
  }

  TEST_CASE("all-edges start") {
    const Graph g = build_cycle(5);
    InfectedWalk w(g, {1.0, 0.5}, 0, Environment(5, false), InitialInfection::kAllEdges, SeedStream(1).engine(0));
    CHECK(w.infected_size() == 5);
    for (EdgeId e = 0; e < 5; ++e) CHECK(w.real_present(e));
  }

  TEST_CASE("regeneration trace") {
    const Graph g = build_cycle(4);
    const auto t = simulate_with_infection(g, {1.0, 0.5}, 0, sample_environment(g, 0.5, 3), InitialInfection::kEmpty,
                                           1000, 4);
    CHECK(t.taus.size() == 1001);
    CHECK(t.positions.size() == 1001);
    CHECK(t.spacings.size() == 1000);
    CHECK(t.taus[0] == 0.0);
    for (std::size_t i = 1; i < t.taus.size(); ++i) {
      CHECK(t.taus[i] > t.taus[i - 1]);
      CHECK(t.spacings[i - 1] == doctest::Approx(t.taus[i] - t.taus[i - 1]));
    }
    std::ostringstream csv;
    write_trace_csv(csv, t);
    CHECK(csv.str().rfind("i,tau,spacing,position\n0,0,,0\n", 0) == 0);
    // Same seed, same trace.
    const auto again = simulate_with_infection(g, {1.0, 0.5}, 0, sample_environment(g, 0.5, 3),
                                               InitialInfection::kEmpty, 1000, 4);
    CHECK(again.taus == t.taus);
  }

  TEST_CASE("spacing mean e^{1/mu}") {
    const Graph g = build_cycle(4);
    for (double mu : {1.0, 0.5}) {
      const auto t = simulate_with_infection(g, {mu, 0.5}, 0, sample_environment(g, 0.5, 5), InitialInfection::kEmpty,
                                             200000, 6);
      const auto d = spacing_diagnostics(t.spacings);
      CHECK(std::abs(d.mean - std::exp(1.0 / mu)) < 4 * d.std_error);
      CHECK(d.ljung_box_p > 1e-3);
      CHECK(d.tail_r2 > 0.95);
    }
  }

  TEST_CASE("birth-death emptying time") {
    CHECK(birth_death_emptying_time(1, 1.0) == doctest::Approx(std::exp(1.0) - 1.0));
    for (double mu : {0.25, 0.5, 1.0, 2.0})
      for (std::size_t k : {1, 2, 5, 12})
        CHECK(birth_death_emptying_time(k, mu) == doctest::Approx(oracle::birth_death_emptying(k, mu)).epsilon(1e-9));
    const double a = birth_death_emptying_time(8, 1.0);
    const double b = birth_death_emptying_time(8, 2.0);
    CHECK(b < a);
  }

  TEST_CASE("first regeneration from all infected") {
    // One edge: E_1[T_0] = e^{1/mu} - 1 (the walk keeps re-infecting).
    const Graph k2 = build_hypercube(1);
    const auto est = first_regeneration_from_all_infected(k2, {1.0, 0.5}, 3, 200000);
    CHECK(std::abs(est.mean - (std::exp(1.0) - 1.0)) < 4 * est.std_error);
    const auto slow = first_regeneration_from_all_infected(build_cycle(6), {0.5, 0.5}, 3, 20000);
    const auto fast = first_regeneration_from_all_infected(build_cycle(6), {1.0, 0.5}, 3, 20000);
    CHECK(fast.mean < slow.mean);
    const auto w1 = first_regeneration_from_all_infected(build_cycle(6), {1.0, 0.5}, 3, 20000, 1);
    const auto w3 = first_regeneration_from_all_infected(build_cycle(6), {1.0, 0.5}, 3, 20000, 3);
    CHECK(w1.mean == w3.mean);
  }

  TEST_CASE("first regeneration grows like log |E| on hypercubes") {
    const auto m5 = first_regeneration_from_all_infected(build_hypercube(5), {1.0, 0.5}, 1, 4000);
    const auto m10 = first_regeneration_from_all_infected(build_hypercube(10), {1.0, 0.5}, 1, 2000);
    const double log_ratio = std::log(10.0 * 512.0) / std::log(5.0 * 16.0);
    CHECK(m10.mean / m5.mean == doctest::Approx(log_ratio).epsilon(0.15));
  }

  TEST_CASE("auxiliary chain") {
    const Graph g = build_star(3);
    const auto ys = aux_chain_sample(g, {1.0, 0.5}, 0, 200000, 9);
    std::vector<double> emp(4, 0.0);
    for (Vertex y : ys) emp[y] += 1.0 / static_cast<double>(ys.size());
    CHECK(emp[0] == doctest::Approx(0.5).epsilon(0.02));
    const auto frozen = aux_chain_sample(build_cycle(4), {1.0, 0.0}, 2, 1000, 9);
    for (Vertex y : frozen) CHECK(y == 2);
  }

  TEST_CASE("auxiliary transitions") {
    const Graph g = build_cycle(4);
    const auto est = estimate_aux_transition(g, {1.0, 0.5}, 20000, 5);
    for (std::size_t x = 0; x < 4; ++x) {
      double row = 0.0;
      for (std::size_t y = 0; y < 4; ++y) {
        row += est.p[x][y];
        CHECK(est.ci_low[x][y] <= est.p[x][y]);
        CHECK(est.p[x][y] <= est.ci_high[x][y]);
      }
      CHECK(row == doctest::Approx(1.0));
      CHECK(est.ci_high[x][x] >= 0.25);
      CHECK(est.ci_low[x][x] <= 0.75);
      CHECK(est.ci_low[x][(x + 1) % 4] >= 0.125);
    }
    const auto a = estimate_aux_transition(g, {1.0, 0.5}, 5000, 5, 1);
    const auto b = estimate_aux_transition(g, {1.0, 0.5}, 5000, 5, 3);
    CHECK(a.counts == b.counts);
  }

  TEST_CASE("independence at regeneration") {
    const auto r = regeneration_independence_test(build_hypercube(1), {1.0, 0.5}, 200000, 4);
    CHECK(r.tv_marginal < 0.01);
    CHECK(r.tv_product_gap < 0.01);
    const auto degenerate = regeneration_independence_test(build_cycle(3), {1.0, 0.0}, 1000, 4);
    CHECK(degenerate.tv_marginal == 0.0);
    CHECK(degenerate.tv_product_gap == 0.0);
    CHECK_THROWS_AS(regeneration_independence_test(build_cycle(5), {1.0, 0.5}, 10, 4), Error);
  }

  TEST_CASE("occupancy of R is Poisson(1/mu)") {
    const auto r = infection_occupancy_test(build_cycle(4), {0.5, 0.5}, 1000000, 8);
    CHECK(r.p_value > 0.01);
    CHECK(r.mean == doctest::Approx(2.0).epsilon(0.05));
  }

  TEST_CASE("refresh rate per edge is mu") {
    const auto rr = refresh_rate_check(build_cycle(4), {0.5, 0.5}, 40.0, 2000, 3);
    for (double m : rr.mean_counts) CHECK(m == doctest::Approx(20.0).epsilon(0.03));
    CHECK(rr.max_abs_z < 4.5);
    CHECK(rr.dispersion_p > 1e-3);
  }

  TEST_CASE("instrumented invariant") {
    for (const Graph& g : {build_cycle(4), build_star(3), build_hypercube(3)}) {
      const auto rep = run_invariant_check(g, {0.5, 0.3}, 200000, 1);
      CHECK(rep.violations == 0);
      CHECK(rep.final_scan_ok);
      CHECK(rep.checks >= rep.events);
    }
  }

  TEST_CASE("Wald cross-estimate") {
    const auto w = wald_cross_estimate(build_cycle(4), {1.0, 0.5}, 0, 2, 20000, 6);
    CHECK(std::abs(w.wald_difference) < 4 * w.wald_difference_se);
    CHECK(w.wald_prediction == doctest::Approx(std::exp(1.0) * w.aux_steps.mean));
    CHECK(w.direct.mean <= w.regen_time.mean + 4 * std::hypot(w.direct.std_error, w.regen_time.std_error));
  }
}
