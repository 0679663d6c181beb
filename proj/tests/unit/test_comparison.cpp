#include <cmath>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "dynperc/analysis.hpp"
#include "dynperc/comparison.hpp"
#include "dynperc/error.hpp"
#include "json.hpp"
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

double extra(const ComparisonCell& c, const std::string& name) {
  for (const auto& [k, v] : c.extras)
    if (k == name) return v;
  FAIL("missing extra " << name);
  return 0.0;
}

bool verdict(const ComparisonReport& r, const std::string& prefix) {
  for (const auto& v : r.verdicts)
    if (v.name.rfind(prefix, 0) == 0) return v.pass;
  FAIL("missing verdict " << prefix);
  return false;
}

}  // namespace

TEST_SUITE("comparison_suite") {
  TEST_CASE("parameter grid") {
    const ParamGrid g{{0.5, 1.0}, {0.2, 0.8}};
    const auto cells = g.cells();
    REQUIRE(cells.size() == 4);
    CHECK(cells[1].mu == 0.5);
    CHECK(cells[1].p == 0.8);
    CHECK(cells[2].mu == 1.0);
    const ParamGrid r = g.refined();
    CHECK(r.mus == std::vector<double>{0.5, 0.75, 1.0});
    CHECK(r.ps == std::vector<double>{0.2, 0.5, 0.8});
  }

  TEST_CASE("number formatting") {
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(std::nan("")) == "nan");
  }

  TEST_CASE("report serialization") {
    ComparisonReport r;
    r.experiment = "x";
    r.graph = "cycle(n=4)";
    r.ratio_label = "a / b";
    r.cells.push_back({1.0, 0.5, 2.0, 1.0, 2.0, {{"k", 0.25}}});
    r.cells.push_back({1.0, 0.7, 3.0, 2.0, 1.5, {{"k", 1.0 / 3.0}}});
    r.finalize();
    r.add_verdict("stat", false, "noise", true);
    CHECK(r.empirical_constant == 2.0);
    CHECK(r.exact_pass());
    CHECK_FALSE(r.all_pass());
    const auto j = nlohmann::json::parse(report_to_json(r));
    CHECK(j["cells"].size() == 2);
    CHECK(j["cells"][1]["k"].get<double>() == doctest::Approx(1.0 / 3.0));
    CHECK(j["exact_pass"].get<bool>());
    CHECK_FALSE(j["all_pass"].get<bool>());
    std::ostringstream csv;
    write_report_csv(csv, r);
    CHECK(csv.str() == "mu,p,full,srw,ratio,k\n1,0.5,2,1,2,0.25\n1,0.7,3,2,1.5,0.333333333333\n");

    ComparisonReport bad;
    bad.cells.push_back({1.0, 0.5, 0.0, 1.0, 0.0, {}});
    bad.finalize();
    CHECK_FALSE(bad.exact_pass());
  }

  TEST_CASE("relaxation comparison on K_2 against the closed form") {
    const ParamGrid grid{{0.5, 1.0}, {0.2, 0.5, 1.0 - 1e-9}};
    const auto r = check_relaxation_comparison(build_hypercube(1), grid);
    for (const auto& c : r.cells) {
      CHECK(c.full_value == doctest::Approx(1.0 / oracle::k2_full_gap(c.mu, c.p)).epsilon(1e-9));
      CHECK(c.srw_value == doctest::Approx(0.5));
      CHECK(c.ratio == doctest::Approx(c.mu * c.p * c.full_value / 0.5));
    }
    CHECK(r.exact_pass());
  }

  TEST_CASE("relaxation comparison is stable under refinement on C_4") {
    const ParamGrid grid{{0.25, 0.5, 1.0}, {0.2, 0.5, 0.8}};
    const auto a = check_relaxation_comparison(build_cycle(4), grid);
    const auto b = check_relaxation_comparison(build_cycle(4), grid.refined(), 2);
    CHECK(a.exact_pass());
    CHECK(std::isfinite(a.empirical_constant));
    CHECK(std::abs(b.empirical_constant / a.empirical_constant - 1) < 0.2);
  }

  TEST_CASE("hitting comparison on P_4") {
    const Graph g = build_path(4);
    const auto r = check_hitting_comparison(g, {{1.0}, {0.2, 0.5, 0.8}});
    CHECK(r.exact_pass());
    const Eigen::MatrixXd srw = hitting_times(srw_chain(g, true));
    const oracle::SmallGraph s{4, {{0, 1}, {1, 2}, {2, 3}}};
    for (const auto& c : r.cells) {
      CHECK(c.srw_value == doctest::Approx(srw.maxCoeff()));
      // Oracle: worst over (x, eta, y) with dense solves on the 32-state chain.
      const Eigen::MatrixXd q = oracle::full_generator(s, c.mu, c.p);
      double worst = 0.0;
      for (std::size_t y = 0; y < 4; ++y) {
        std::vector<bool> target(32, false);
        for (std::size_t eta = 0; eta < 8; ++eta) target[y * 8 + eta] = true;
        worst = std::max(worst, oracle::hitting_times(q, target).maxCoeff());
      }
      CHECK(c.full_value == doctest::Approx(worst).epsilon(1e-9));
      CHECK(c.ratio == doctest::Approx(c.p * worst / c.srw_value));
    }
  }

  TEST_CASE("all-open environment with p = 1 reproduces SRW hitting times") {
    const Graph g = build_cycle(5);
    const Eigen::MatrixXd srw = hitting_times(srw_chain(g, true));
    const double full = exact_hitting_time_full(g, {1.0, 1.0}, 0, Environment(5, true), 2);
    CHECK(full == doctest::Approx(srw(0, 2)).epsilon(1e-10));
  }

  TEST_CASE("hitting comparison Monte Carlo path") {
    HittingComparisonOptions o;
    o.mc_samples = 4000;
    o.seed = 5;
    const auto r = check_hitting_comparison(build_cycle(4), {{1.0}, {0.5}}, o);
    CHECK(r.all_pass());
    const auto& c = r.cells.front();
    CHECK(extra(c, "mc_closed_worst") == doctest::Approx(c.full_value).epsilon(0.1));
    o.mc_samples = 8000;
    const auto doubled = check_hitting_comparison(build_cycle(4), {{1.0}, {0.5}}, o);
    CHECK(std::abs(extra(doubled.cells.front(), "mc_ratio") / extra(c, "mc_ratio") - 1) < 0.2);
    o.workers = 3;
    o.mc_samples = 4000;
    const auto parallel = check_hitting_comparison(build_cycle(4), {{1.0}, {0.5}}, o);
    CHECK(extra(parallel.cells.front(), "mc_ratio") == extra(c, "mc_ratio"));
  }

  TEST_CASE("log-Sobolev comparison") {
    const auto k2 = check_ls_comparison(build_hypercube(1), {{1.0}, {0.5}});
    CHECK(k2.exact_pass());
    CHECK(std::isfinite(k2.empirical_constant));
    CHECK(k2.empirical_constant > 0);
    const auto edge = check_ls_comparison(build_hypercube(1), {{1.0}, {0.999}});
    CHECK(extra(edge.cells.front(), "second_term_active") == 1.0);
    const auto c3 = check_ls_comparison(build_cycle(3), {{0.5, 1.0}, {0.3, 0.7}});
    CHECK(c3.exact_pass());
  }

  TEST_CASE("mixing comparison") {
    const auto k2 = mixing_upper_bound_experiment(build_hypercube(1), {{0.5, 1.0}, {0.2, 0.5, 0.99}});
    CHECK(k2.exact_pass());
    const auto refined = mixing_upper_bound_experiment(build_hypercube(1), ParamGrid{{0.5, 1.0}, {0.2, 0.5, 0.99}}.refined());
    CHECK(std::abs(refined.empirical_constant / k2.empirical_constant - 1) < 0.2);
    for (const auto& c : k2.cells) {
      CHECK(extra(c, "env_t_mix") <= extra(c, "env_bound") + 1e-9);
      CHECK(c.full_value >= extra(c, "env_t_mix") - 1e-6);
    }
    // Near p = 1 the additive term dominates and the ratio stays bounded.
    CHECK(extra(k2.cells.back(), "additive_term") > k2.cells.back().srw_value / 2);
    CHECK(k2.cells.back().ratio < k2.empirical_constant + 1e-12);
  }

  TEST_CASE("open clusters") {
    const Graph g = build_cycle(4);
    const Environment eta = Environment::from_index(4, 0b0011);  // edges (0,1), (0,3)
    const Cluster k = open_cluster(g, eta, 0);
    CHECK(k.vertices.size() == 3);
    CHECK(k.boundary == 2);
  }

  TEST_CASE("cluster statistics") {
    const Graph c4 = build_cycle(4);
    const auto zero = cluster_stats(c4, 0.0, ClusterMethod::kExact);
    CHECK(zero.n_p == 1.0);
    CHECK(zero.m_p == 2.0);
    const auto one = cluster_stats(c4, 1.0, ClusterMethod::kExact);
    CHECK(one.n_p == 4.0);
    CHECK(one.m_p == 0.0);

    const auto exact = cluster_stats(c4, 0.5, ClusterMethod::kExact);
    const auto o = oracle::cluster_moments(oracle::cycle(4), 0.5, 0);
    CHECK(exact.m_p == doctest::Approx(o.m_p).epsilon(1e-12));
    CHECK(exact.n_p == doctest::Approx(o.n_p).epsilon(1e-12));
    CHECK(exact.n_p >= 1.0);
    const auto mc = cluster_stats(c4, 0.5, ClusterMethod::kMonteCarlo, 1000000, 3);
    CHECK(std::abs(mc.m_p - exact.m_p) < 4 * mc.m_se);
    CHECK(std::abs(mc.n_p - exact.n_p) < 4 * mc.n_se);
    const auto mc3 = cluster_stats(c4, 0.5, ClusterMethod::kMonteCarlo, 100000, 3, 0, 3);
    const auto mc1 = cluster_stats(c4, 0.5, ClusterMethod::kMonteCarlo, 100000, 3, 0, 1);
    CHECK(mc3.m_p == mc1.m_p);

    CHECK(error_of([] { cluster_stats(build_star(3), 0.5, ClusterMethod::kExact); }) == ErrorCode::kNotTransitive);
    CHECK(error_of([] { cluster_stats(build_torus(4, 2), 0.5, ClusterMethod::kExact); }) == ErrorCode::kTooLarge);
  }

  TEST_CASE("moderate growth mechanics on C_8") {
    const auto r = moderate_growth_lower_bound(build_cycle(8), {1.0, 0.2});
    const auto o = oracle::cluster_moments(oracle::cycle(8), 0.2, 0);
    CHECK(r.stats.m_p == doctest::Approx(o.m_p).epsilon(1e-12));
    CHECK(r.stats.n_p == doctest::Approx(o.n_p).epsilon(1e-12));
    CHECK(r.diameter == 4);
    CHECK(r.dirichlet_f <= r.bkk_rhs * (1 + 1e-8));
    CHECK(r.variational <= r.t_rel_full * (1 + 1e-8));
    CHECK(r.bkk_holds);
    CHECK(r.variational_holds);
    CHECK(r.alternate_base_gap < 1e-12);
    CHECK(r.applicable == (r.stats.n_p <= 1.0));
    ModerateGrowthOptions strict;
    strict.strict = true;
    CHECK(error_of([&] { moderate_growth_lower_bound(build_cycle(8), {1.0, 0.2}, strict); }) ==
          ErrorCode::kPreconditionFailed);
  }

  TEST_CASE("moderate growth in the small-p limit") {
    const auto r = moderate_growth_lower_bound(build_cycle(6), {1.0, 0.01});
    CHECK(r.stats.n_p == doctest::Approx(1.0).epsilon(0.05));
    CHECK(r.stats.m_p == doctest::Approx(2.0).epsilon(0.05));
    CHECK(r.applicable == (r.stats.n_p <= 0.75));
    CHECK(r.bkk_holds);
    CHECK(r.variational_holds);
    const auto f = cluster_distance_function(build_cycle(6), 0);
    // Singleton clusters (all closed): f(x, 0) = d(x, o).
    for (Vertex x = 0; x < 6; ++x) CHECK(f[full_state_index(x, 0, 6)] == doctest::Approx(std::min<double>(x, 6 - x)));
  }
}
