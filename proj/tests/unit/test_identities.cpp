#include <string>

#include "doctest.h"
#include "dynperc/analysis.hpp"
#include "dynperc/full_process.hpp"
#include "dynperc/identities.hpp"

using namespace dynperc;

namespace {

void expect_all_pass(const ChainSpec& c, const IdentityOptions& o = {}) {
  for (const auto& check : exact_identity_suite(c, o)) {
    INFO(check.name << ": " << check.detail);
    CHECK(check.pass);
    if (!check.skipped) CHECK(check.cases > 0);
  }
}

}  // namespace

TEST_SUITE("identities") {
  TEST_CASE("random chain generators") {
    Rng rng(1);
    for (bool continuous : {true, false}) {
      const ChainSpec r = random_reversible_chain(6, rng, continuous);
      CHECK(r.reversible());
      CHECK(r.continuous() == continuous);
      CHECK(detailed_balance_residual(r) < 1e-12);
      const ChainSpec n = random_nonreversible_chain(6, rng, continuous);
      CHECK_FALSE(n.reversible());
      CHECK(detailed_balance_residual(n) > 1e-6);
      CHECK(stationarity_residual(n) < 1e-10);
      CHECK(spectral_gap(n) > 0.0);
    }
  }

  TEST_CASE("suite reports every check by name") {
    const auto checks = exact_identity_suite(srw_chain(build_cycle(4), true));
    CHECK(checks.size() == 11);
    for (const auto& c : checks) CHECK_FALSE(c.name.empty());
  }

  TEST_CASE("suite on SRW chains") {
    expect_all_pass(srw_chain(build_cycle(4), true));
    expect_all_pass(srw_chain(build_path(3), false));
    expect_all_pass(srw_chain(build_star(3), true));
  }

  TEST_CASE("suite on full processes") {
    IdentityOptions o;
    o.fuzz_cases = 200;
    expect_all_pass(build_full_generator(build_hypercube(1), {1.0, 0.5}), o);
    expect_all_pass(build_full_generator(build_path(3), {0.5, 0.3}), o);
  }

  TEST_CASE("suite on random chains") {
    Rng rng(8);
    IdentityOptions o;
    o.fuzz_cases = 200;
    for (int i = 0; i < 6; ++i) {
      expect_all_pass(random_reversible_chain(6, rng, i % 2 == 0), o);
      expect_all_pass(random_nonreversible_chain(6, rng, i % 2 == 0), o);
    }
  }

  TEST_CASE("checks that need reversibility are skipped otherwise") {
    Rng rng(2);
    bool skipped = false;
    for (const auto& c : exact_identity_suite(random_nonreversible_chain(5, rng)))
      if (c.name == "diagonal identity") skipped = c.skipped;
    CHECK(skipped);
  }
}
