// Links only the shared library and sees only the C header.
#include <cmath>
#include <cstring>
#include <string>

#include "doctest.h"
#include "dynperc/dynperc.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  dp_string_free(s);
  return out;
}

}  // namespace

TEST_SUITE("c_api") {
  TEST_CASE("version and status names") {
    CHECK(std::strlen(dp_version()) > 0);
    CHECK(std::string(dp_status_name(DP_OK)) == "Ok");
    CHECK(std::string(dp_status_name(DP_ERR_CONFIG)) == "ConfigError");
  }

  TEST_CASE("graphs") {
    dp_graph* g = nullptr;
    REQUIRE(dp_graph_build("hypercube", 0, 3, &g) == DP_OK);
    size_t v = 0, e = 0;
    CHECK(dp_graph_counts(g, &v, &e) == DP_OK);
    CHECK(v == 8);
    CHECK(e == 12);
    char* desc = nullptr;
    CHECK(dp_graph_descriptor(g, &desc) == DP_OK);
    CHECK_FALSE(take(desc).empty());
    dp_graph_free(g);

    dp_graph* bad = nullptr;
    CHECK(dp_graph_build("blob", 3, 1, &bad) != DP_OK);
    CHECK(bad == nullptr);
    CHECK(std::strlen(dp_last_error()) > 0);
    CHECK(dp_graph_read_file("/nonexistent/graph.txt", &bad) == DP_ERR_IO);
    CHECK(dp_graph_counts(nullptr, &v, &e) == DP_ERR_INVALID_ARGUMENT);
  }

  TEST_CASE("exact full-process quantities on one edge") {
    dp_graph* g = nullptr;
    REQUIRE(dp_graph_build("complete", 2, 0, &g) == DP_OK);
    // Gap is min(mu, ((mu+2) - sqrt((mu+2)^2 - 8 mu p)) / 2).
    double trel = 0.0;
    CHECK(dp_full_relaxation_time(g, 1.0, 0.5, &trel) == DP_OK);
    CHECK(trel == doctest::Approx(2.0 / (3.0 - std::sqrt(5.0))));
    // From a closed edge: h_c = 1/(mu p) + h_o, h_o = (1 + mu(1-p) h_c) / (1 + mu(1-p)), so h_c = 4.
    double h = 0.0;
    CHECK(dp_full_hitting_time(g, 1.0, 0.5, 0, 0, 1, &h) == DP_OK);
    CHECK(h == doctest::Approx(4.0));
    CHECK(dp_full_hitting_time(g, 1.0, 1.5, 0, 0, 1, &h) != DP_OK);
    double mean = 0.0, se = 0.0;
    CHECK(dp_regeneration_mean_spacing(g, 1.0, 0.5, 50000, 3, &mean, &se) == DP_OK);
    CHECK(std::abs(mean - std::exp(1.0)) < 5 * se);
    dp_graph_free(g);
  }

  TEST_CASE("configs and runs") {
    char* list = nullptr;
    REQUIRE(dp_experiment_list(&list) == DP_OK);
    const std::string catalog = take(list);
    CHECK(catalog.find("hitting-comparison") != std::string::npos);

    dp_config* cfg = nullptr;
    CHECK(dp_config_parse("experiment = \"exact-identities\"\nmew = 1\n", "toml", &cfg) == DP_ERR_CONFIG);
    CHECK(std::string(dp_last_error()).find("mew") != std::string::npos);

    REQUIRE(dp_config_new("exact-identities", &cfg) == DP_OK);
    CHECK(dp_config_set(cfg, "graph.builder=complete") == DP_OK);
    CHECK(dp_config_set(cfg, "graph.n=2") == DP_OK);
    CHECK(dp_config_set(cfg, "fuzz_cases=50") == DP_OK);
    CHECK(dp_config_set(cfg, "graph.mew=2") == DP_ERR_CONFIG);
    CHECK(dp_config_validate(cfg) == DP_OK);
    char* json = nullptr;
    CHECK(dp_config_to_json(cfg, &json) == DP_OK);
    CHECK(take(json).find("\"complete\"") != std::string::npos);

    dp_result* r = nullptr;
    REQUIRE(dp_experiment_run(cfg, 0, &r) == DP_OK);
    CHECK(dp_result_exact_pass(r) == 1);
    char* csv = nullptr;
    CHECK(dp_result_report_csv(r, &csv) == DP_OK);
    CHECK_FALSE(take(csv).empty());
    char* summary = nullptr;
    CHECK(dp_result_summary(r, &summary) == DP_OK);
    CHECK(take(summary).find("[PASS]") != std::string::npos);
    dp_result_free(r);
    dp_config_free(cfg);

    REQUIRE(dp_config_new("no-such-experiment", &cfg) == DP_OK);
    CHECK(dp_config_validate(cfg) == DP_ERR_CONFIG);
    CHECK(dp_experiment_run(cfg, 0, &r) == DP_ERR_CONFIG);
    dp_config_free(cfg);
  }
}
