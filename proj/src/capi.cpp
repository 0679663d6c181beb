#include "dynperc/dynperc.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <sstream>
#include <string>

#include "dynperc/analysis.hpp"
#include "dynperc/error.hpp"
#include "dynperc/experiments.hpp"
#include "dynperc/full_process.hpp"
#include "dynperc/graph.hpp"
#include "dynperc/regeneration.hpp"
#include "json.hpp"

struct dp_graph {
  dynperc::Graph graph;
};

struct dp_config {
  dynperc::ExperimentConfig config;
};

struct dp_result {
  dynperc::ExperimentOutcome outcome;
};

namespace {

thread_local std::string last_error;

template <class Fn>
dp_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return DP_OK;
  } catch (const dynperc::Error& e) {
    last_error = e.what();
    return static_cast<dp_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DP_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return DP_ERR_INTERNAL;
  }
}

void require(const void* ptr, const char* name) {
  if (ptr == nullptr) dynperc::fail(dynperc::ErrorCode::kInvalidArgument, std::string(name) + " must not be null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* dp_version(void) { return dynperc::version_string(); }

const char* dp_last_error(void) { return last_error.c_str(); }

const char* dp_status_name(dp_status status) {
  if (status == DP_OK) return "Ok";
  if (status == DP_ERR_INTERNAL) return "Internal";
  return dynperc::error_code_name(static_cast<dynperc::ErrorCode>(status));
}

void dp_string_free(char* s) { std::free(s); }

dp_status dp_graph_build(const char* builder, size_t n, size_t d, dp_graph** out) {
  return guarded([&] {
    require(builder, "builder");
    require(out, "out");
    if (std::strcmp(builder, "file") == 0)
      dynperc::fail(dynperc::ErrorCode::kInvalidArgument, "use dp_graph_read_file for edge-list files");
    dynperc::GraphSpec spec;
    spec.builder = builder;
    spec.n = n;
    spec.d = d;
    try {
      *out = new dp_graph{dynperc::build_graph(spec)};
    } catch (const dynperc::Error& e) {
      if (e.code() == dynperc::ErrorCode::kConfigError) dynperc::fail(dynperc::ErrorCode::kInvalidArgument, e.what());
      throw;
    }
  });
}

dp_status dp_graph_read_file(const char* path, dp_graph** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new dp_graph{dynperc::read_edge_list_file(path)};
  });
}

dp_status dp_graph_counts(const dp_graph* g, size_t* vertices, size_t* edges) {
  return guarded([&] {
    require(g, "graph");
    if (vertices != nullptr) *vertices = g->graph.vertex_count();
    if (edges != nullptr) *edges = g->graph.edge_count();
  });
}

dp_status dp_graph_descriptor(const dp_graph* g, char** out) {
  return guarded([&] {
    require(g, "graph");
    require(out, "out");
    *out = copy_string(g->graph.descriptor());
  });
}

void dp_graph_free(dp_graph* g) { delete g; }

dp_status dp_full_relaxation_time(const dp_graph* g, double mu, double p, double* out) {
  return guarded([&] {
    require(g, "graph");
    require(out, "out");
    *out = dynperc::relaxation_time(dynperc::build_full_generator(g->graph, {mu, p}));
  });
}

dp_status dp_full_hitting_time(const dp_graph* g, double mu, double p, size_t x, uint64_t eta, size_t y,
                               double* out) {
  return guarded([&] {
    require(g, "graph");
    require(out, "out");
    const auto edges = g->graph.edge_count();
    if (edges > 64) dynperc::fail(dynperc::ErrorCode::kTooLarge, "environment index needs |E| <= 64");
    if (edges < 64 && (eta >> edges) != 0)
      dynperc::fail(dynperc::ErrorCode::kOutOfRange, "environment index has bits beyond |E|");
    *out = dynperc::exact_hitting_time_full(g->graph, {mu, p}, static_cast<dynperc::Vertex>(x),
                                            dynperc::Environment::from_index(edges, eta),
                                            static_cast<dynperc::Vertex>(y));
  });
}

dp_status dp_regeneration_mean_spacing(const dp_graph* g, double mu, double p, size_t n, uint64_t seed,
                                       double* mean, double* std_error) {
  return guarded([&] {
    require(g, "graph");
    require(mean, "mean");
    const auto eta0 = dynperc::sample_environment(g->graph, p, dynperc::SeedStream(seed).child(0).master());
    const auto trace = dynperc::simulate_with_infection(g->graph, {mu, p}, 0, eta0,
                                                        dynperc::InitialInfection::kEmpty, n,
                                                        dynperc::SeedStream(seed).child(1).master());
    const auto d = dynperc::spacing_diagnostics(trace.spacings);
    *mean = d.mean;
    if (std_error != nullptr) *std_error = d.std_error;
  });
}

dp_status dp_experiment_list(char** json_out) {
  return guarded([&] {
    require(json_out, "json_out");
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : dynperc::experiment_catalog())
      arr.push_back({{"name", e.name}, {"description", e.description}, {"anchor", e.anchor}});
    *json_out = copy_string(arr.dump());
  });
}

dp_status dp_config_new(const char* experiment, dp_config** out) {
  return guarded([&] {
    require(out, "out");
    auto* c = new dp_config{};
    if (experiment != nullptr) c->config.experiment = experiment;
    *out = c;
  });
}

dp_status dp_config_parse(const char* text, const char* format, dp_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new dp_config{dynperc::parse_config(text, format != nullptr ? format : "auto")};
  });
}

dp_status dp_config_load(const char* path, dp_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new dp_config{dynperc::load_config_file(path)};
  });
}

dp_status dp_config_set(dp_config* cfg, const char* assignment) {
  return guarded([&] {
    require(cfg, "config");
    require(assignment, "assignment");
    dynperc::apply_override(cfg->config, assignment);
  });
}

dp_status dp_config_validate(const dp_config* cfg) {
  return guarded([&] {
    require(cfg, "config");
    dynperc::validate_config(cfg->config);
  });
}

dp_status dp_config_to_json(const dp_config* cfg, char** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    *out = copy_string(dynperc::config_to_json(cfg->config));
  });
}

void dp_config_free(dp_config* cfg) { delete cfg; }

dp_status dp_experiment_run(const dp_config* cfg, int write_artifacts, dp_result** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    if (write_artifacts != 0) {
      dynperc::RunArtifacts a;
      dynperc::ExperimentOutcome o;
      dynperc::run_and_write(cfg->config, &a, &o);
      *out = new dp_result{std::move(o)};
    } else {
      *out = new dp_result{dynperc::run_experiment(cfg->config)};
    }
  });
}

int dp_result_exact_pass(const dp_result* r) { return r != nullptr && r->outcome.exact_pass() ? 1 : 0; }

int dp_result_all_pass(const dp_result* r) { return r != nullptr && r->outcome.report.all_pass() ? 1 : 0; }

double dp_result_empirical_constant(const dp_result* r) {
  return r != nullptr ? r->outcome.report.empirical_constant : 0.0;
}

dp_status dp_result_report_json(const dp_result* r, char** out) {
  return guarded([&] {
    require(r, "result");
    require(out, "out");
    *out = copy_string(dynperc::report_to_json(r->outcome.report));
  });
}

dp_status dp_result_report_csv(const dp_result* r, char** out) {
  return guarded([&] {
    require(r, "result");
    require(out, "out");
    std::ostringstream s;
    dynperc::write_report_csv(s, r->outcome.report);
    *out = copy_string(s.str());
  });
}

dp_status dp_result_summary(const dp_result* r, char** out) {
  return guarded([&] {
    require(r, "result");
    require(out, "out");
    *out = copy_string(r->outcome.summary);
  });
}

void dp_result_free(dp_result* r) { delete r; }

}  // extern "C"
