#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dynperc/comparison.hpp"
#include "dynperc/graph.hpp"

namespace dynperc {

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::string anchor;  // the result the experiment exercises
};

const std::vector<ExperimentInfo>& experiment_catalog();

struct GraphSpec {
  std::string builder = "cycle";  // cycle | path | star | complete | hypercube | torus | file
  std::size_t n = 4;              // vertices (cycle, path, complete), side (torus), leaves (star)
  std::size_t d = 2;              // dimension (hypercube, torus)
  std::string file;               // edge-list path for builder = "file"
};

Graph build_graph(const GraphSpec& spec);

enum class RunMode { kExact, kMonteCarlo, kBoth };

/// Every field has a default; a config file overrides the keys it names.
struct ExperimentConfig {
  std::string experiment;
  GraphSpec graph;
  ParamGrid grid{{1.0}, {0.5}};
  std::size_t samples = 100000;  // Monte Carlo budget (meaning depends on the experiment)
  std::size_t events = 1000000;  // event budget for occupancy and invariant runs
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  RunMode mode = RunMode::kBoth;
  std::string output_dir = "dynperc-out";
  std::vector<std::size_t> dims{4, 8, 16};  // tilted-hypercube dimensions
  std::vector<double> deltas{0.25, 1.0};    // tilted-hypercube targets
  std::size_t random_chains = 2;            // extra random chains in exact-identities
  std::size_t fuzz_cases = 1000;
  bool stability = false;  // rerun comparisons on a refined grid and a second seed
};

/// Parses TOML or JSON text (format chosen from the first non-blank
/// character unless `format` is "toml" or "json"). Unknown keys, wrong types
/// and unknown experiments throw Error{kConfigError} naming the key.
ExperimentConfig parse_config(const std::string& text, const std::string& format = "auto");
ExperimentConfig load_config_file(const std::string& path);
/// Applies "key=value" with dotted keys (graph.n=5, grid.mu=0.5,1).
void apply_override(ExperimentConfig& cfg, const std::string& assignment);
/// Checks cross-field constraints; throws kConfigError.
void validate_config(const ExperimentConfig& cfg);
std::string config_to_json(const ExperimentConfig& cfg);

struct ExperimentOutcome {
  ComparisonReport report;
  std::string summary;
  /// True when every exact verdict passed; statistical verdicts are reported
  /// but do not decide the exit status.
  bool exact_pass() const;
};

ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

struct RunArtifacts {
  std::string report_json;
  std::string report_csv;
  std::string manifest;
  std::string summary;
  std::string resolved_config;
};

/// Runs and writes report.json, report.csv, manifest.json, summary.txt and
/// config.resolved.json into cfg.output_dir. Returns 0 when every exact
/// verdict passed and 1 otherwise; throws on configuration or I/O errors.
int run_and_write(const ExperimentConfig& cfg, RunArtifacts* artifacts = nullptr,
                  ExperimentOutcome* outcome = nullptr);

const char* version_string();

}  // namespace dynperc
