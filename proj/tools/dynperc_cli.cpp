// dynperc command-line runner. Talks to the library only through dynperc.h.
//
// Exit status: 0 when every exact verdict passes, 1 when an exact verdict
// fails, 2 on configuration, usage or runtime errors.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dynperc/dynperc.h"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerdict = 1;
constexpr int kExitError = 2;

struct ConfigDeleter {
  void operator()(dp_config* c) const { dp_config_free(c); }
};
struct ResultDeleter {
  void operator()(dp_result* r) const { dp_result_free(r); }
};
using ConfigPtr = std::unique_ptr<dp_config, ConfigDeleter>;
using ResultPtr = std::unique_ptr<dp_result, ResultDeleter>;

class CliError {
 public:
  explicit CliError(dp_status s) : status_(s), message_(dp_last_error()) {}
  dp_status status() const { return status_; }
  const std::string& message() const { return message_; }

 private:
  dp_status status_;
  std::string message_;
};

void check(dp_status s) {
  if (s != DP_OK) throw CliError(s);
}

std::string take(char* s) {
  std::string out = s != nullptr ? s : "";
  dp_string_free(s);
  return out;
}

struct RunOptions {
  std::string config_path;
  std::string experiment;
  std::vector<std::string> overrides;
  std::string graph_file;
  std::string output;
  long long seed = -1;
  long long workers = -1;
  bool quiet = false;
  bool print_config = false;
};

ConfigPtr resolve_config(const RunOptions& o) {
  dp_config* raw = nullptr;
  if (!o.config_path.empty()) {
    check(dp_config_load(o.config_path.c_str(), &raw));
  } else {
    check(dp_config_new(nullptr, &raw));
  }
  ConfigPtr cfg(raw);
  auto set = [&](const std::string& kv) { check(dp_config_set(cfg.get(), kv.c_str())); };
  if (!o.experiment.empty()) set("experiment=\"" + o.experiment + "\"");
  for (const auto& kv : o.overrides) set(kv);
  if (!o.graph_file.empty()) {
    set("graph.builder=\"file\"");
    set("graph.file=" + nlohmann::json(o.graph_file).dump());
  }
  if (o.seed >= 0) set("seed=" + std::to_string(o.seed));
  if (o.workers >= 0) set("workers=" + std::to_string(o.workers));
  if (!o.output.empty()) set("output_dir=" + nlohmann::json(o.output).dump());
  check(dp_config_validate(cfg.get()));
  return cfg;
}

int cmd_run(const RunOptions& o) {
  ConfigPtr cfg = resolve_config(o);
  dp_result* raw = nullptr;
  check(dp_experiment_run(cfg.get(), 1, &raw));
  ResultPtr result(raw);
  if (!o.quiet) {
    char* summary = nullptr;
    check(dp_result_summary(result.get(), &summary));
    std::cout << take(summary);
    char* js = nullptr;
    check(dp_config_to_json(cfg.get(), &js));
    std::cout << "artifacts: " << nlohmann::json::parse(take(js)).at("output_dir").get<std::string>() << "\n";
  }
  return dp_result_exact_pass(result.get()) ? kExitOk : kExitVerdict;
}

int cmd_validate(const RunOptions& o) {
  ConfigPtr cfg = resolve_config(o);
  if (o.print_config) {
    char* js = nullptr;
    check(dp_config_to_json(cfg.get(), &js));
    std::cout << take(js) << "\n";
  } else {
    std::cout << "config ok\n";
  }
  return kExitOk;
}

int cmd_list(bool as_json) {
  char* raw = nullptr;
  check(dp_experiment_list(&raw));
  const std::string text = take(raw);
  if (as_json) {
    std::cout << text << "\n";
    return kExitOk;
  }
  const auto list = nlohmann::json::parse(text);
  std::size_t width = 0;
  for (const auto& e : list) width = std::max(width, e.at("name").get<std::string>().size());
  for (const auto& e : list) {
    const auto name = e.at("name").get<std::string>();
    std::cout << name << std::string(width - name.size() + 2, ' ') << "(" << e.at("anchor").get<std::string>()
              << ")\n"
              << std::string(width + 2, ' ') << e.at("description").get<std::string>() << "\n";
  }
  std::cout << list.size() << " experiments\n";
  return kExitOk;
}

void add_run_flags(CLI::App* sub, RunOptions& o) {
  sub->add_option("config", o.config_path, "TOML or JSON config file")->check(CLI::ExistingFile);
  sub->add_option("-e,--experiment", o.experiment, "experiment name (overrides the config)");
  sub->add_option("-s,--set", o.overrides, "override a config key, e.g. --set grid.mu=0.5,1");
  sub->add_option("--graph-file", o.graph_file, "edge-list file (first line 'n m', then 'u v' per edge)");
  sub->add_option("--seed", o.seed, "master seed")->check(CLI::NonNegativeNumber);
  sub->add_option("--workers", o.workers, "worker threads (0 = all cores; DYNPERC_WORKERS wins)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("-o,--output", o.output, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynperc: random walk on dynamical percolation, exact and Monte Carlo experiments"};
  app.set_version_flag("--version", std::string(dp_version()));
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "run an experiment and write its artifacts");
  add_run_flags(run, run_opts);
  run->add_flag("-q,--quiet", run_opts.quiet, "do not print the summary");

  RunOptions val_opts;
  auto* validate = app.add_subcommand("validate-config", "check a config without running it");
  add_run_flags(validate, val_opts);
  validate->add_flag("--print", val_opts.print_config, "print the resolved config as JSON");

  bool list_json = false;
  auto* list = app.add_subcommand("list-experiments", "print the experiment catalog");
  list->add_flag("--json", list_json, "print the catalog as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*validate) return cmd_validate(val_opts);
    if (*list) return cmd_list(list_json);
  } catch (const CliError& e) {
    std::cerr << "error (" << dp_status_name(e.status()) << "): " << e.message() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
