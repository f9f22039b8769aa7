#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "phaselock/cli/experiment.hpp"

using namespace phaselock;
using namespace phaselock::cli;

namespace {

enum ExitCode { kOk = 0, kConfigFailure = 1, kRuntimeFailure = 2, kAssertFailure = 3 };

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigParseError({{0, "cannot read config file '" + path + "'"}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_issues(const ConfigParseError& e) {
  for (const auto& issue : e.issues()) {
    if (issue.line > 0) {
      std::cerr << "config:" << issue.line << ": " << issue.message << "\n";
    } else {
      std::cerr << "config: " << issue.message << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase estimation and smoothing experiments"};
  app.set_version_flag("--version", std::string("phaselock ") + PHASELOCK_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  bool assert_pass = false;
  bool quiet = false;
  std::string sweep_param;
  std::string sweep_values;

  auto* run = app.add_subcommand("run", "Run an experiment and write CSV output");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the output key)");
  run->add_option("--seed", seed, "Master seed override");
  run->add_option("--trials", trials, "Trial count override");
  run->add_flag("--assert", assert_pass, "Exit 3 when any check fails");
  run->add_flag("-q,--quiet", quiet, "Do not print the summary table");

  auto* check = app.add_subcommand("check", "Validate a config file without running it");
  check->add_option("config", config_path, "Config file")->required();

  auto* sweep = app.add_subcommand("sweep", "Run a config over a list of values of one key");
  sweep->add_option("config", config_path, "Config file")->required();
  sweep->add_option("--param", sweep_param, "Key to vary")->required();
  sweep->add_option("--values", sweep_values, "Comma separated values")->required();
  sweep->add_option("--out", out_dir, "Output directory");
  sweep->add_option("--seed", seed, "Master seed override");
  sweep->add_option("--trials", trials, "Trial count override");
  sweep->add_flag("--assert", assert_pass, "Exit 3 when any check fails");
  sweep->add_flag("-q,--quiet", quiet, "Do not print the summary table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigFailure;
  }

  ExperimentConfig cfg;
  try {
    cfg = parse_config(read_file(config_path));
    if (check->parsed()) {
      std::cout << to_text(cfg);
      return kOk;
    }
    if (seed) cfg.master_seed = *seed;
    if (trials) cfg.trials = *trials;
    if (sweep->parsed()) {
      ExperimentConfig swept = cfg;
      swept.sweep_experiment = cfg.experiment;
      swept.experiment = ExperimentKind::sweep;
      set_config_value(swept, "sweep_param", sweep_param);
      set_config_value(swept, "sweep_values", sweep_values);
      cfg = swept;
    }
    if (auto issues = validate_config(cfg); !issues.empty()) throw ConfigParseError(issues);
  } catch (const ConfigParseError& e) {
    print_issues(e);
    return kConfigFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config: " << e.what() << "\n";
    return kConfigFailure;
  }

  try {
    const ExperimentOutput out = run_experiment(cfg);
    const std::filesystem::path dir =
        !out_dir.empty() ? std::filesystem::path(out_dir)
                         : std::filesystem::path(cfg.output.value_or("."));
    write_outputs(out, dir);
    if (!quiet) std::cout << to_pretty(out.summary);
    if (assert_pass && !out.all_pass) {
      std::cerr << "one or more checks failed\n";
      return kAssertFailure;
    }
  } catch (const ConfigParseError& e) {
    print_issues(e);
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}
