#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "phaselock/cli/config.hpp"
#include "phaselock/cli/result_table.hpp"

namespace phaselock::cli {

struct ExperimentOutput {
  std::string name;
  ResultTable summary;  // quantity, analytic, value, stderr, tolerance, criterion, status
  std::optional<ResultTable> trace;
  std::optional<ResultTable> run_dump;
  bool all_pass = true;
};

/// Runs one validated configuration. Output is a pure function of the config.
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

/// Writes <name>-summary.csv, and <name>-trace.csv / <name>-run.csv when present.
void write_outputs(const ExperimentOutput& out, const std::filesystem::path& dir);

/// Reads the config echoed in a CSV's metadata block.
ExperimentConfig config_from_metadata(const std::string& csv_text);

}  // namespace phaselock::cli
