#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phaselock/errors.hpp"
#include "phaselock/pll.hpp"

namespace phaselock::cli {

enum class ExperimentKind { ou_filter, wiener_filter_freq, ou_smooth, wiener_process, pll,
                            oscillator, sweep };

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view s);

/// Declarative experiment description. Absent optionals take per-experiment
/// defaults when the experiment runs.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::ou_filter;

  // message model
  std::optional<double> k;
  std::optional<double> kappa;
  std::optional<double> beta;
  std::optional<double> lambda;
  std::optional<double> z;
  std::optional<double> photon_number;  // N
  // oscillator
  std::optional<double> q;
  std::optional<double> mass;
  std::optional<double> mech_freq;
  std::optional<double> hbar;
  std::optional<double> power;
  std::optional<double> omega0;
  // grid
  std::optional<double> t0;
  std::optional<double> dt;
  std::optional<double> duration;
  std::optional<double> duration_gamma;
  // run
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> master_seed;
  std::optional<DiscriminatorMode> mode;
  std::optional<EstimatorKind> estimator;
  std::optional<SmoothingKind> smoothing;
  std::optional<double> sigma0;
  std::optional<double> delay;
  std::optional<double> slip_threshold;
  std::optional<bool> allow_coarse_dt;
  std::optional<bool> dump_run;
  // frequency tables
  std::optional<std::uint64_t> freq_points;
  std::optional<double> freq_min;
  std::optional<double> freq_max;
  // sweeps
  std::optional<ExperimentKind> sweep_experiment;
  std::optional<std::string> sweep_param;
  std::optional<std::vector<double>> sweep_values;
  // output
  std::optional<std::string> output;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct ConfigIssue {
  int line = 0;  // 0 when the issue is not tied to a line
  std::string message;
};

/// Thrown by parse_config with every problem found, not just the first.
class ConfigParseError : public ConfigError {
 public:
  explicit ConfigParseError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Flat key = value text with '#' comments and [section] headers.
ExperimentConfig parse_config(std::string_view text);

/// Required keys and constraints (dt gamma < 0.02 unless allow_coarse_dt).
std::vector<ConfigIssue> validate_config(const ExperimentConfig& cfg);

/// Sets one key from its textual value (used for sweeps and overrides).
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Canonical key = value text; parse_config(to_text(c)) == c.
std::string to_text(const ExperimentConfig& cfg);

/// Names of every accepted key.
std::vector<std::string> config_keys();

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace phaselock::cli

#include "phaselock/oscillator.hpp"

namespace phaselock::cli {

/// Scalar message model from (k, kappa, beta, Lambda | Z) or (kappa, N).
LinearModel scalar_model(const ExperimentConfig& cfg);

OscParams oscillator_params(const ExperimentConfig& cfg);

/// gamma for scalar messages, 1 / t_f for the oscillator.
double characteristic_rate(const ExperimentConfig& cfg);

/// dt defaults to 1 / (200 rate); duration to duration_gamma / rate, else
/// 40 / rate (25 t_f for the oscillator).
TimeGrid resolve_grid(const ExperimentConfig& cfg);

}  // namespace phaselock::cli
