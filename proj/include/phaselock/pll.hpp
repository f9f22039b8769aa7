#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "phaselock/simd/kernels.hpp"
#include "phaselock/spectral.hpp"
#include "phaselock/stochastic_core.hpp"

namespace phaselock {

enum class EstimatorKind { kb_filter, wiener_loop };
enum class SmoothingKind { none, post_loop, state_variable };

/// One closed homodyne loop. The message must be scalar; phi = beta x.
struct LoopExperiment {
  LinearModel model;
  EstimatorKind estimator = EstimatorKind::kb_filter;
  DiscriminatorMode mode = DiscriminatorMode::linearized;
  TimeGrid grid{};
  /// Draw x0 from the stationary law when the message is stable; otherwise x0 = 0.
  bool stationary_start = true;
  /// Initial filter variance; NaN selects the stationary variance (or 0).
  double sigma0 = std::nan("");
  SmoothingKind smoothing = SmoothingKind::none;
  /// Post-loop delay; 0 selects 10 / gamma.
  double delay = 0.0;
  double slip_threshold = kPi;
};

struct PllRun {
  TimeGrid grid{};
  DiscriminatorMode mode = DiscriminatorMode::linearized;
  std::vector<double> true_phase;       // samples()
  std::vector<double> estimate;         // samples(), phi_hat = beta xhat
  std::vector<double> state_estimate;   // samples(), xhat
  std::vector<double> homodyne_record;  // steps, eta
  std::vector<double> slips;            // event times
};

/// Discrete loop: xhat <- decay xhat + gains[j] eta_j.
struct LoopDesign {
  double gamma = 0.0;  // closed-loop bandwidth sqrt(a^2 + beta^2 q / Z)
  double decay = 1.0;
  std::vector<double> gains;
  double sigma0 = 0.0;
  double stationary_variance = 0.0;  // 0 when the message is not stable
};

/// Closed-loop bandwidth gamma of a scalar message model.
double loop_bandwidth(const LinearModel& model);

/// Gains for the time-varying Kalman-Bucy loop (explicit Euler with the
/// step-start gain) or the constant Wiener loop filter (exact-pole recursion).
LoopDesign design_loop(const LoopExperiment& ex);

PllRun run_pll(const LoopExperiment& ex, std::uint64_t seed);

PllRun run_pll(const LinearModel& model, EstimatorKind estimator, DiscriminatorMode mode,
               const TimeGrid& grid, std::uint64_t seed);

/// Event times where |phi - phi_hat| crosses an odd multiple of threshold
/// since the previous event.
std::vector<double> detect_cycle_slips(const PllRun& run, double threshold = kPi);

struct PostLoopSeries {
  std::vector<double> smoothed;  // element j estimates x(t_j) using data up to t_j + delay
  std::size_t delay_steps = 0;
  bool truncation_warning = false;  // delay < 5 / rate
};

/// Runs the anticausal post-loop recursion over the loop estimate xhat with
/// its impulse response truncated at delay.
PostLoopSeries apply_post_loop_smoother(const PllRun& run, const OnePoleRecursion& f,
                                        double delay);

struct MonteCarloOptions {
  /// Every trial reuses the master seed (degenerate statistics check).
  bool replicate_seed = false;
};

struct MonteCarloResult {
  std::size_t trials = 0;
  TimeGrid grid{};
  double gamma = 0.0;
  std::vector<double> mse;
  std::vector<double> stderr_mse;
  double window_begin = 0.0;  // time bounds of the tail window
  double window_end = 0.0;
  double steady_state_mse = 0.0;
  double steady_state_stderr = 0.0;
  double analytic_mse = 0.0;  // beta^2 Sigma_ss
  std::uint64_t slips = 0;
  double slip_rate = 0.0;  // per unit time per trial

  bool smoothed = false;
  std::vector<double> smoothed_mse;
  std::vector<double> smoothed_stderr;
  double smoothed_window_begin = 0.0;
  double smoothed_window_end = 0.0;
  double smoothed_steady_state_mse = 0.0;
  double smoothed_steady_state_stderr = 0.0;
  double smoothed_analytic_mse = 0.0;  // beta^2 Pi_ss
  double delay = 0.0;
  bool truncation_warning = false;
};

MonteCarloResult monte_carlo_mse(const LoopExperiment& ex, std::size_t trials,
                                 std::uint64_t master_seed, const MonteCarloOptions& opts = {});

}  // namespace phaselock
