#pragma once

#include <cstddef>
#include <cstdint>

#include "phaselock/linalg.hpp"
#include "phaselock/stochastic_core.hpp"

namespace phaselock {

/// Mirror oscillator in normalized form. V = beta^2 / Z = 2 Q m w^2 / hbar and
/// U = hbar Q m w^2 / 2, so that sqrt(U V) = Q m w^2 and U / V = hbar^2 / 4.
struct OscParams {
  double mass = 1.0;
  double mech_freq = 1.0;
  double hbar = 1.0;
  double q = 1.0;

  void validate() const;
  double v() const { return 2.0 * q * mass * mech_freq * mech_freq / hbar; }
  double u() const { return hbar * q * mass * mech_freq * mech_freq / 2.0; }

  /// Q = 2 beta^2 P / (m omega0 w^2) from the optical parameters.
  static OscParams from_physical(double mass, double mech_freq, const PhysicalParams& phys);
};

struct CovariancePair {
  Mat filter_cov;
  Mat backward_cov;
  Mat smooth_cov;
};

/// State-space model of the oscillator with coupling beta (Z = beta^2 / V).
LinearModel oscillator_model(const OscParams& p, double beta = 1.0);

/// Closed-form Kalman-Bucy steady state. Q = 0 raises DivergenceError.
Mat oscillator_filter_steady_state(const OscParams& p);

/// Backward steady state: Sigma_ss with the off-diagonal negated.
Mat oscillator_backward_steady_state(const OscParams& p);

/// Smoothing steady state diag(Pi11, Pi22) in real arithmetic.
Mat oscillator_smoothing_steady_state(const OscParams& p);

CovariancePair oscillator_steady_states(const OscParams& p);

/// Pi11 Pi22 = (hbar^2 / 32) [1 + (1 + Q^2)^{-1/2}].
double oscillator_uncertainty_product(const OscParams& p);

/// t_f = 1 / (sqrt(2) w [(1 + Q^2)^{1/2} - 1]^{1/2}).
double oscillator_relaxation_time(const OscParams& p);

struct ConstraintReport {
  double photon_margin = 0.0;     // P t_f / (hbar omega0)
  double threshold_margin = 0.0;  // beta^2 Sigma11
  double photon_limit = 100.0;
  double threshold_limit = 0.1;
  bool photon_ok = false;
  bool threshold_ok = false;
};

/// Both margins for a physical parameterization; phys must reproduce p.q.
ConstraintReport constraint_report(const OscParams& p, const PhysicalParams& phys,
                                   double photon_limit = 100.0, double threshold_limit = 0.1);

struct OscValidation {
  std::size_t trials = 0;
  CovariancePair empirical;
  CovariancePair stderr_cov;  // entrywise standard errors
  double det_filter = 0.0;
  double det_filter_stderr = 0.0;
  double filter_window_begin = 0.0;
  double smooth_window_begin = 0.0;
  double smooth_window_end = 0.0;
  bool transient_warning = false;  // duration <= 20 t_f
};

/// Monte Carlo estimate of the filter, retrodiction and smoothing error
/// covariances. Each trial simulates the model from x0 = 0, filters with
/// Sigma(t0) = diag(hbar / 2 m w, hbar m w / 2) and combines with the
/// backward information filter.
OscValidation simulate_and_validate(const OscParams& p, const TimeGrid& grid, std::size_t trials,
                                    std::uint64_t master_seed, double beta = 1.0);

}  // namespace phaselock
