#pragma once

#include <memory>
#include <span>
#include <vector>

#include "phaselock/kalman_bucy.hpp"
#include "phaselock/linalg.hpp"
#include "phaselock/stochastic_core.hpp"

namespace phaselock {

/// Fixed-interval smoothed estimates and covariances on the forward grid.
struct SmoothRun {
  TimeGrid grid;
  std::vector<Vec> estimates;
  std::vector<Mat> covariances;
};

/// Backward filter in information form: Omega = Xi^{-1}, omega = Xi^{-1} x''.
/// The matrix path is data independent and may be shared across records.
struct InformationPath {
  TimeGrid grid;
  std::vector<Mat> values;     // samples()
  std::vector<Mat> midpoints;  // steps
};

struct BackwardInfo {
  TimeGrid grid;
  std::shared_ptr<const InformationPath> information;
  std::vector<Vec> info_vectors;  // samples()

  const std::vector<Mat>& info_matrices() const { return information->values; }
};

/// dOmega/dt = -Omega A - A^T Omega - C^T Z^-1 C + Omega B U B^T Omega
Mat information_rhs(const LinearModel& model, const Mat& omega);

/// RK4 integration backward from Omega(T) = 0.
std::shared_ptr<const InformationPath> integrate_backward_information(const LinearModel& model,
                                                                      const TimeGrid& grid);

/// Retrodiction from the advanced record; observations held per interval.
BackwardInfo backward_filter(const LinearModel& model, std::shared_ptr<const InformationPath> path,
                             std::span<const double> observations);

BackwardInfo backward_filter(const LinearModel& model, const TimeGrid& grid,
                             std::span<const double> observations);

/// Bryson-Frazier smoother: backward integration of
///   dx~/dt = A x~ + B U B^T Sigma^-1 (x~ - xhat)
///   dPi/dt = (A + B U B^T Sigma^-1) Pi + Pi (...)^T - B U B^T
/// from (x~, Pi)(T) = (xhat, Sigma)(T). Requires Sigma invertible on the grid.
SmoothRun bryson_frazier_smooth(const LinearModel& model, const FilterRun& fr);

/// Two-filter combination Pi = (Sigma^-1 + Omega)^-1, x~ = Pi (Sigma^-1 xhat + omega).
SmoothRun two_filter_combine(const FilterRun& fwd, const BackwardInfo& bwd);

/// Steady-state backward covariance Xi_ss (PSD root of the backward equation).
Mat backward_steady_state_covariance(const LinearModel& model,
                                     const SteadyStateOptions& opts = {});

/// Pi_ss = (Sigma_ss^-1 + Xi_ss^-1)^-1
Mat smoothing_steady_state_covariance(const LinearModel& model,
                                      const SteadyStateOptions& opts = {});

/// Irreducible OU smoothing error kappa / (2 k (kappa Lambda / k + 1)^{1/2}).
double ou_smoothing_steady_state(double k, double kappa, double lambda);

}  // namespace phaselock
