#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "phaselock/errors.hpp"
#include "phaselock/linalg.hpp"
#include "phaselock/stochastic_core.hpp"

namespace phaselock {

enum class Direction { forward, backward };

/// Deterministic matrix path on a grid: RK4 values at every sample and
/// cubic-Hermite values at every half step, plus their inverses when they
/// exist. Shared read-only between filter runs on the same model and grid.
struct CovariancePath {
  TimeGrid grid;
  std::vector<Mat> values;     // samples()
  std::vector<Mat> midpoints;  // steps
  std::vector<Mat> inverse_values;     // empty when some value is singular
  std::vector<Mat> inverse_midpoints;  // idem
  bool invertible() const { return !inverse_values.empty(); }
};

/// Right-hand side of the variance equation
/// dS/dt = A S + S A^T - S C^T Z^-1 C S + B U B^T.
Mat riccati_rhs(const LinearModel& model, const Mat& sigma);

/// RK4 integration of the variance equation from sigma0, symmetrizing after
/// every step. Throws StepSizeError if a step leaves the PSD cone.
std::shared_ptr<const CovariancePath> integrate_riccati(const LinearModel& model,
                                                        const TimeGrid& grid,
                                                        const Mat& sigma0);

/// Output of a forward (or backward) filter pass.
struct FilterRun {
  TimeGrid grid;
  Direction direction = Direction::forward;
  std::vector<Vec> estimates;           // samples()
  std::vector<Vec> estimate_midpoints;  // steps, Hermite dense output
  std::vector<Vec> gains;               // samples(), Sigma C^T / Z
  std::vector<double> innovations;      // steps, y_j - C xhat_j
  std::vector<double> observations;     // steps
  std::shared_ptr<const CovariancePath> covariance;

  const std::vector<Mat>& covariances() const { return covariance->values; }
};

/// Kalman-Bucy estimator d xhat/dt = A xhat + Gamma (y - C xhat), integrated
/// with RK4 against a precomputed covariance path. Observations are held
/// constant over each interval.
FilterRun kb_filter(const LinearModel& model, std::shared_ptr<const CovariancePath> path,
                    std::span<const double> observations, const Vec& x0);

FilterRun kb_filter(const LinearModel& model, const TimeGrid& grid,
                    std::span<const double> observations, const Vec& x0, const Mat& sigma0);

struct SteadyStateOptions {
  double tol = 1e-10;
  std::size_t max_steps = 10'000'000;
};

/// Stabilizing solution of the algebraic Riccati equation. Scalar models use
/// the quadratic root; otherwise the variance equation is integrated from zero
/// until |dS/dt| < tol |S|. Throws DivergenceError when the budget runs out.
Mat steady_state_covariance(const LinearModel& model, const SteadyStateOptions& opts = {});

/// Generic RK4 steady-state search for dX/dt = rhs(X), shared with the
/// backward information filter.
template <class Rhs>
Mat integrate_to_steady_state(const Mat& start, double rate, Rhs&& rhs,
                              const SteadyStateOptions& opts, const char* what);

/// Closed-form Ornstein-Uhlenbeck filter parameters.
struct OuClosedForm {
  double k = 0.0;
  double kappa = 0.0;
  double lambda = 0.0;  // 4 beta^2 P / (hbar omega0 k)
  double gamma = 0.0;   // k (kappa Lambda / k + 1)^{1/2}
  double sigma_ss = 0.0;

  static OuClosedForm from(double k, double kappa, double lambda);
  /// Transient constant mu for a given initial variance.
  double mu(double sigma0) const;
};

/// Sigma(t0 + elapsed) of the scalar OU variance equation.
double ou_variance_closed_form(const OuClosedForm& cf, double sigma0, double elapsed);

struct WienerProcessSolution {
  double sigma = 0.0;
  double gain = 0.0;
};

/// Wiener-process (k -> 0) variance and gain with beta = 1:
/// Sigma_ss = 1 / (2 sqrt N), gamma = 2 kappa sqrt N, Gamma = 4 N kappa Sigma.
WienerProcessSolution wiener_process_closed_form(double kappa, double photon_number,
                                                 double sigma0, double elapsed);

/// beta^2 Sigma_11; the loop stays locked while this is well below one.
double threshold_margin(double beta, double sigma11);

// --------------------------------------------------------------------------

template <class Rhs>
Mat integrate_to_steady_state(const Mat& start, double rate, Rhs&& rhs,
                              const SteadyStateOptions& opts, const char* what) {
  const double h = 0.02 / rate;
  Mat x = start;
  for (std::size_t step = 0; step < opts.max_steps; ++step) {
    const Mat k1 = rhs(x);
    const double norm = x.norm();
    if (k1.norm() <= opts.tol * norm * rate) return x;
    const Mat k2 = rhs(Mat(x + 0.5 * h * k1));
    const Mat k3 = rhs(Mat(x + 0.5 * h * k2));
    const Mat k4 = rhs(Mat(x + h * k3));
    x = symmetrize(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    if (!x.allFinite()) break;
  }
  throw DivergenceError(std::string(what) + ": no steady state within the step budget");
}

}  // namespace phaselock
