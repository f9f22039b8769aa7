#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "phaselock/linalg.hpp"

namespace phaselock {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;

/// Optical and coupling constants. hbar defaults to 1 (normalized units).
struct PhysicalParams {
  double hbar = 1.0;
  double omega0 = 1.0;  // optical carrier frequency
  double power = 1.0;   // mean optical power
  double beta = 1.0;    // phase coupling

  void validate() const;

  /// Homodyne white-noise intensity Z = hbar * omega0 / (4 * power).
  double noise_intensity() const { return hbar * omega0 / (4.0 * power); }
};

/// Uniform grid with `steps` intervals and `steps + 1` sample times.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1e-3;
  std::size_t steps = 1;

  void validate() const;
  std::size_t samples() const { return steps + 1; }
  double time(std::size_t j) const { return t0 + static_cast<double>(j) * dt; }
  double end() const { return time(steps); }
  double duration() const { return static_cast<double>(steps) * dt; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Continuous-time model dx = A x dt + B du, y = C x + z with white noises of
/// intensity U (m x m) and Z (scalar).
class LinearModel {
 public:
  LinearModel(Mat drift, Mat input, RowVec obs_row, Mat process_intensity,
              double meas_intensity);

  int dim() const { return static_cast<int>(drift_.rows()); }
  int noise_dim() const { return static_cast<int>(input_.cols()); }

  const Mat& drift() const { return drift_; }
  const Mat& input() const { return input_; }
  const RowVec& obs_row() const { return obs_row_; }
  const Mat& process_intensity() const { return process_intensity_; }
  double meas_intensity() const { return meas_intensity_; }

  /// B U B^T
  const Mat& process_covariance() const { return process_cov_; }
  /// C^T Z^{-1} C
  const Mat& measurement_information() const { return meas_info_; }
  /// Observation coupling beta = C(0).
  double coupling() const { return obs_row_(0); }
  bool observable() const { return obs_row_.cwiseAbs().maxCoeff() > 0.0; }

 private:
  Mat drift_;
  Mat input_;
  RowVec obs_row_;
  Mat process_intensity_;
  double meas_intensity_;
  Mat process_cov_;
  Mat meas_info_;
};

/// One realization: states has steps + 1 entries; the noise draws and the
/// step-averaged observations have one entry per interval.
struct Trajectory {
  TimeGrid grid;
  std::vector<Vec> states;
  std::vector<Vec> process_noise;  // increments B-input du_j, covariance U dt
  std::vector<double> obs_noise;   // variance Z / dt
  std::vector<double> observations;
};

/// Ornstein-Uhlenbeck phase message: A = -k, B U B^T = kappa, C = beta,
/// Z = hbar omega0 / 4P. k = 0 gives the Wiener process.
LinearModel ou_model(double k, double kappa, const PhysicalParams& phys);

/// Same model specified directly through beta and Z.
LinearModel ou_model_normalized(double k, double kappa, double beta, double meas_intensity);

/// OU model parameterized by the measurement strength Lambda = beta^2 / (Z k).
LinearModel ou_model_from_lambda(double k, double kappa, double lambda, double beta = 1.0);

/// Wiener-process message with beta = 1 and N = P / (hbar omega0 kappa),
/// so Z = 1 / (4 N kappa).
LinearModel wiener_process_model(double kappa, double photon_number);

/// Lambda = beta^2 / (Z k) of a one-dimensional model with k > 0.
double measurement_strength(const LinearModel& model);

/// beta = 2 M k0 cos(theta).
double coupling_from_geometry(int bounces, double theta, double wavenumber);

/// Harmonic oscillator probed by optical phase: A = [[0, 1/m], [-m w^2, 0]],
/// B = [0, 1]^T, U = hbar beta^2 P / omega0, C = [beta, 0]. The constant
/// radiation-pressure force is absorbed into the position origin.
LinearModel oscillator_model(double mass, double omega_m, const PhysicalParams& phys);

/// As above with beta from the mirror geometry, k0 = omega0 / c.
LinearModel oscillator_model(double mass, double omega_m, int bounces, double theta,
                             PhysicalParams phys);

/// Q = sqrt(U V) / (m w^2) with V = beta^2 / Z.
double oscillator_strength(const LinearModel& model, double mass, double omega_m);

/// x_{j+1} = x_j + (A x_j) dt + B du_j
Vec euler_step(const LinearModel& model, const Vec& x, const Vec& du, double dt);

/// Euler-Maruyama realization, bit-identical for identical inputs.
Trajectory simulate(const LinearModel& model, const TimeGrid& grid, const Vec& x0,
                    std::uint64_t seed);

/// Stationary state covariance of a stable model (Lyapunov solution).
Mat stationary_covariance(const LinearModel& model);

/// Independent, reproducible per-trial seed (splitmix64 finalizer).
std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::uint64_t trial_index);

using Rng = std::mt19937_64;

/// Standard normal draw used by every simulation path.
inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace phaselock
