#include "phaselock/stochastic_core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace phaselock {

void PhysicalParams::validate() const {
  if (!(hbar > 0.0) || !(omega0 > 0.0) || !(power > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("PhysicalParams: hbar, omega0, power and beta must be > 0");
  }
}

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("TimeGrid: dt must be > 0");
  if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
  if (!std::isfinite(t0)) throw std::invalid_argument("TimeGrid: t0 must be finite");
}

LinearModel::LinearModel(Mat drift, Mat input, RowVec obs_row, Mat process_intensity,
                         double meas_intensity)
    : drift_(std::move(drift)),
      input_(std::move(input)),
      obs_row_(std::move(obs_row)),
      process_intensity_(std::move(process_intensity)),
      meas_intensity_(meas_intensity) {
  const auto n = drift_.rows();
  if (n < 1 || n > kMaxStateDim || drift_.cols() != n) {
    throw std::invalid_argument("LinearModel: drift must be square with 1 <= n <= " +
                                std::to_string(kMaxStateDim));
  }
  if (input_.rows() != n || input_.cols() < 1) {
    throw std::invalid_argument("LinearModel: input must be n x m");
  }
  const auto m = input_.cols();
  if (process_intensity_.rows() != m || process_intensity_.cols() != m) {
    throw std::invalid_argument("LinearModel: process intensity must be m x m");
  }
  if (obs_row_.cols() != n) throw std::invalid_argument("LinearModel: obs_row must be 1 x n");
  if (!(meas_intensity_ > 0.0) || !std::isfinite(meas_intensity_)) {
    throw std::invalid_argument("LinearModel: measurement intensity Z must be > 0");
  }
  if ((process_intensity_ - process_intensity_.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, process_intensity_.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("LinearModel: process intensity must be symmetric");
  }
  if (!is_psd(process_intensity_, 1e-12)) {
    throw std::invalid_argument("LinearModel: process intensity must be PSD");
  }
  process_cov_ = symmetrize(input_ * process_intensity_ * input_.transpose());
  meas_info_ = obs_row_.transpose() * obs_row_ / meas_intensity_;
}

namespace {

Mat scalar_mat(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return m;
}

}  // namespace

LinearModel ou_model_normalized(double k, double kappa, double beta, double meas_intensity) {
  if (!(k >= 0.0)) throw std::invalid_argument("ou_model: decay rate k must be >= 0");
  if (!(kappa >= 0.0)) throw std::invalid_argument("ou_model: kappa must be >= 0");
  RowVec c(1);
  c(0) = beta;
  return LinearModel(scalar_mat(-k), scalar_mat(1.0), c, scalar_mat(kappa), meas_intensity);
}

LinearModel ou_model(double k, double kappa, const PhysicalParams& phys) {
  phys.validate();
  return ou_model_normalized(k, kappa, phys.beta, phys.noise_intensity());
}

LinearModel ou_model_from_lambda(double k, double kappa, double lambda, double beta) {
  if (!(k > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("ou_model_from_lambda: k and Lambda must be > 0");
  }
  return ou_model_normalized(k, kappa, beta, beta * beta / (lambda * k));
}

LinearModel wiener_process_model(double kappa, double photon_number) {
  if (!(kappa > 0.0) || !(photon_number > 0.0)) {
    throw std::invalid_argument("wiener_process_model: kappa and N must be > 0");
  }
  return ou_model_normalized(0.0, kappa, 1.0, 1.0 / (4.0 * photon_number * kappa));
}

double measurement_strength(const LinearModel& model) {
  if (model.dim() != 1) throw std::invalid_argument("measurement_strength: model must be 1-D");
  const double k = -model.drift()(0, 0);
  if (!(k > 0.0)) throw std::invalid_argument("measurement_strength: requires k > 0");
  const double beta = model.coupling();
  return beta * beta / (model.meas_intensity() * k);
}

double coupling_from_geometry(int bounces, double theta, double wavenumber) {
  if (bounces < 1) throw std::invalid_argument("coupling_from_geometry: M must be >= 1");
  double c = std::cos(theta);
  if (std::abs(c) < 1e-15) c = 0.0;
  return 2.0 * bounces * wavenumber * c;
}

LinearModel oscillator_model(double mass, double omega_m, const PhysicalParams& phys) {
  if (!(mass > 0.0) || !(omega_m > 0.0)) {
    throw std::invalid_argument("oscillator_model: mass and frequency must be > 0");
  }
  if (!(phys.hbar > 0.0) || !(phys.omega0 > 0.0) || !(phys.power > 0.0) || !(phys.beta >= 0.0)) {
    throw std::invalid_argument("oscillator_model: invalid physical parameters");
  }
  Mat a(2, 2);
  a << 0.0, 1.0 / mass, -mass * omega_m * omega_m, 0.0;
  Mat b(2, 1);
  b << 0.0, 1.0;
  RowVec c(2);
  c << phys.beta, 0.0;
  const double u = phys.hbar * phys.beta * phys.beta * phys.power / phys.omega0;
  return LinearModel(a, b, c, scalar_mat(u), phys.noise_intensity());
}

LinearModel oscillator_model(double mass, double omega_m, int bounces, double theta,
                             PhysicalParams phys) {
  phys.beta = coupling_from_geometry(bounces, theta, phys.omega0 / kSpeedOfLight);
  return oscillator_model(mass, omega_m, phys);
}

double oscillator_strength(const LinearModel& model, double mass, double omega_m) {
  const double beta = model.coupling();
  const double v = beta * beta / model.meas_intensity();
  const double u = model.process_covariance()(1, 1);
  return std::sqrt(u * v) / (mass * omega_m * omega_m);
}

Vec euler_step(const LinearModel& model, const Vec& x, const Vec& du, double dt) {
  Vec drift = model.drift() * x;
  Vec kick = model.input() * du;
  return x + drift * dt + kick;
}

Trajectory simulate(const LinearModel& model, const TimeGrid& grid, const Vec& x0,
                    std::uint64_t seed) {
  grid.validate();
  if (x0.size() != model.dim()) throw std::invalid_argument("simulate: x0 has wrong dimension");

  Trajectory traj;
  traj.grid = grid;
  traj.states.reserve(grid.samples());
  traj.process_noise.reserve(grid.steps);
  traj.obs_noise.reserve(grid.steps);
  traj.observations.reserve(grid.steps);

  const Mat noise_factor = psd_factor(model.process_intensity()) * std::sqrt(grid.dt);
  const double obs_scale = std::sqrt(model.meas_intensity() / grid.dt);
  const int m = model.noise_dim();

  Rng rng(seed);
  Vec x = x0;
  traj.states.push_back(x);
  Vec unit(m);
  for (std::size_t j = 0; j < grid.steps; ++j) {
    for (int i = 0; i < m; ++i) unit(i) = standard_normal(rng);
    const double v = obs_scale * standard_normal(rng);
    Vec du = noise_factor * unit;
    const double y = model.obs_row().dot(x) + v;
    traj.process_noise.push_back(du);
    traj.obs_noise.push_back(v);
    traj.observations.push_back(y);
    x = euler_step(model, x, du, grid.dt);
    traj.states.push_back(x);
  }
  return traj;
}

Mat stationary_covariance(const LinearModel& model) {
  return solve_lyapunov(model.drift(), model.process_covariance());
}

std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
  std::uint64_t z = master_seed + (trial_index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace phaselock
