#include "phaselock/smoothers.hpp"

#include <cmath>
#include <stdexcept>

#include "phaselock/errors.hpp"

namespace phaselock {

namespace {

constexpr double kPsdTolerance = 1e-9;

template <class T>
T hermite_midpoint(const T& left, const T& right, const T& left_slope, const T& right_slope,
                   double dt) {
  return 0.5 * (left + right) + (dt / 8.0) * (left_slope - right_slope);
}

}  // namespace

Mat information_rhs(const LinearModel& model, const Mat& omega) {
  Mat oa = omega * model.drift();
  return -oa - oa.transpose() - model.measurement_information() +
         omega * model.process_covariance() * omega;
}

std::shared_ptr<const InformationPath> integrate_backward_information(const LinearModel& model,
                                                                      const TimeGrid& grid) {
  grid.validate();
  const int n = model.dim();
  auto path = std::make_shared<InformationPath>();
  path->grid = grid;
  path->values.assign(grid.samples(), Mat::Zero(n, n));
  path->midpoints.assign(grid.steps, Mat::Zero(n, n));

  const double h = -grid.dt;
  Mat w = Mat::Zero(n, n);
  Mat slope = information_rhs(model, w);
  for (std::size_t j = grid.steps; j-- > 0;) {
    const Mat& k1 = slope;
    const Mat k2 = information_rhs(model, Mat(w + 0.5 * h * k1));
    const Mat k3 = information_rhs(model, Mat(w + 0.5 * h * k2));
    const Mat k4 = information_rhs(model, Mat(w + h * k3));
    Mat next = symmetrize(w + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    if (!next.allFinite() || !is_psd(next, kPsdTolerance)) {
      throw StepSizeError("integrate_backward_information: information matrix left the PSD "
                          "cone at step " + std::to_string(j) + "; reduce dt");
    }
    Mat next_slope = information_rhs(model, next);
    path->midpoints[j] = symmetrize(hermite_midpoint<Mat>(next, w, next_slope, slope, grid.dt));
    path->values[j] = next;
    w = std::move(next);
    slope = std::move(next_slope);
  }
  return path;
}

BackwardInfo backward_filter(const LinearModel& model, std::shared_ptr<const InformationPath> path,
                             std::span<const double> observations) {
  if (!path) throw std::invalid_argument("backward_filter: missing information path");
  const TimeGrid& grid = path->grid;
  if (observations.size() != grid.steps) {
    throw std::invalid_argument("backward_filter: observations must span the full grid");
  }
  const int n = model.dim();
  const Mat& a = model.drift();
  const Mat& q = model.process_covariance();
  const Vec c_over_z = model.obs_row().transpose() / model.meas_intensity();
  const double h = -grid.dt;

  // d omega/dt = -(A^T - Omega Q) omega - C^T Z^-1 y
  auto rhs = [&](const Mat& info, const Vec& v, double y) -> Vec {
    return -(a.transpose() * v) + info * (q * v) - c_over_z * y;
  };

  BackwardInfo out;
  out.grid = grid;
  out.information = path;
  out.info_vectors.assign(grid.samples(), Vec::Zero(n));
  Vec v = Vec::Zero(n);
  for (std::size_t j = grid.steps; j-- > 0;) {
    const double y = observations[j];
    const Vec k1 = rhs(path->values[j + 1], v, y);
    const Vec k2 = rhs(path->midpoints[j], Vec(v + 0.5 * h * k1), y);
    const Vec k3 = rhs(path->midpoints[j], Vec(v + 0.5 * h * k2), y);
    const Vec k4 = rhs(path->values[j], Vec(v + h * k3), y);
    v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.info_vectors[j] = v;
  }
  return out;
}

BackwardInfo backward_filter(const LinearModel& model, const TimeGrid& grid,
                             std::span<const double> observations) {
  return backward_filter(model, integrate_backward_information(model, grid), observations);
}

SmoothRun bryson_frazier_smooth(const LinearModel& model, const FilterRun& fr) {
  if (fr.direction != Direction::forward || !fr.covariance) {
    throw std::invalid_argument("bryson_frazier_smooth: needs a forward run with covariances");
  }
  const CovariancePath& cov = *fr.covariance;
  if (!cov.invertible()) {
    throw IllConditionedError(
        "bryson_frazier_smooth: filter covariance is singular on the grid (use Sigma0 > 0 or "
        "full-rank process noise)");
  }
  const TimeGrid& grid = fr.grid;
  const Mat& a = model.drift();
  const Mat& q = model.process_covariance();
  const double h = -grid.dt;

  auto x_rhs = [&](const Mat& s_inv, const Vec& xs, const Vec& xf) -> Vec {
    return a * xs + q * (s_inv * (xs - xf));
  };
  auto p_rhs = [&](const Mat& s_inv, const Mat& p) -> Mat {
    const Mat f = a + q * s_inv;
    Mat fp = f * p;
    return fp + fp.transpose() - q;
  };

  SmoothRun out;
  out.grid = grid;
  out.estimates.resize(grid.samples());
  out.covariances.resize(grid.samples());
  Vec x = fr.estimates.back();
  Mat p = cov.values.back();
  out.estimates[grid.steps] = x;
  out.covariances[grid.steps] = p;
  for (std::size_t j = grid.steps; j-- > 0;) {
    const Mat& inv_r = cov.inverse_values[j + 1];
    const Mat& inv_m = cov.inverse_midpoints[j];
    const Mat& inv_l = cov.inverse_values[j];
    const Vec& xf_r = fr.estimates[j + 1];
    const Vec& xf_m = fr.estimate_midpoints[j];
    const Vec& xf_l = fr.estimates[j];

    const Vec kx1 = x_rhs(inv_r, x, xf_r);
    const Mat kp1 = p_rhs(inv_r, p);
    const Vec kx2 = x_rhs(inv_m, Vec(x + 0.5 * h * kx1), xf_m);
    const Mat kp2 = p_rhs(inv_m, Mat(p + 0.5 * h * kp1));
    const Vec kx3 = x_rhs(inv_m, Vec(x + 0.5 * h * kx2), xf_m);
    const Mat kp3 = p_rhs(inv_m, Mat(p + 0.5 * h * kp2));
    const Vec kx4 = x_rhs(inv_l, Vec(x + h * kx3), xf_l);
    const Mat kp4 = p_rhs(inv_l, Mat(p + h * kp3));
    x = x + (h / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
    p = symmetrize(p + (h / 6.0) * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4));
    if (!p.allFinite() || !is_psd(p, kPsdTolerance)) {
      throw StepSizeError("bryson_frazier_smooth: smoothing covariance left the PSD cone");
    }
    out.estimates[j] = x;
    out.covariances[j] = p;
  }
  return out;
}

SmoothRun two_filter_combine(const FilterRun& fwd, const BackwardInfo& bwd) {
  if (!(fwd.grid == bwd.grid)) throw std::invalid_argument("two_filter_combine: grid mismatch");
  if (!fwd.covariance || !fwd.covariance->invertible()) {
    throw IllConditionedError("two_filter_combine: forward covariance is singular on the grid");
  }
  const auto& inv = fwd.covariance->inverse_values;
  const auto& info = bwd.info_matrices();
  SmoothRun out;
  out.grid = fwd.grid;
  out.estimates.reserve(fwd.grid.samples());
  out.covariances.reserve(fwd.grid.samples());
  for (std::size_t j = 0; j < fwd.grid.samples(); ++j) {
    const Mat pi = inverse_spd(Mat(inv[j] + info[j]));
    out.estimates.push_back(pi * (inv[j] * fwd.estimates[j] + bwd.info_vectors[j]));
    out.covariances.push_back(pi);
  }
  return out;
}

namespace {

double information_rate(const LinearModel& model) {
  const double drift = model.drift().cwiseAbs().maxCoeff();
  const double coupling = std::sqrt(model.process_covariance().cwiseAbs().maxCoeff() *
                                    model.measurement_information().cwiseAbs().maxCoeff());
  const double rate = std::max(drift, coupling);
  return rate > 0.0 ? rate : 1.0;
}

Mat backward_steady_information(const LinearModel& model, const SteadyStateOptions& opts) {
  const int n = model.dim();
  if (n == 1) {
    // Positive root of -2 a W - m + q W^2 = 0.
    const double a = model.drift()(0, 0);
    const double q = model.process_covariance()(0, 0);
    const double m = model.measurement_information()(0, 0);
    Mat r(1, 1);
    if (q > 0.0) {
      r(0, 0) = (a + std::sqrt(a * a + q * m)) / q;
    } else if (m == 0.0) {
      r(0, 0) = 0.0;
    } else if (a < 0.0) {
      r(0, 0) = m / (-2.0 * a);
    } else {
      throw DivergenceError("backward steady state: information grows without bound");
    }
    return r;
  }
  // Backward in time the information equation is a forward Riccati equation.
  return integrate_to_steady_state(
      Mat::Zero(n, n), information_rate(model),
      [&](const Mat& w) { return Mat(-information_rhs(model, w)); }, opts,
      "backward_steady_state_covariance");
}

}  // namespace

Mat backward_steady_state_covariance(const LinearModel& model, const SteadyStateOptions& opts) {
  return inverse_spd(backward_steady_information(model, opts));
}

Mat smoothing_steady_state_covariance(const LinearModel& model, const SteadyStateOptions& opts) {
  const Mat sigma = steady_state_covariance(model, opts);
  const Mat info = backward_steady_information(model, opts);
  return inverse_spd(Mat(inverse_spd(sigma) + info));
}

double ou_smoothing_steady_state(double k, double kappa, double lambda) {
  if (!(k > 0.0)) throw std::invalid_argument("ou_smoothing_steady_state: k must be > 0");
  if (!(kappa >= 0.0) || !(lambda >= 0.0)) {
    throw std::invalid_argument("ou_smoothing_steady_state: kappa, Lambda must be >= 0");
  }
  return kappa / (2.0 * k * std::sqrt(kappa * lambda / k + 1.0));
}

}  // namespace phaselock
