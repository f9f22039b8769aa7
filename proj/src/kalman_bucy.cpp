#include "phaselock/kalman_bucy.hpp"

#include <cmath>
#include <stdexcept>

#include "phaselock/errors.hpp"

namespace phaselock {

namespace {

constexpr double kPsdTolerance = 1e-9;

Mat hermite_midpoint(const Mat& left, const Mat& right, const Mat& left_slope,
                     const Mat& right_slope, double dt) {
  return 0.5 * (left + right) + (dt / 8.0) * (left_slope - right_slope);
}

void fill_inverses(CovariancePath& path) {
  try {
    std::vector<Mat> inv_values;
    std::vector<Mat> inv_mid;
    inv_values.reserve(path.values.size());
    inv_mid.reserve(path.midpoints.size());
    for (const auto& s : path.values) inv_values.push_back(inverse_spd(s));
    for (const auto& s : path.midpoints) inv_mid.push_back(inverse_spd(s));
    path.inverse_values = std::move(inv_values);
    path.inverse_midpoints = std::move(inv_mid);
  } catch (const IllConditionedError&) {
    path.inverse_values.clear();
    path.inverse_midpoints.clear();
  }
}

}  // namespace

Mat riccati_rhs(const LinearModel& model, const Mat& sigma) {
  const Mat& a = model.drift();
  Mat as = a * sigma;
  return as + as.transpose() - sigma * model.measurement_information() * sigma +
         model.process_covariance();
}

std::shared_ptr<const CovariancePath> integrate_riccati(const LinearModel& model,
                                                        const TimeGrid& grid,
                                                        const Mat& sigma0) {
  grid.validate();
  const int n = model.dim();
  if (sigma0.rows() != n || sigma0.cols() != n) {
    throw std::invalid_argument("integrate_riccati: Sigma0 has wrong shape");
  }
  if (!is_psd(symmetrize(sigma0), kPsdTolerance)) {
    throw std::invalid_argument("integrate_riccati: Sigma0 must be symmetric PSD");
  }

  auto path = std::make_shared<CovariancePath>();
  path->grid = grid;
  path->values.reserve(grid.samples());
  path->midpoints.reserve(grid.steps);

  const double h = grid.dt;
  Mat s = symmetrize(sigma0);
  Mat slope = riccati_rhs(model, s);
  path->values.push_back(s);
  for (std::size_t j = 0; j < grid.steps; ++j) {
    const Mat& k1 = slope;
    const Mat k2 = riccati_rhs(model, Mat(s + 0.5 * h * k1));
    const Mat k3 = riccati_rhs(model, Mat(s + 0.5 * h * k2));
    const Mat k4 = riccati_rhs(model, Mat(s + h * k3));
    Mat next = symmetrize(s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    if (!next.allFinite() || !is_psd(next, kPsdTolerance)) {
      throw StepSizeError("integrate_riccati: covariance left the PSD cone at step " +
                          std::to_string(j) + "; reduce dt");
    }
    Mat next_slope = riccati_rhs(model, next);
    path->midpoints.push_back(symmetrize(hermite_midpoint(s, next, slope, next_slope, h)));
    path->values.push_back(next);
    s = std::move(next);
    slope = std::move(next_slope);
  }
  fill_inverses(*path);
  return path;
}

FilterRun kb_filter(const LinearModel& model, std::shared_ptr<const CovariancePath> path,
                    std::span<const double> observations, const Vec& x0) {
  if (!path) throw std::invalid_argument("kb_filter: missing covariance path");
  const TimeGrid& grid = path->grid;
  if (observations.size() != grid.steps) {
    throw std::invalid_argument("kb_filter: observation count must equal grid steps");
  }
  if (x0.size() != model.dim()) throw std::invalid_argument("kb_filter: x0 has wrong dimension");

  const Mat& a = model.drift();
  const RowVec& c = model.obs_row();
  const double z_inv = 1.0 / model.meas_intensity();
  const double h = grid.dt;

  FilterRun run;
  run.grid = grid;
  run.direction = Direction::forward;
  run.covariance = path;
  run.observations.assign(observations.begin(), observations.end());
  run.estimates.reserve(grid.samples());
  run.estimate_midpoints.reserve(grid.steps);
  run.gains.reserve(grid.samples());
  run.innovations.reserve(grid.steps);

  for (const auto& s : path->values) run.gains.push_back(Vec(s * c.transpose() * z_inv));
  std::vector<Vec> mid_gains;
  mid_gains.reserve(grid.steps);
  for (const auto& s : path->midpoints) mid_gains.push_back(Vec(s * c.transpose() * z_inv));

  auto rhs = [&](const Vec& gain, const Vec& x, double y) -> Vec {
    return a * x + gain * (y - c.dot(x));
  };

  Vec x = x0;
  run.estimates.push_back(x);
  for (std::size_t j = 0; j < grid.steps; ++j) {
    const double y = observations[j];
    run.innovations.push_back(y - c.dot(x));
    const Vec k1 = rhs(run.gains[j], x, y);
    const Vec k2 = rhs(mid_gains[j], Vec(x + 0.5 * h * k1), y);
    const Vec k3 = rhs(mid_gains[j], Vec(x + 0.5 * h * k2), y);
    const Vec k4 = rhs(run.gains[j + 1], Vec(x + h * k3), y);
    Vec next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const Vec right_slope = rhs(run.gains[j + 1], next, y);
    run.estimate_midpoints.push_back(0.5 * (x + next) + (h / 8.0) * (k1 - right_slope));
    run.estimates.push_back(next);
    x = std::move(next);
  }
  return run;
}

FilterRun kb_filter(const LinearModel& model, const TimeGrid& grid,
                    std::span<const double> observations, const Vec& x0, const Mat& sigma0) {
  return kb_filter(model, integrate_riccati(model, grid, sigma0), observations, x0);
}

namespace {

double characteristic_rate(const LinearModel& model) {
  const double drift = model.drift().cwiseAbs().maxCoeff();
  const double coupling = std::sqrt(model.process_covariance().cwiseAbs().maxCoeff() *
                                    model.measurement_information().cwiseAbs().maxCoeff());
  const double rate = std::max(drift, coupling);
  return rate > 0.0 ? rate : 1.0;
}

}  // namespace

Mat steady_state_covariance(const LinearModel& model, const SteadyStateOptions& opts) {
  const int n = model.dim();
  if (n == 1) {
    const double a = model.drift()(0, 0);
    const double q = model.process_covariance()(0, 0);
    const double m = model.measurement_information()(0, 0);
    Mat r(1, 1);
    if (m > 0.0) {
      // Positive root of 2 a S - m S^2 + q = 0.
      const double disc = a * a + m * q;
      r(0, 0) = a > 0.0 ? (a + std::sqrt(disc)) / m : q / (std::sqrt(disc) - a);
      if (q == 0.0 && a <= 0.0) r(0, 0) = 0.0;
      return r;
    }
    if (q == 0.0) {
      r(0, 0) = 0.0;
      return r;
    }
    if (a < 0.0) {
      r(0, 0) = -q / (2.0 * a);
      return r;
    }
    throw DivergenceError("steady_state_covariance: unobserved, undamped noisy mode");
  }
  return integrate_to_steady_state(
      Mat::Zero(n, n), characteristic_rate(model),
      [&](const Mat& s) { return riccati_rhs(model, s); }, opts, "steady_state_covariance");
}

OuClosedForm OuClosedForm::from(double k, double kappa, double lambda) {
  if (!(k > 0.0)) throw std::invalid_argument("OuClosedForm: k must be > 0");
  if (!(kappa >= 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("OuClosedForm: kappa >= 0 and Lambda > 0 required");
  }
  OuClosedForm cf;
  cf.k = k;
  cf.kappa = kappa;
  cf.lambda = lambda;
  const double root = std::sqrt(kappa * lambda / k + 1.0);
  cf.gamma = k * root;
  cf.sigma_ss = (root - 1.0) / lambda;
  return cf;
}

double OuClosedForm::mu(double sigma0) const {
  const double g = gamma / k;
  const double den = g - 1.0 - lambda * sigma0;
  if (den == 0.0) throw SingularInputError("OuClosedForm::mu: Sigma0 equals Sigma_ss");
  return (g + 1.0 + lambda * sigma0) / den;
}

double ou_variance_closed_form(const OuClosedForm& cf, double sigma0, double elapsed) {
  if (!(elapsed >= 0.0)) throw std::invalid_argument("ou_variance_closed_form: t < t0");
  if (sigma0 < 0.0) {
    throw SingularInputError(
        "ou_variance_closed_form: Sigma0 < 0 lies on the unstable-root side");
  }
  if (cf.kappa == 0.0) {
    // Sigma_ss = 0: the general expression degenerates to 0/0.
    const double e = std::exp(-2.0 * cf.k * elapsed);
    return sigma0 * e / (1.0 + cf.lambda * sigma0 * (1.0 - e) / (2.0));
  }
  const double g = cf.gamma / cf.k;
  const double num = g + 1.0 + cf.lambda * sigma0;
  const double den = g - 1.0 - cf.lambda * sigma0;
  const double e = std::exp(-2.0 * cf.gamma * elapsed);
  // mu = num / den; multiply through by den so that Sigma0 = Sigma_ss is regular.
  const double ratio = (g + 1.0) / (g - 1.0);
  const double denom = num + den * e;
  if (denom == 0.0) throw SingularInputError("ou_variance_closed_form: singular mu");
  return cf.sigma_ss * (num - ratio * den * e) / denom;
}

WienerProcessSolution wiener_process_closed_form(double kappa, double photon_number,
                                                 double sigma0, double elapsed) {
  if (!(photon_number > 0.0) || !(kappa > 0.0)) {
    throw std::invalid_argument("wiener_process_closed_form: N and kappa must be > 0");
  }
  if (!(elapsed >= 0.0)) throw std::invalid_argument("wiener_process_closed_form: t < t0");
  if (sigma0 < 0.0) {
    throw SingularInputError("wiener_process_closed_form: Sigma0 < 0 gives a singular mu");
  }
  const double root_n = std::sqrt(photon_number);
  const double sigma_ss = 1.0 / (2.0 * root_n);
  const double gamma = 2.0 * kappa * root_n;
  const double s = 2.0 * root_n * sigma0;
  const double e = std::exp(-2.0 * gamma * elapsed);
  const double denom = (1.0 + s) + (1.0 - s) * e;
  if (denom == 0.0) throw SingularInputError("wiener_process_closed_form: singular mu");
  WienerProcessSolution sol;
  sol.sigma = sigma_ss * ((1.0 + s) - (1.0 - s) * e) / denom;
  sol.gain = 4.0 * photon_number * kappa * sol.sigma;
  return sol;
}

double threshold_margin(double beta, double sigma11) {
  if (!(sigma11 >= 0.0)) throw std::invalid_argument("threshold_margin: Sigma11 must be >= 0");
  return beta * beta * sigma11;
}

}  // namespace phaselock
