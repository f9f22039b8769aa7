#include <cmath>

#include "doctest.h"
#include "phaselock/kalman_bucy.hpp"
#include "phaselock/oscillator.hpp"
#include "phaselock/smoothers.hpp"

using namespace phaselock;

namespace {

Mat scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return m;
}

}  // namespace

TEST_CASE("OU steady states: Sigma = 1/4, Xi = 1/2, Pi = 1/6") {
  const LinearModel m = ou_model_from_lambda(1.0, 1.0, 8.0);
  CHECK(backward_steady_state_covariance(m)(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(smoothing_steady_state_covariance(m)(0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
  // kappa / (2 k sqrt(kappa Lambda / k + 1)) with k = 2, kappa = 3, Lambda = 5
  CHECK(ou_smoothing_steady_state(2.0, 3.0, 5.0) ==
        doctest::Approx(3.0 / (4.0 * std::sqrt(8.5))).epsilon(1e-12));
}

TEST_CASE("information equation at zero information is the measurement rate") {
  const LinearModel m = ou_model_normalized(1.0, 1.0, 2.0, 0.5);
  // -Omega' = measurement info + ... ; at Omega = 0 only C^T C / Z remains
  CHECK(std::abs(information_rhs(m, scalar(0.0))(0, 0)) == doctest::Approx(8.0));
}

TEST_CASE("Bryson-Frazier and two-filter smoothers agree on a shared record") {
  const LinearModel m = ou_model_from_lambda(1.0, 1.0, 8.0);
  TimeGrid g;
  g.dt = 1.0 / 600.0;
  g.steps = 8000;
  const Trajectory t = simulate(m, g, Vec::Zero(1), 123);
  const FilterRun fr = kb_filter(m, g, t.observations, Vec::Zero(1), scalar(0.5));
  const SmoothRun bf = bryson_frazier_smooth(m, fr);
  const SmoothRun tf = two_filter_combine(fr, backward_filter(m, g, t.observations));
  double dx = 0.0;
  double dp = 0.0;
  for (std::size_t j = 0; j < g.samples(); ++j) {
    dx = std::max(dx, std::abs(bf.estimates[j](0) - tf.estimates[j](0)));
    dp = std::max(dp, std::abs(bf.covariances[j](0, 0) - tf.covariances[j](0, 0)));
    CHECK(tf.covariances[j](0, 0) <= fr.covariances()[j](0, 0) + 1e-12);
  }
  CHECK(dx < 1e-6);
  CHECK(dp < 1e-6);
  CHECK(bf.covariances[g.steps / 2](0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-4));
  // the smoother ends where the filter ends
  CHECK(bf.covariances.back()(0, 0) == doctest::Approx(fr.covariances().back()(0, 0)));
}

TEST_CASE("smoothers agree on the oscillator") {
  OscParams p;
  const LinearModel m = oscillator_model(p);
  TimeGrid g;
  g.dt = 0.005;
  g.steps = 4000;
  const Trajectory t = simulate(m, g, Vec::Zero(2), 9);
  Mat prior(2, 2);
  prior << 0.5, 0, 0, 0.5;
  const FilterRun fr = kb_filter(m, g, t.observations, Vec::Zero(2), prior);
  const SmoothRun bf = bryson_frazier_smooth(m, fr);
  const SmoothRun tf = two_filter_combine(fr, backward_filter(m, g, t.observations));
  double dx = 0.0;
  double dp = 0.0;
  for (std::size_t j = 0; j < g.samples(); ++j) {
    dx = std::max(dx, (bf.estimates[j] - tf.estimates[j]).cwiseAbs().maxCoeff());
    dp = std::max(dp, (bf.covariances[j] - tf.covariances[j]).cwiseAbs().maxCoeff());
  }
  CHECK(dx < 1e-6);
  CHECK(dp < 1e-6);
  const Mat pi = oscillator_smoothing_steady_state(p);
  const Mat mid = tf.covariances[g.steps / 2];
  CHECK(mid(0, 0) == doctest::Approx(pi(0, 0)).epsilon(1e-4));
  CHECK(mid(1, 1) == doctest::Approx(pi(1, 1)).epsilon(1e-4));
  CHECK(std::abs(mid(0, 1)) < 1e-4);
}

TEST_CASE("smoothed error variance over records matches Pi at mid-record") {
  const LinearModel m = ou_model_from_lambda(1.0, 1.0, 8.0);
  TimeGrid g;
  g.dt = 0.002;
  g.steps = 3000;
  const auto ipath = integrate_backward_information(m, g);
  const auto fpath = integrate_riccati(m, g, scalar(0.5));
  const int records = 500;
  double s2 = 0.0;
  const std::size_t mid = g.steps / 2;
  double pi_mid = 0.0;
  for (int r = 0; r < records; ++r) {
    Rng rng(derive_trial_seed(31, r));
    Vec x0(1);
    x0(0) = std::sqrt(0.5) * standard_normal(rng);
    const Trajectory t = simulate(m, g, x0, derive_trial_seed(32, r));
    const FilterRun fr = kb_filter(m, fpath, t.observations, Vec::Zero(1));
    const SmoothRun sm = two_filter_combine(fr, backward_filter(m, ipath, t.observations));
    const double e = t.states[mid](0) - sm.estimates[mid](0);
    s2 += e * e;
    pi_mid = sm.covariances[mid](0, 0);
  }
  const double mse = s2 / records;
  CHECK(std::abs(mse - pi_mid) < 3.0 * std::sqrt(2.0 / records) * pi_mid);
}
