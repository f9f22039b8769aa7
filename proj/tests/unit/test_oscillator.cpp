#include <cmath>

#include "doctest.h"
#include "phaselock/errors.hpp"
#include "phaselock/kalman_bucy.hpp"
#include "phaselock/oscillator.hpp"
#include "phaselock/smoothers.hpp"

using namespace phaselock;

namespace {

OscParams with_q(double q) {
  OscParams p;
  p.q = q;
  return p;
}

}  // namespace

TEST_CASE("filter steady state at Q = 1") {
  const Mat s = oscillator_filter_steady_state(with_q(1.0));
  // hbar = m = w = 1: Sigma12 = (sqrt(2) - 1) / 2, Sigma11 = sqrt(2 Sigma12) / sqrt(2)
  const double s12 = (std::sqrt(2.0) - 1.0) / 2.0;
  CHECK(s(0, 1) == doctest::Approx(s12).epsilon(1e-12));
  CHECK(s(0, 0) == doctest::Approx(0.455090).epsilon(1e-6));
  CHECK(s(1, 1) == doctest::Approx(0.643594).epsilon(1e-6));
}

TEST_CASE("filter state is pure and solves the Riccati equation") {
  for (double q : {0.1, 1.0, 10.0}) {
    const OscParams p = with_q(q);
    const LinearModel m = oscillator_model(p);
    const Mat s = oscillator_filter_steady_state(p);
    CHECK(s.determinant() == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(riccati_rhs(m, s).cwiseAbs().maxCoeff() < 1e-10);
    const Mat num = steady_state_covariance(m);
    CHECK((num - s).cwiseAbs().maxCoeff() / s.cwiseAbs().maxCoeff() < 1e-6);
    const Mat xi = oscillator_backward_steady_state(p);
    CHECK(xi(0, 1) == doctest::Approx(-s(0, 1)));
    CHECK((backward_steady_state_covariance(m) - xi).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("smoothing covariance is diagonal with the closed-form product") {
  for (double q : {0.05, 0.3, 1.0, 4.0, 30.0}) {
    const OscParams p = with_q(q);
    const Mat pi = oscillator_smoothing_steady_state(p);
    const Mat s = oscillator_filter_steady_state(p);
    const Mat xi = oscillator_backward_steady_state(p);
    const Mat combo = (s.inverse() + xi.inverse()).inverse();
    CHECK(std::abs(pi(0, 1)) < 1e-14);
    CHECK((combo - pi).cwiseAbs().maxCoeff() < 1e-12);
    const double product = pi(0, 0) * pi(1, 1);
    CHECK(product == doctest::Approx((1.0 / 32.0) * (1.0 + 1.0 / std::sqrt(1.0 + q * q))).epsilon(1e-12));
    CHECK(oscillator_uncertainty_product(p) == doctest::Approx(product).epsilon(1e-12));
    CHECK(product > 1.0 / 32.0);
    CHECK(product <= 1.0 / 16.0);
  }
}

TEST_CASE("product at Q = 1 and units of hbar") {
  CHECK(oscillator_uncertainty_product(with_q(1.0)) ==
        doctest::Approx((1.0 + 1.0 / std::sqrt(2.0)) / 32.0).epsilon(1e-12));
  OscParams p = with_q(1.0);
  p.hbar = 3.0;
  p.mass = 2.0;
  p.mech_freq = 5.0;
  const Mat s = oscillator_filter_steady_state(p);
  CHECK(s.determinant() == doctest::Approx(9.0 / 4.0).epsilon(1e-9));
  CHECK(oscillator_uncertainty_product(p) ==
        doctest::Approx(9.0 * (1.0 + 1.0 / std::sqrt(2.0)) / 32.0).epsilon(1e-12));
}

TEST_CASE("relaxation time is 1 / (V Sigma11)") {
  for (double q : {0.2, 1.0, 7.0}) {
    const OscParams p = with_q(q);
    const double s11 = oscillator_filter_steady_state(p)(0, 0);
    CHECK(oscillator_relaxation_time(p) == doctest::Approx(1.0 / (p.v() * s11)).epsilon(1e-12));
    const double closed = 1.0 / (std::sqrt(2.0) * std::sqrt(std::sqrt(1.0 + q * q) - 1.0));
    CHECK(oscillator_relaxation_time(p) == doctest::Approx(closed).epsilon(1e-12));
  }
  CHECK(oscillator_relaxation_time(with_q(1.0)) == doctest::Approx(1.09868411).epsilon(1e-7));
  CHECK(oscillator_relaxation_time(with_q(2.0)) < oscillator_relaxation_time(with_q(1.0)));
}

TEST_CASE("unmeasured oscillator has no steady state") {
  CHECK_THROWS_AS(oscillator_filter_steady_state(with_q(0.0)), DivergenceError);
  CHECK(std::isinf(oscillator_relaxation_time(with_q(0.0))));
}

TEST_CASE("physical parameters map to Q") {
  PhysicalParams phys;
  phys.power = 2.0;
  phys.omega0 = 4.0;
  phys.beta = 3.0;
  const OscParams p = OscParams::from_physical(1.0, 2.0, phys);
  CHECK(p.q == doctest::Approx(2.0 * 9.0 * 2.0 / (1.0 * 4.0 * 4.0)));
  const LinearModel m = oscillator_model(p, 3.0);
  CHECK(m.coupling() * m.coupling() / m.meas_intensity() == doctest::Approx(p.v()));
}

TEST_CASE("Monte Carlo validation at small scale") {
  const OscParams p = with_q(1.0);
  const double tf = oscillator_relaxation_time(p);
  TimeGrid g;
  g.dt = tf / 200.0;
  g.steps = 5000;
  const OscValidation v = simulate_and_validate(p, g, 120, 77);
  const CovariancePair cf = oscillator_steady_states(p);
  CHECK(v.trials == 120);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(v.empirical.filter_cov(i, j) - cf.filter_cov(i, j)) <
            3.0 * v.stderr_cov.filter_cov(i, j));
      CHECK(std::abs(v.empirical.smooth_cov(i, j) - cf.smooth_cov(i, j)) <
            3.0 * v.stderr_cov.smooth_cov(i, j));
    }
  }
  CHECK(std::abs(v.det_filter - 0.25) < 3.0 * v.det_filter_stderr);
}
