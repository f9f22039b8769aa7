#include <cmath>
#include <set>

#include "doctest.h"
#include "phaselock/stochastic_core.hpp"

using namespace phaselock;

TEST_CASE("normalized OU model from Lambda") {
  const LinearModel m = ou_model_from_lambda(1.0, 1.0, 8.0);
  CHECK(m.dim() == 1);
  CHECK(m.drift()(0, 0) == doctest::Approx(-1.0));
  CHECK(m.process_covariance()(0, 0) == doctest::Approx(1.0));
  CHECK(m.coupling() == doctest::Approx(1.0));
  CHECK(m.meas_intensity() == doctest::Approx(0.125));  // beta^2 / (Lambda k)
  CHECK(measurement_strength(m) == doctest::Approx(8.0));
}

TEST_CASE("physical OU model uses Z = hbar omega0 / (4 P)") {
  PhysicalParams phys;
  phys.hbar = 2.0;
  phys.omega0 = 3.0;
  phys.power = 6.0;
  const LinearModel m = ou_model(1.0, 1.0, phys);
  CHECK(m.meas_intensity() == doctest::Approx(0.25));
}

TEST_CASE("Wiener process model has no drift and Z = 1/(4 N kappa)") {
  const LinearModel m = wiener_process_model(2.0, 100.0);
  CHECK(m.drift()(0, 0) == 0.0);
  CHECK(m.meas_intensity() == doctest::Approx(1.0 / 800.0));
  CHECK_THROWS_AS(wiener_process_model(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("oscillator model matrices") {
  PhysicalParams phys;
  const LinearModel m = oscillator_model(2.0, 3.0, phys);
  CHECK(m.dim() == 2);
  CHECK(m.drift()(0, 1) == doctest::Approx(0.5));     // 1/m
  CHECK(m.drift()(1, 0) == doctest::Approx(-18.0));   // -m w^2
  CHECK(m.obs_row()(1) == 0.0);
  CHECK(m.process_covariance()(0, 0) == 0.0);
}

TEST_CASE("coupling from cavity geometry") {
  CHECK(coupling_from_geometry(3, 0.0, 2.0) == doctest::Approx(12.0));
  CHECK(coupling_from_geometry(1, kPi / 2, 5.0) == 0.0);
  CHECK_THROWS(coupling_from_geometry(0, 0.0, 1.0));
}

TEST_CASE("stationary covariance of an OU process is kappa / (2k)") {
  const LinearModel m = ou_model_normalized(2.0, 3.0, 1.0, 1.0);
  CHECK(stationary_covariance(m)(0, 0) == doctest::Approx(0.75));
}

TEST_CASE("simulation reproduces the stationary variance") {
  const LinearModel m = ou_model_normalized(1.0, 2.0, 1.0, 0.5);
  TimeGrid g;
  g.dt = 0.01;
  g.steps = 200000;
  const Trajectory t = simulate(m, g, Vec::Zero(1), 99);
  REQUIRE(t.states.size() == g.samples());
  REQUIRE(t.observations.size() == g.steps);
  double s2 = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 1000; j < t.states.size(); ++j, ++n) s2 += t.states[j](0) * t.states[j](0);
  // exact Euler stationary variance: q dt / (1 - (1 - k dt)^2)
  const double expected = 2.0 * 0.01 / (1.0 - 0.99 * 0.99);
  CHECK(s2 / n == doctest::Approx(expected).epsilon(0.05));
  double noise = 0.0;
  for (double z : t.obs_noise) noise += z * z;
  CHECK(noise / t.obs_noise.size() == doctest::Approx(0.5 / 0.01).epsilon(0.02));
}

TEST_CASE("simulation is deterministic in the seed") {
  const LinearModel m = ou_model_normalized(1.0, 1.0, 1.0, 1.0);
  TimeGrid g;
  g.dt = 0.01;
  g.steps = 100;
  const Trajectory a = simulate(m, g, Vec::Zero(1), 5);
  const Trajectory b = simulate(m, g, Vec::Zero(1), 5);
  const Trajectory c = simulate(m, g, Vec::Zero(1), 6);
  CHECK(a.observations == b.observations);
  CHECK(a.observations != c.observations);
}

TEST_CASE("trial seeds are deterministic and distinct") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_trial_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_trial_seed(42, 3) == derive_trial_seed(42, 3));
  CHECK(derive_trial_seed(42, 3) != derive_trial_seed(43, 3));
}

TEST_CASE("invalid grids and models are rejected") {
  TimeGrid g;
  g.dt = 0.0;
  g.steps = 10;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  CHECK_THROWS_AS(ou_model_normalized(1.0, 1.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ou_model_normalized(-1.0, 1.0, 1.0, 1.0), std::invalid_argument);
}
