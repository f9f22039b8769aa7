#include <cmath>
#include <complex>

#include "doctest.h"
#include "phaselock/errors.hpp"
#include "phaselock/spectral.hpp"

using namespace phaselock;
using cd = std::complex<double>;

namespace {

// k = kappa = beta = 1, Z = 1/8
struct Setup {
  double z = 0.125;
  LorentzianSpectrum sx{1.0, 1.0, 0.0};
  LorentzianSpectrum sy = observation_spectrum(sx, 1.0, z);
  LorentzianSpectrum sxy = cross_spectrum(sx, 1.0);
  RationalTransfer hplus = spectral_factorize(sy);
  RationalTransfer h = wiener_filter(sxy, hplus);
  RationalTransfer l = loop_filter(h, 1.0);
};

}  // namespace

TEST_CASE("Lorentzian spectra") {
  const Setup s;
  CHECK(s.sx(0.0) == doctest::Approx(1.0));
  CHECK(s.sx(1.0) == doctest::Approx(0.5));
  CHECK(s.sy(2.0) == doctest::Approx(1.0 / 5.0 + 0.125));
  CHECK(s.sxy(2.0) == doctest::Approx(1.0 / 5.0));
}

TEST_CASE("factorization, filter and loop at hand-checked frequencies") {
  const Setup s;
  const cd i(0.0, 1.0);
  for (double w : {0.0, 0.3, 1.0, 7.0, 100.0}) {
    const cd hp = std::sqrt(0.125) * (i * w + 3.0) / (i * w + 1.0);
    const cd h = 2.0 / (i * w + 3.0);
    const cd l = 2.0 / (i * w + 1.0);
    CHECK(std::abs(s.hplus(w) - hp) < 1e-13);
    CHECK(std::abs(s.h(w) - h) < 1e-13);
    CHECK(std::abs(s.l(w) - l) < 1e-13);
    CHECK(std::norm(s.hplus(w)) == doctest::Approx(s.sy(w)).epsilon(1e-13));
    CHECK(std::abs(s.h(w) - s.l(w) / (1.0 + s.l(w))) < 1e-13);
  }
}

TEST_CASE("post-loop filter F = 4/(-iw + 3) with impulse 4 e^{3t} for t <= 0") {
  const Setup s;
  const UnrealizableFilter g = unrealizable_filter(s.sxy, s.sy);
  const PostLoopFilter f = post_loop_filter(g, s.h);
  const cd i(0.0, 1.0);
  for (double w : {0.0, 0.5, 2.0, 30.0}) {
    CHECK(std::abs(f.transfer(w) - 4.0 / (-i * w + 3.0)) < 1e-13);
    // F H equals the unrealizable filter S_xy / S_y
    CHECK(std::abs(f.transfer(w) * s.h(w) - s.sxy(w) / s.sy(w)) < 1e-13);
  }
  CHECK(f.impulse(-0.2) == doctest::Approx(4.0 * std::exp(-0.6)));
  CHECK(f.impulse(0.1) == 0.0);
  CHECK(f.suggested_delay == doctest::Approx(10.0 / 3.0));
}

TEST_CASE("MSE quadratures") {
  const Setup s;
  CHECK(filtering_mse(s.sx, 1.0, s.z) == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(smoothing_mse(s.sx, s.sxy, s.sy) == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
  // k = 2, kappa = 3, beta = 0.5, Z = 0.2: Sigma = Z (sqrt(k^2 + b^2 q / Z) - k) / b^2
  const LorentzianSpectrum sx{3.0, 2.0, 0.0};
  const double sigma = 0.2 * (std::sqrt(4.0 + 0.25 * 3.0 / 0.2) - 2.0) / 0.25;
  CHECK(filtering_mse(sx, 0.5, 0.2) == doctest::Approx(sigma).epsilon(1e-6));
}

TEST_CASE("Wiener process limit gives an integrating loop filter") {
  const double n = 100.0;
  const double z = 1.0 / (4.0 * n);
  const LorentzianSpectrum sx{1.0, 0.0, 0.0};
  const auto sy = observation_spectrum(sx, 1.0, z);
  const auto hp = spectral_factorize(sy);
  const auto h = wiener_filter(cross_spectrum(sx, 1.0), hp);
  CHECK(h.pole == doctest::Approx(20.0));
  const auto l = loop_filter(h, 1.0);
  CHECK(l.is_integrator());
  CHECK(l.gain == doctest::Approx(20.0));
}

TEST_CASE("discretized one-pole recursions") {
  RationalTransfer rt;
  rt.gain = 2.0;
  rt.pole = 3.0;
  const double dt = 0.001;
  const OnePoleRecursion r = discretize_one_pole(rt, dt);
  CHECK(r.decay == doctest::Approx(std::exp(-0.003)));
  // step response converges to the DC gain 2/3
  double y = 0.0;
  for (int j = 0; j < 20000; ++j) y = r.decay * y + r.input_gain;
  CHECK(y == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  RationalTransfer integ;
  integ.gain = 5.0;
  integ.pole = 0.0;
  const OnePoleRecursion ri = discretize_one_pole(integ, dt);
  CHECK(ri.integrator);
  CHECK(ri.decay == 1.0);
  CHECK(ri.input_gain == doctest::Approx(0.005));
  CHECK_THROWS(discretize_one_pole(rt, 0.1));
}

TEST_CASE("unsupported spectra are rejected") {
  CHECK_THROWS_AS(spectral_factorize(LorentzianSpectrum{1.0, 1.0, 0.0}), UnsupportedSpectrumError);
  const auto hp = spectral_factorize(LorentzianSpectrum{1.0, 1.0, 0.1});
  CHECK_THROWS_AS(wiener_filter(LorentzianSpectrum{1.0, 2.0, 0.0}, hp), UnsupportedSpectrumError);
}
