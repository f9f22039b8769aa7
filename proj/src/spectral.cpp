#include "phaselock/spectral.hpp"

#include <cmath>
#include <stdexcept>

#include "phaselock/errors.hpp"
#include "phaselock/quadrature.hpp"
#include "phaselock/stochastic_core.hpp"

namespace phaselock {

void LorentzianSpectrum::validate() const {
  if (!(strength >= 0.0) || !(corner >= 0.0) || !(floor >= 0.0)) {
    throw std::invalid_argument("LorentzianSpectrum: strength, corner, floor must be >= 0");
  }
}

void RationalTransfer::validate() const {
  if (!(pole >= 0.0)) throw std::invalid_argument("RationalTransfer: pole must be >= 0");
  if (pole == 0.0 && zero) {
    throw std::invalid_argument("RationalTransfer: a zero-pole transfer must be a pure integrator");
  }
}

std::complex<double> RationalTransfer::operator()(double omega) const {
  const std::complex<double> s(0.0, form == TransferForm::causal ? omega : -omega);
  std::complex<double> num(gain, 0.0);
  if (zero) num *= s + *zero;
  return num / (s + pole);
}

double PostLoopFilter::impulse(double t) const {
  return t <= 0.0 ? impulse_gain * std::exp(impulse_rate * t) : 0.0;
}

OnePoleRecursion OnePoleRecursion::identity() {
  OnePoleRecursion r;
  r.decay = 0.0;
  r.input_gain = 1.0;
  return r;
}

LorentzianSpectrum observation_spectrum(const LorentzianSpectrum& sx, double beta, double z) {
  sx.validate();
  if (sx.floor != 0.0) throw std::invalid_argument("observation_spectrum: S_x must have no floor");
  if (!(z > 0.0)) throw std::invalid_argument("observation_spectrum: Z must be > 0");
  return {beta * beta * sx.strength, sx.corner, z};
}

LorentzianSpectrum cross_spectrum(const LorentzianSpectrum& sx, double beta) {
  sx.validate();
  if (sx.floor != 0.0) throw std::invalid_argument("cross_spectrum: S_x must have no floor");
  return {beta * sx.strength, sx.corner, 0.0};
}

RationalTransfer spectral_factorize(const LorentzianSpectrum& sy) {
  sy.validate();
  if (!(sy.floor > 0.0)) {
    throw UnsupportedSpectrumError("spectral_factorize: no white floor, factorization undefined");
  }
  const double k = sy.corner;
  const double gamma = std::sqrt(k * k + sy.strength / sy.floor);
  if (!(gamma > 0.0)) {
    throw UnsupportedSpectrumError("spectral_factorize: zero corner without a Lorentzian part");
  }
  RationalTransfer h;
  h.gain = std::sqrt(sy.floor);
  h.zero = gamma;
  h.pole = k;
  h.form = TransferForm::causal;
  return h;
}

RationalTransfer wiener_filter(const LorentzianSpectrum& sxy, const RationalTransfer& hplus) {
  if (!hplus.zero || hplus.form != TransferForm::causal) {
    throw std::invalid_argument("wiener_filter: hplus must be a causal factor with a zero");
  }
  const double k = hplus.pole;
  const double gamma = *hplus.zero;
  const double tol = 1e-12 * std::max(1.0, gamma);
  if (std::abs(sxy.corner - k) > tol || sxy.floor != 0.0) {
    throw UnsupportedSpectrumError("wiener_filter: cross spectrum corner must match the factor");
  }
  const double root_z = hplus.gain;
  // S_xy / H+* = b / (sqrt(Z) (i w + k)(-i w + gamma)); partial fractions
  // give the causal part b / (sqrt(Z) (k + gamma)) / (i w + k).
  const double causal_gain = sxy.strength / (root_z * (k + gamma));
  // Multiplying by 1 / H+ = (i w + k) / (sqrt(Z) (i w + gamma)) cancels the pole at k.
  RationalTransfer h;
  h.gain = causal_gain / root_z;
  h.pole = gamma;
  h.form = TransferForm::causal;
  return h;
}

RationalTransfer loop_filter(const RationalTransfer& h, double beta) {
  if (h.zero || h.form != TransferForm::causal) {
    throw std::invalid_argument("loop_filter: h must be a causal one-pole transfer");
  }
  // Gamma / (s + gamma) / (1 - beta Gamma / (s + gamma)) = Gamma / (s + gamma - beta Gamma)
  RationalTransfer l = h;
  double pole = h.pole - beta * h.gain;
  if (std::abs(pole) < kWienerLimitRatio * h.pole) pole = 0.0;
  if (pole < 0.0) throw UnsupportedSpectrumError("loop_filter: unstable loop-filter pole");
  l.pole = pole;
  return l;
}

double filtering_mse(const LorentzianSpectrum& sx, double beta, double z) {
  sx.validate();
  if (!(z > 0.0)) throw std::invalid_argument("filtering_mse: Z must be > 0");
  if (sx.strength == 0.0 || beta == 0.0) {
    // No information: the error is the prior variance.
    return beta == 0.0 && sx.strength > 0.0 ? sx.strength / (2.0 * sx.corner) : 0.0;
  }
  const double a = beta * beta * sx.strength / z;
  const double k2 = sx.corner * sx.corner;
  const double scale = std::sqrt(k2 + a);  // gamma
  auto integrand = [&](double w) { return std::log1p(a / (w * w + k2)); };
  const double integral = integrate_even_real_line(integrand, scale, {1e-10 / scale * a, 50});
  return z / (beta * beta) * integral / (2.0 * kPi);
}

UnrealizableFilter unrealizable_filter(const LorentzianSpectrum& sxy,
                                       const LorentzianSpectrum& sy) {
  sxy.validate();
  sy.validate();
  if (!(sy.floor > 0.0)) throw std::invalid_argument("unrealizable_filter: S_y needs a floor");
  if (std::abs(sxy.corner - sy.corner) > 1e-12 * std::max(1.0, sy.corner)) {
    throw UnsupportedSpectrumError("unrealizable_filter: spectra must share the corner");
  }
  const double k = sy.corner;
  const double gamma = std::sqrt(k * k + sy.strength / sy.floor);
  // b / (c + Z (w^2 + k^2)) = (b / Z) / (w^2 + gamma^2)
  const double total = sxy.strength / sy.floor;
  UnrealizableFilter g;
  g.causal.gain = total / (k + gamma);
  g.causal.pole = gamma;
  g.causal.form = TransferForm::causal;
  g.anticausal.gain = k + gamma;
  g.anticausal.pole = gamma;
  g.anticausal.form = TransferForm::anticausal;
  return g;
}

PostLoopFilter post_loop_filter(const UnrealizableFilter& g, const RationalTransfer& h) {
  if (h.zero || h.form != TransferForm::causal || g.causal.zero || g.anticausal.zero) {
    throw std::invalid_argument("post_loop_filter: one-pole factors required");
  }
  const double tol = 1e-12 * std::max(1.0, h.pole);
  if (std::abs(g.causal.pole - h.pole) > tol) {
    throw UnsupportedSpectrumError("post_loop_filter: G and H come from different models");
  }
  PostLoopFilter f;
  f.transfer = g.anticausal;
  if (h.gain == 0.0) {
    f.transfer.gain = 0.0;
  } else {
    f.transfer.gain = g.anticausal.gain * g.causal.gain / h.gain;
  }
  f.impulse_gain = f.transfer.gain;
  f.impulse_rate = f.transfer.pole;
  f.suggested_delay = 10.0 / f.transfer.pole;
  return f;
}

double smoothing_mse(const LorentzianSpectrum& sx, const LorentzianSpectrum& sxy,
                     const LorentzianSpectrum& sy) {
  sx.validate();
  sxy.validate();
  sy.validate();
  if (!(sy.floor > 0.0)) throw std::invalid_argument("smoothing_mse: S_y needs a floor");
  if (sx.floor != 0.0 || sxy.floor != 0.0 ||
      std::abs(sx.corner - sy.corner) > 1e-12 * std::max(1.0, sy.corner) ||
      std::abs(sxy.corner - sy.corner) > 1e-12 * std::max(1.0, sy.corner)) {
    throw UnsupportedSpectrumError("smoothing_mse: spectra must share one corner");
  }
  if (sx.strength == 0.0) return 0.0;
  const double a = sx.strength;
  const double b = sxy.strength;
  const double c = sy.strength;
  const double z = sy.floor;
  const double k2 = sy.corner * sy.corner;
  // With d = w^2 + k^2: S_x - S_xy^2 / S_y = (a (c + Z d) - b^2) / (d (c + Z d)).
  const double cross = a * c - b * b;
  auto integrand = [&](double w) {
    const double d = w * w + k2;
    const double e = c + z * d;
    return (a * z * d + cross) / (d * e);
  };
  const double scale = std::sqrt(k2 + c / z);
  const double integral =
      integrate_even_real_line(integrand, scale, {1e-10 * a / (scale * scale), 50});
  return integral / (2.0 * kPi);
}

OnePoleRecursion discretize_one_pole(const RationalTransfer& rt, double dt) {
  rt.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("discretize_one_pole: dt must be > 0");
  if (rt.zero) throw std::invalid_argument("discretize_one_pole: transfer must not have a zero");
  OnePoleRecursion r;
  r.form = rt.form;
  r.rate = rt.pole;
  if (rt.is_integrator()) {
    if (rt.form != TransferForm::causal) {
      throw std::invalid_argument("discretize_one_pole: anticausal integrator is unstable");
    }
    r.integrator = true;
    r.decay = 1.0;
    r.input_gain = rt.gain * dt;
    return r;
  }
  if (!(rt.pole * dt < 0.1)) {
    throw std::invalid_argument("discretize_one_pole: pole * dt must be < 0.1");
  }
  r.decay = std::exp(-rt.pole * dt);
  r.input_gain = rt.gain * (-std::expm1(-rt.pole * dt)) / rt.pole;
  return r;
}

}  // namespace phaselock
