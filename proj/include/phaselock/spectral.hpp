#pragma once

#include <complex>
#include <optional>

namespace phaselock {

/// strength / (w^2 + corner^2) + floor
struct LorentzianSpectrum {
  double strength = 0.0;
  double corner = 0.0;
  double floor = 0.0;

  void validate() const;
  double operator()(double omega) const {
    return strength / (omega * omega + corner * corner) + floor;
  }
};

enum class TransferForm { causal, anticausal };

/// First-order rational transfer gain * (s + zero) / (s + pole), or
/// gain / (s + pole) without a zero, where s = i w (causal) or -i w
/// (anticausal). pole == 0 is the pure integrator.
struct RationalTransfer {
  double gain = 0.0;
  std::optional<double> zero;
  double pole = 0.0;
  TransferForm form = TransferForm::causal;

  void validate() const;
  bool is_integrator() const { return pole == 0.0 && !zero; }
  std::complex<double> operator()(double omega) const;
};

/// G(w) = S_xy / S_y as a product of a causal and an anticausal one-pole factor.
struct UnrealizableFilter {
  RationalTransfer causal;
  RationalTransfer anticausal;

  std::complex<double> operator()(double omega) const { return causal(omega) * anticausal(omega); }
};

/// Post-loop smoothing filter F = G / H with its anticausal impulse response
/// f(t) = impulse_gain * exp(impulse_rate * t) for t <= 0.
struct PostLoopFilter {
  RationalTransfer transfer;
  double impulse_gain = 0.0;
  double impulse_rate = 0.0;
  double suggested_delay = 0.0;  // 10 / gamma

  double impulse(double t) const;
};

/// One-pole recursion state <- decay * state + input_gain * input.
/// Anticausal filters run it backward over a recorded series.
struct OnePoleRecursion {
  double decay = 1.0;
  double input_gain = 0.0;
  double rate = 0.0;  // continuous pole
  TransferForm form = TransferForm::causal;
  bool integrator = false;

  /// Identity map: decay 0, unit input gain.
  static OnePoleRecursion identity();
};

/// Wiener-process (k -> 0) limit switch: corners below this fraction of
/// gamma are treated as exactly zero.
inline constexpr double kWienerLimitRatio = 1e-9;

/// S_y = beta^2 S_x + Z
LorentzianSpectrum observation_spectrum(const LorentzianSpectrum& sx, double beta, double z);

/// S_xy = beta S_x
LorentzianSpectrum cross_spectrum(const LorentzianSpectrum& sx, double beta);

/// Minimum-phase causal factor H+ = sqrt(Z) (i w + gamma) / (i w + k) with
/// |H+|^2 = S_y.
RationalTransfer spectral_factorize(const LorentzianSpectrum& sy);

/// Realizable Wiener filter H = (1/H+) [S_xy / H+*]_+ for a one-pole cross
/// spectrum that shares the factor's corner.
RationalTransfer wiener_filter(const LorentzianSpectrum& sxy, const RationalTransfer& hplus);

/// Loop filter L = H / (1 - beta H); the closed loop L / (1 + beta L) is H.
RationalTransfer loop_filter(const RationalTransfer& h, double beta);

/// Wiener filtering MSE (Z / beta^2) \int dw/2pi ln(1 + beta^2 S_x / Z).
double filtering_mse(const LorentzianSpectrum& sx, double beta, double z);

/// G = S_xy / S_y
UnrealizableFilter unrealizable_filter(const LorentzianSpectrum& sxy, const LorentzianSpectrum& sy);

/// F = G / H
PostLoopFilter post_loop_filter(const UnrealizableFilter& g, const RationalTransfer& h);

/// Smoothing MSE \int dw/2pi [S_x - |S_xy|^2 / S_y].
double smoothing_mse(const LorentzianSpectrum& sx, const LorentzianSpectrum& sxy,
                     const LorentzianSpectrum& sy);

/// Exact-pole discretization: decay = exp(-p dt), input_gain = gain (1 - decay) / p;
/// the integrator becomes a running sum with input_gain = gain dt.
OnePoleRecursion discretize_one_pole(const RationalTransfer& rt, double dt);

}  // namespace phaselock
