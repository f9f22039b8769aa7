#include <cmath>

#include "phaselock/simd/kernels.hpp"

namespace phaselock::simd {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double discriminate(DiscriminatorMode mode, double e) {
  switch (mode) {
    case DiscriminatorMode::nonlinear:
      return std::sin(e);
    case DiscriminatorMode::canonical:
      return sawtooth_wrap(e);
    case DiscriminatorMode::linearized:
      break;
  }
  return e;
}

void run_loop(const LoopBlock& b) {
  for (std::size_t l = 0; l < kLanes; ++l) {
    double x = b.x[l];
    double xh = b.xhat[l];
    for (std::size_t j = 0; j < b.steps; ++j) {
      const std::size_t i = j * kLanes + l;
      const double e = b.beta * x - b.beta * xh;
      b.err[i] = e;
      if (b.state) b.state[i] = x;
      if (b.estimate) b.estimate[i] = xh;
      const double eta = discriminate(b.mode, e) + b.z[i];
      if (b.eta) b.eta[i] = eta;
      xh = b.decay * xh + b.gains[j] * eta;
      x = (x + (b.drift * x) * b.dt) + b.du[i];
    }
    const std::size_t i = b.steps * kLanes + l;
    b.err[i] = b.beta * x - b.beta * xh;
    if (b.state) b.state[i] = x;
    if (b.estimate) b.estimate[i] = xh;
    b.x[l] = x;
    b.xhat[l] = xh;
  }
}

void accumulate_errors(const ErrorAccumulation& a) {
  for (std::size_t j = 0; j < a.samples; ++j) {
    const double* e = a.err + j * kLanes;
    double s2[kLanes];
    double s4[kLanes];
    for (std::size_t l = 0; l < kLanes; ++l) {
      s2[l] = e[l] * e[l];
      s4[l] = s2[l] * s2[l];
    }
    a.sum2[j] += (s2[0] + s2[1]) + (s2[2] + s2[3]);
    a.sum4[j] += (s4[0] + s4[1]) + (s4[2] + s4[3]);
    if (j >= a.window_begin && j < a.window_end) {
      for (std::size_t l = 0; l < kLanes; ++l) a.window_sums[l] += s2[l];
    }
  }
}

void count_slips(const SlipCount& s) {
  for (std::size_t l = 0; l < kLanes; ++l) {
    double ref = s.reference[l];
    std::uint64_t n = s.counts[l];
    for (std::size_t j = 0; j < s.samples; ++j) {
      const double d = s.err[j * kLanes + l] - ref;
      if (d > s.threshold) {
        ref += kTwoPi;
        ++n;
      } else if (d <= -s.threshold) {
        ref -= kTwoPi;
        ++n;
      }
    }
    s.reference[l] = ref;
    s.counts[l] = n;
  }
}

void anticausal(const AnticausalBlock& a) {
  if (a.samples == 0) return;
  for (std::size_t l = 0; l < kLanes; ++l) {
    double s = 0.0;
    for (std::size_t j = a.samples; j-- > 0;) {
      s = a.decay * s + a.gain * a.in[j * kLanes + l];
      a.out[j * kLanes + l] = s;
    }
  }
  double tail = 1.0;
  for (std::size_t k = 0; k <= a.delay_steps; ++k) tail *= a.decay;
  const std::size_t lag = a.delay_steps + 1;
  for (std::size_t j = 0; j + lag < a.samples; ++j) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      a.out[j * kLanes + l] = a.out[j * kLanes + l] - tail * a.out[(j + lag) * kLanes + l];
    }
  }
}

void wrap_array(const double* in, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = sawtooth_wrap(in[i]);
}

}  // namespace

double sawtooth_wrap(double phi) {
  if (phi >= -kPi && phi < kPi) return phi;
  const double s = phi - kPi;
  double r = (s - kTwoPi * std::floor(s / kTwoPi)) - kPi;
  if (r >= kPi) r = r - kTwoPi;
  if (r < -kPi) r = r + kTwoPi;
  return r;
}

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", run_loop, accumulate_errors, count_slips, anticausal,
                                 wrap_array};
  return table;
}

}  // namespace phaselock::simd
