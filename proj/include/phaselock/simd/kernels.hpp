#pragma once

#include <cstddef>
#include <cstdint>

namespace phaselock {

/// Phase detector characteristic applied to the loop error phi - phi_hat.
enum class DiscriminatorMode { linearized, nonlinear, canonical };

namespace simd {

/// Trials processed side by side by one kernel call.
inline constexpr std::size_t kLanes = 4;

/// One block of kLanes scalar phase loops. Buffers are interleaved by lane:
/// element (j, l) lives at index j * kLanes + l.
struct LoopBlock {
  std::size_t steps = 0;
  double drift = 0.0;  // message drift a in dx = a x dt + du
  double dt = 0.0;
  double beta = 1.0;
  double decay = 1.0;              // estimator xhat <- decay * xhat + gain_j * eta
  const double* gains = nullptr;   // steps
  const double* du = nullptr;      // steps * kLanes, process increments
  const double* z = nullptr;       // steps * kLanes, homodyne noise samples
  DiscriminatorMode mode = DiscriminatorMode::linearized;
  double* x = nullptr;             // kLanes, in/out
  double* xhat = nullptr;          // kLanes, in/out
  double* err = nullptr;           // (steps + 1) * kLanes, beta (x - xhat)
  double* state = nullptr;         // optional (steps + 1) * kLanes
  double* estimate = nullptr;      // optional (steps + 1) * kLanes
  double* eta = nullptr;           // optional steps * kLanes
};

/// Per-sample sums over lanes of e^2 and e^4, added into sum2/sum4 for
/// samples in [0, samples). Lanes are combined as (l0 + l1) + (l2 + l3).
/// window_sums[l] accumulates e^2 of lane l over [window_begin, window_end).
struct ErrorAccumulation {
  const double* err = nullptr;
  std::size_t samples = 0;
  std::size_t window_begin = 0;
  std::size_t window_end = 0;
  double* sum2 = nullptr;
  double* sum4 = nullptr;
  double* window_sums = nullptr;  // kLanes
};

/// Hysteresis slip counter: a lane records a slip when its error leaves
/// (ref - threshold, ref + threshold]; ref then moves by 2 pi toward it.
struct SlipCount {
  const double* err = nullptr;
  std::size_t samples = 0;
  double threshold = 3.14159265358979323846;
  double* reference = nullptr;      // kLanes, in/out
  std::uint64_t* counts = nullptr;  // kLanes, in/out
};

/// Backward one-pole recursion s_j = decay s_{j+1} + gain in_j, truncated to
/// delay_steps + 1 taps: out_j = s_j - decay^{delay_steps+1} s_{j+delay_steps+1}.
struct AnticausalBlock {
  const double* in = nullptr;  // samples * kLanes
  std::size_t samples = 0;
  double decay = 0.0;
  double gain = 1.0;
  std::size_t delay_steps = 0;
  double* out = nullptr;  // samples * kLanes
};

struct KernelTable {
  const char* name;
  void (*run_loop)(const LoopBlock&);
  void (*accumulate_errors)(const ErrorAccumulation&);
  void (*count_slips)(const SlipCount&);
  void (*anticausal)(const AnticausalBlock&);
  void (*sawtooth_wrap)(const double* in, double* out, std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// Selected once per process: AVX2 when available, overridable with
/// PHASELOCK_SIMD=scalar|avx2.
const KernelTable& active_kernels();

/// Scalar sawtooth used by the kernels: identity on [-pi, pi), period 2 pi.
double sawtooth_wrap(double phi);

}  // namespace simd
}  // namespace phaselock
