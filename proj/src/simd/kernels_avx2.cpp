#include <cmath>
#include <cstring>

#include "phaselock/simd/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define PHASELOCK_HAVE_X86 1
#endif

namespace phaselock::simd {

#ifdef PHASELOCK_HAVE_X86

namespace {

#define AVX2_FN __attribute__((target("avx2")))

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

AVX2_FN inline __m256d wrap4(__m256d phi) {
  const __m256d pi = _mm256_set1_pd(kPi);
  const __m256d neg_pi = _mm256_set1_pd(-kPi);
  const __m256d two_pi = _mm256_set1_pd(kTwoPi);
  const __m256d s = _mm256_sub_pd(phi, pi);
  const __m256d q = _mm256_floor_pd(_mm256_div_pd(s, two_pi));
  __m256d r = _mm256_sub_pd(_mm256_sub_pd(s, _mm256_mul_pd(two_pi, q)), pi);
  r = _mm256_blendv_pd(r, _mm256_sub_pd(r, two_pi), _mm256_cmp_pd(r, pi, _CMP_GE_OQ));
  r = _mm256_blendv_pd(r, _mm256_add_pd(r, two_pi), _mm256_cmp_pd(r, neg_pi, _CMP_LT_OQ));
  const __m256d inside = _mm256_and_pd(_mm256_cmp_pd(phi, neg_pi, _CMP_GE_OQ),
                                       _mm256_cmp_pd(phi, pi, _CMP_LT_OQ));
  return _mm256_blendv_pd(r, phi, inside);
}

AVX2_FN inline __m256d sin4(__m256d e) {
  alignas(32) double v[kLanes];
  _mm256_store_pd(v, e);
  for (double& d : v) d = std::sin(d);
  return _mm256_load_pd(v);
}

AVX2_FN void run_loop(const LoopBlock& b) {
  const __m256d beta = _mm256_set1_pd(b.beta);
  const __m256d drift = _mm256_set1_pd(b.drift);
  const __m256d dt = _mm256_set1_pd(b.dt);
  const __m256d decay = _mm256_set1_pd(b.decay);
  __m256d x = _mm256_loadu_pd(b.x);
  __m256d xh = _mm256_loadu_pd(b.xhat);
  for (std::size_t j = 0; j < b.steps; ++j) {
    const std::size_t i = j * kLanes;
    const __m256d e = _mm256_sub_pd(_mm256_mul_pd(beta, x), _mm256_mul_pd(beta, xh));
    _mm256_storeu_pd(b.err + i, e);
    if (b.state) _mm256_storeu_pd(b.state + i, x);
    if (b.estimate) _mm256_storeu_pd(b.estimate + i, xh);
    __m256d d = e;
    if (b.mode == DiscriminatorMode::nonlinear) {
      d = sin4(e);
    } else if (b.mode == DiscriminatorMode::canonical) {
      d = wrap4(e);
    }
    const __m256d eta = _mm256_add_pd(d, _mm256_loadu_pd(b.z + i));
    if (b.eta) _mm256_storeu_pd(b.eta + i, eta);
    xh = _mm256_add_pd(_mm256_mul_pd(decay, xh), _mm256_mul_pd(_mm256_set1_pd(b.gains[j]), eta));
    x = _mm256_add_pd(_mm256_add_pd(x, _mm256_mul_pd(_mm256_mul_pd(drift, x), dt)),
                      _mm256_loadu_pd(b.du + i));
  }
  const std::size_t i = b.steps * kLanes;
  _mm256_storeu_pd(b.err + i, _mm256_sub_pd(_mm256_mul_pd(beta, x), _mm256_mul_pd(beta, xh)));
  if (b.state) _mm256_storeu_pd(b.state + i, x);
  if (b.estimate) _mm256_storeu_pd(b.estimate + i, xh);
  _mm256_storeu_pd(b.x, x);
  _mm256_storeu_pd(b.xhat, xh);
}

AVX2_FN inline double reduce4(__m256d v) {
  // (l0 + l1) + (l2 + l3), matching the scalar order.
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair_lo = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
  const __m128d pair_hi = _mm_add_sd(hi, _mm_unpackhi_pd(hi, hi));
  return _mm_cvtsd_f64(_mm_add_sd(pair_lo, pair_hi));
}

AVX2_FN void accumulate_errors(const ErrorAccumulation& a) {
  __m256d window = _mm256_loadu_pd(a.window_sums);
  for (std::size_t j = 0; j < a.samples; ++j) {
    const __m256d e = _mm256_loadu_pd(a.err + j * kLanes);
    const __m256d s2 = _mm256_mul_pd(e, e);
    const __m256d s4 = _mm256_mul_pd(s2, s2);
    a.sum2[j] += reduce4(s2);
    a.sum4[j] += reduce4(s4);
    if (j >= a.window_begin && j < a.window_end) window = _mm256_add_pd(window, s2);
  }
  _mm256_storeu_pd(a.window_sums, window);
}

AVX2_FN void count_slips(const SlipCount& s) {
  const __m256d thr = _mm256_set1_pd(s.threshold);
  const __m256d neg_thr = _mm256_set1_pd(-s.threshold);
  const __m256d two_pi = _mm256_set1_pd(kTwoPi);
  const __m256i one = _mm256_set1_epi64x(1);
  __m256d ref = _mm256_loadu_pd(s.reference);
  __m256i counts = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(s.counts));
  for (std::size_t j = 0; j < s.samples; ++j) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(s.err + j * kLanes), ref);
    const __m256d up = _mm256_cmp_pd(d, thr, _CMP_GT_OQ);
    const __m256d down = _mm256_andnot_pd(up, _mm256_cmp_pd(d, neg_thr, _CMP_LE_OQ));
    ref = _mm256_blendv_pd(ref, _mm256_add_pd(ref, two_pi), up);
    ref = _mm256_blendv_pd(ref, _mm256_sub_pd(ref, two_pi), down);
    const __m256i hit = _mm256_castpd_si256(_mm256_or_pd(up, down));
    counts = _mm256_add_epi64(counts, _mm256_and_si256(hit, one));
  }
  _mm256_storeu_pd(s.reference, ref);
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(s.counts), counts);
}

AVX2_FN void anticausal(const AnticausalBlock& a) {
  if (a.samples == 0) return;
  const __m256d decay = _mm256_set1_pd(a.decay);
  const __m256d gain = _mm256_set1_pd(a.gain);
  __m256d s = _mm256_setzero_pd();
  for (std::size_t j = a.samples; j-- > 0;) {
    s = _mm256_add_pd(_mm256_mul_pd(decay, s), _mm256_mul_pd(gain, _mm256_loadu_pd(a.in + j * kLanes)));
    _mm256_storeu_pd(a.out + j * kLanes, s);
  }
  double tail = 1.0;
  for (std::size_t k = 0; k <= a.delay_steps; ++k) tail *= a.decay;
  const __m256d t = _mm256_set1_pd(tail);
  const std::size_t lag = a.delay_steps + 1;
  for (std::size_t j = 0; j + lag < a.samples; ++j) {
    const __m256d cur = _mm256_loadu_pd(a.out + j * kLanes);
    const __m256d far = _mm256_loadu_pd(a.out + (j + lag) * kLanes);
    _mm256_storeu_pd(a.out + j * kLanes, _mm256_sub_pd(cur, _mm256_mul_pd(t, far)));
  }
}

AVX2_FN void wrap_array(const double* in, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) _mm256_storeu_pd(out + i, wrap4(_mm256_loadu_pd(in + i)));
  for (; i < n; ++i) out[i] = sawtooth_wrap(in[i]);
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const bool supported = __builtin_cpu_supports("avx2");
  static const KernelTable table{"avx2", run_loop, accumulate_errors, count_slips, anticausal,
                                 wrap_array};
  return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_kernels() { return nullptr; }

#endif

}  // namespace phaselock::simd
