#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "phaselock/simd/kernels.hpp"

using namespace phaselock;
using namespace phaselock::simd;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> gaussian(std::size_t n, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

struct LoopBuffers {
  std::vector<double> x, xhat, err, state, estimate, eta;
  explicit LoopBuffers(std::size_t steps)
      : x{0.1, -0.2, 0.3, 2.5},
        xhat(kLanes, 0.0),
        err((steps + 1) * kLanes),
        state((steps + 1) * kLanes),
        estimate((steps + 1) * kLanes),
        eta(steps * kLanes) {}
};

void run(const KernelTable& k, DiscriminatorMode mode, const std::vector<double>& gains,
         const std::vector<double>& du, const std::vector<double>& z, LoopBuffers& b) {
  LoopBlock blk;
  blk.steps = gains.size();
  blk.drift = -1.0;
  blk.dt = 1e-3;
  blk.beta = 1.3;
  blk.decay = 0.999;
  blk.gains = gains.data();
  blk.du = du.data();
  blk.z = z.data();
  blk.mode = mode;
  blk.x = b.x.data();
  blk.xhat = b.xhat.data();
  blk.err = b.err.data();
  blk.state = b.state.data();
  blk.estimate = b.estimate.data();
  blk.eta = b.eta.data();
  k.run_loop(blk);
}

}  // namespace

TEST_CASE("scalar sawtooth wrap") {
  CHECK(sawtooth_wrap(0.5) == 0.5);
  CHECK(sawtooth_wrap(-kLanes * 0.0 - 3.0) == -3.0);
  CHECK(sawtooth_wrap(3.14159265358979323846) == doctest::Approx(-3.14159265358979323846));
  CHECK(sawtooth_wrap(7.0) == doctest::Approx(7.0 - 2.0 * 3.14159265358979323846));
  CHECK(sawtooth_wrap(-7.0) == doctest::Approx(-7.0 + 2.0 * 3.14159265358979323846));
  for (double v : gaussian(1000, 50.0, 1)) {
    const double w = sawtooth_wrap(v);
    CHECK(w >= -3.14159265358979323846);
    CHECK(w < 3.14159265358979323846);
  }
}

TEST_CASE("scalar loop kernel follows the one-step-delayed recursion") {
  const std::size_t steps = 50;
  const std::vector<double> gains(steps, 0.02);
  const auto du = gaussian(steps * kLanes, 0.03, 2);
  const auto z = gaussian(steps * kLanes, 0.5, 3);
  LoopBuffers b(steps);
  run(scalar_kernels(), DiscriminatorMode::nonlinear, gains, du, z, b);
  // reference written out for lane 3
  double x = 2.5;
  double xh = 0.0;
  for (std::size_t j = 0; j < steps; ++j) {
    const double e = 1.3 * x - 1.3 * xh;
    CHECK(b.err[j * kLanes + 3] == e);
    const double eta = std::sin(e) + z[j * kLanes + 3];
    xh = 0.999 * xh + 0.02 * eta;
    x = (x + (-1.0 * x) * 1e-3) + du[j * kLanes + 3];
  }
  CHECK(b.x[3] == x);
  CHECK(b.xhat[3] == xh);
}

TEST_CASE("AVX2 kernels are bit-identical to the scalar reference") {
  const KernelTable* avx = avx2_kernels();
  if (avx == nullptr) {
    MESSAGE("AVX2 not available; equivalence not exercised");
    return;
  }
  const std::size_t steps = 777;
  const auto gains = gaussian(steps, 0.05, 10);
  const auto du = gaussian(steps * kLanes, 0.1, 11);
  const auto z = gaussian(steps * kLanes, 2.0, 12);
  for (auto mode : {DiscriminatorMode::linearized, DiscriminatorMode::nonlinear,
                    DiscriminatorMode::canonical}) {
    LoopBuffers a(steps), b(steps);
    run(scalar_kernels(), mode, gains, du, z, a);
    run(*avx, mode, gains, du, z, b);
    CHECK(same_bits(a.err, b.err));
    CHECK(same_bits(a.state, b.state));
    CHECK(same_bits(a.estimate, b.estimate));
    CHECK(same_bits(a.eta, b.eta));
    CHECK(same_bits(a.x, b.x));
    CHECK(same_bits(a.xhat, b.xhat));
  }

  const std::size_t samples = 1001;
  const auto err = gaussian(samples * kLanes, 4.0, 13);
  std::vector<double> s2a(samples, 0.5), s4a(samples, 0.25), wa(kLanes, 1.0);
  std::vector<double> s2b = s2a, s4b = s4a, wb = wa;
  ErrorAccumulation acc{err.data(), samples, 100, 900, s2a.data(), s4a.data(), wa.data()};
  scalar_kernels().accumulate_errors(acc);
  acc.sum2 = s2b.data();
  acc.sum4 = s4b.data();
  acc.window_sums = wb.data();
  avx->accumulate_errors(acc);
  CHECK(same_bits(s2a, s2b));
  CHECK(same_bits(s4a, s4b));
  CHECK(same_bits(wa, wb));

  std::vector<double> phase(samples * kLanes);
  const auto steps_noise = gaussian(samples * kLanes, 0.4, 14);
  for (std::size_t l = 0; l < kLanes; ++l) {
    double p = 0.0;
    for (std::size_t j = 0; j < samples; ++j) {
      p += steps_noise[j * kLanes + l];
      phase[j * kLanes + l] = p;
    }
  }
  std::vector<double> refa(kLanes, 0.0), refb(kLanes, 0.0);
  std::vector<std::uint64_t> ca(kLanes, 0), cb(kLanes, 0);
  SlipCount sc{phase.data(), samples, 3.14159265358979323846, refa.data(), ca.data()};
  scalar_kernels().count_slips(sc);
  sc.reference = refb.data();
  sc.counts = cb.data();
  avx->count_slips(sc);
  CHECK(ca == cb);
  CHECK(same_bits(refa, refb));
  CHECK(ca[0] + ca[1] + ca[2] + ca[3] > 0);

  std::vector<double> oa(samples * kLanes), ob(samples * kLanes);
  AnticausalBlock ab{err.data(), samples, 0.97, 0.03, 120, oa.data()};
  scalar_kernels().anticausal(ab);
  ab.out = ob.data();
  avx->anticausal(ab);
  CHECK(same_bits(oa, ob));

  const auto wide = gaussian(4099, 30.0, 15);
  std::vector<double> wa2(wide.size()), wb2(wide.size());
  scalar_kernels().sawtooth_wrap(wide.data(), wa2.data(), wide.size());
  avx->sawtooth_wrap(wide.data(), wb2.data(), wide.size());
  CHECK(same_bits(wa2, wb2));
}

TEST_CASE("slip counter hysteresis") {
  // lane 0 crosses pi once and settles near 2 pi: one slip
  const double pi = 3.14159265358979323846;
  std::vector<double> err(4 * kLanes, 0.0);
  const double path[4] = {0.0, pi + 0.1, pi + 1.0, 2.0 * pi};
  for (int j = 0; j < 4; ++j) err[j * kLanes] = path[j];
  std::vector<double> ref(kLanes, 0.0);
  std::vector<std::uint64_t> counts(kLanes, 0);
  SlipCount sc{err.data(), 4, pi, ref.data(), counts.data()};
  scalar_kernels().count_slips(sc);
  CHECK(counts[0] == 1);
  CHECK(ref[0] == doctest::Approx(2.0 * pi));
  CHECK(counts[1] == 0);
}

TEST_CASE("anticausal recursion equals a truncated sum") {
  const std::size_t samples = 60;
  const auto in = gaussian(samples * kLanes, 1.0, 20);
  std::vector<double> out(samples * kLanes);
  const double decay = 0.9;
  const double gain = 0.5;
  const std::size_t m = 7;
  AnticausalBlock ab{in.data(), samples, decay, gain, m, out.data()};
  scalar_kernels().anticausal(ab);
  for (std::size_t j = 0; j + m + 1 < samples; ++j) {
    double ref = 0.0;
    for (std::size_t i = 0; i <= m; ++i) ref += gain * std::pow(decay, i) * in[(j + i) * kLanes + 2];
    CHECK(out[j * kLanes + 2] == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("active kernels resolve to a known table") {
  const std::string name = active_kernels().name;
  CHECK((name == "scalar" || name == "avx2"));
}
