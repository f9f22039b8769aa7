#include "phaselock/oscillator.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <string>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "phaselock/errors.hpp"
#include "phaselock/kalman_bucy.hpp"
#include "phaselock/parallel.hpp"
#include "phaselock/smoothers.hpp"

namespace phaselock {

namespace {

void require_steady_state(const OscParams& p, const char* what) {
  p.validate();
  if (p.q == 0.0) {
    throw DivergenceError(std::string(what) + ": Q = 0 has no steady state");
  }
}

constexpr std::size_t kTrialsPerChunk = 16;

}  // namespace

void OscParams::validate() const {
  if (!(mass > 0.0) || !(mech_freq > 0.0) || !(hbar > 0.0)) {
    throw std::invalid_argument("OscParams: mass, frequency and hbar must be > 0");
  }
  if (!(q >= 0.0) || !std::isfinite(q)) throw std::invalid_argument("OscParams: Q must be >= 0");
}

OscParams OscParams::from_physical(double mass, double mech_freq, const PhysicalParams& phys) {
  phys.validate();
  OscParams p;
  p.mass = mass;
  p.mech_freq = mech_freq;
  p.hbar = phys.hbar;
  p.q = 2.0 * phys.beta * phys.beta * phys.power / (mass * phys.omega0 * mech_freq * mech_freq);
  p.validate();
  return p;
}

LinearModel oscillator_model(const OscParams& p, double beta) {
  p.validate();
  if (!(beta > 0.0)) throw std::invalid_argument("oscillator_model: beta must be > 0");
  if (p.q == 0.0) throw std::invalid_argument("oscillator_model: Q = 0 means no measurement");
  Mat a(2, 2);
  a << 0.0, 1.0 / p.mass, -p.mass * p.mech_freq * p.mech_freq, 0.0;
  Mat b(2, 1);
  b << 0.0, 1.0;
  RowVec c(2);
  c << beta, 0.0;
  Mat u(1, 1);
  u(0, 0) = p.u();
  return LinearModel(a, b, c, u, beta * beta / p.v());
}

Mat oscillator_filter_steady_state(const OscParams& p) {
  require_steady_state(p, "oscillator_filter_steady_state");
  const double root = std::sqrt(1.0 + p.q * p.q);
  const double inner = std::sqrt(root - 1.0);
  const double mw = p.mass * p.mech_freq;
  Mat s(2, 2);
  s(0, 0) = (p.hbar / (2.0 * mw)) * (std::sqrt(2.0) / p.q) * inner;
  s(0, 1) = (p.hbar / 2.0) * (root - 1.0) / p.q;
  s(1, 0) = s(0, 1);
  s(1, 1) = (p.hbar * mw / 2.0) * (std::sqrt(2.0) / p.q) * inner * root;
  return s;
}

Mat oscillator_backward_steady_state(const OscParams& p) {
  Mat s = oscillator_filter_steady_state(p);
  s(0, 1) = -s(0, 1);
  s(1, 0) = -s(1, 0);
  return s;
}

Mat oscillator_smoothing_steady_state(const OscParams& p) {
  require_steady_state(p, "oscillator_smoothing_steady_state");
  const double root = std::sqrt(1.0 + p.q * p.q);
  const double c = std::cos(0.5 * std::atan(p.q));
  const double mw = p.mass * p.mech_freq;
  Mat s = Mat::Zero(2, 2);
  s(0, 0) = (p.hbar / (4.0 * mw)) * c / std::sqrt(root);
  s(1, 1) = (p.hbar * mw / 4.0) * c * std::sqrt(root);
  return s;
}

CovariancePair oscillator_steady_states(const OscParams& p) {
  return {oscillator_filter_steady_state(p), oscillator_backward_steady_state(p),
          oscillator_smoothing_steady_state(p)};
}

double oscillator_uncertainty_product(const OscParams& p) {
  require_steady_state(p, "oscillator_uncertainty_product");
  return (p.hbar * p.hbar / 32.0) * (1.0 + 1.0 / std::sqrt(1.0 + p.q * p.q));
}

double oscillator_relaxation_time(const OscParams& p) {
  p.validate();
  if (p.q == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (std::sqrt(2.0) * p.mech_freq * std::sqrt(std::sqrt(1.0 + p.q * p.q) - 1.0));
}

ConstraintReport constraint_report(const OscParams& p, const PhysicalParams& phys,
                                   double photon_limit, double threshold_limit) {
  require_steady_state(p, "constraint_report");
  phys.validate();
  const OscParams implied = OscParams::from_physical(p.mass, p.mech_freq, phys);
  if (std::abs(implied.q - p.q) > 1e-9 * std::max(1.0, p.q) ||
      std::abs(phys.hbar - p.hbar) > 1e-12 * p.hbar) {
    throw std::invalid_argument("constraint_report: physical parameters imply a different Q");
  }
  ConstraintReport r;
  r.photon_limit = photon_limit;
  r.threshold_limit = threshold_limit;
  r.photon_margin = phys.power * oscillator_relaxation_time(p) / (phys.hbar * phys.omega0);
  r.threshold_margin = phys.beta * phys.beta * oscillator_filter_steady_state(p)(0, 0);
  r.photon_ok = r.photon_margin > photon_limit;
  r.threshold_ok = r.threshold_margin < threshold_limit;
  return r;
}

namespace {

// Per-trial window means of e e^T, stored as (11, 12, 22).
using Moments = std::array<double, 3>;

void add_outer(Moments& m, double e1, double e2) {
  m[0] += e1 * e1;
  m[1] += e1 * e2;
  m[2] += e2 * e2;
}

struct TrialMoments {
  Moments filter{};
  Moments backward{};
  Moments smooth{};
};

void summarize(const std::vector<Moments>& per_trial, Mat& mean, Mat& err) {
  const double n = static_cast<double>(per_trial.size());
  Moments mu{};
  for (int i = 0; i < 3; ++i) {
    NeumaierSum s;
    for (const auto& m : per_trial) s.add(m[i]);
    mu[i] = s.value() / n;
  }
  Moments se{};
  for (int i = 0; i < 3; ++i) {
    NeumaierSum s;
    for (const auto& m : per_trial) s.add((m[i] - mu[i]) * (m[i] - mu[i]));
    se[i] = std::sqrt(s.value() / (n - 1.0) / n);
  }
  mean.resize(2, 2);
  err.resize(2, 2);
  mean << mu[0], mu[1], mu[1], mu[2];
  err << se[0], se[1], se[1], se[2];
}

}  // namespace

OscValidation simulate_and_validate(const OscParams& p, const TimeGrid& grid, std::size_t trials,
                                    std::uint64_t master_seed, double beta) {
  require_steady_state(p, "simulate_and_validate");
  grid.validate();
  if (trials < 2) throw std::invalid_argument("simulate_and_validate: at least 2 trials required");
  const LinearModel model = oscillator_model(p, beta);
  const double tf = oscillator_relaxation_time(p);
  const double dt = grid.dt;
  const std::size_t samples = grid.samples();

  OscValidation out;
  out.trials = trials;
  out.transient_warning = grid.duration() <= 20.0 * tf;

  const auto settle = static_cast<std::size_t>(std::ceil(10.0 * tf / dt));
  const std::size_t mid = grid.steps / 2;
  const std::size_t f0 = std::min(std::max(settle, mid), grid.steps);
  std::size_t s0 = settle;
  std::size_t s1 = samples > settle ? samples - settle : 0;
  if (s0 >= s1) {
    s0 = mid;
    s1 = mid + 1;
  }
  out.filter_window_begin = grid.time(f0);
  out.smooth_window_begin = grid.time(s0);
  out.smooth_window_end = grid.time(s1 - 1);

  Mat sigma0 = Mat::Zero(2, 2);
  const double mw = p.mass * p.mech_freq;
  sigma0(0, 0) = p.hbar / (2.0 * mw);
  sigma0(1, 1) = p.hbar * mw / 2.0;
  const auto fwd_path = integrate_riccati(model, grid, sigma0);
  const auto bwd_path = integrate_backward_information(model, grid);

  std::vector<TrialMoments> per_trial(trials);
  const std::size_t chunks = (trials + kTrialsPerChunk - 1) / kTrialsPerChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t last = std::min(trials, (c + 1) * kTrialsPerChunk);
    for (std::size_t t = c * kTrialsPerChunk; t < last; ++t) {
      const Trajectory traj =
          simulate(model, grid, Vec::Zero(2), derive_trial_seed(master_seed, t));
      const FilterRun fr = kb_filter(model, fwd_path, traj.observations, Vec::Zero(2));
      const BackwardInfo bi = backward_filter(model, bwd_path, traj.observations);
      const SmoothRun sr = two_filter_combine(fr, bi);
      TrialMoments& m = per_trial[t];
      for (std::size_t j = f0; j < samples; ++j) {
        const Vec e = traj.states[j] - fr.estimates[j];
        add_outer(m.filter, e(0), e(1));
      }
      for (std::size_t j = s0; j < s1; ++j) {
        const Vec e = traj.states[j] - sr.estimates[j];
        add_outer(m.smooth, e(0), e(1));
        const Mat& info = bi.info_matrices()[j];
        const Vec retro = inverse_spd(info) * bi.info_vectors[j];
        const Vec r = traj.states[j] - retro;
        add_outer(m.backward, r(0), r(1));
      }
      const double nf = static_cast<double>(samples - f0);
      const double ns = static_cast<double>(s1 - s0);
      for (int i = 0; i < 3; ++i) {
        m.filter[i] /= nf;
        m.smooth[i] /= ns;
        m.backward[i] /= ns;
      }
    }
  });

  std::vector<Moments> f(trials);
  std::vector<Moments> b(trials);
  std::vector<Moments> s(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    f[t] = per_trial[t].filter;
    b[t] = per_trial[t].backward;
    s[t] = per_trial[t].smooth;
  }
  summarize(f, out.empirical.filter_cov, out.stderr_cov.filter_cov);
  summarize(b, out.empirical.backward_cov, out.stderr_cov.backward_cov);
  summarize(s, out.empirical.smooth_cov, out.stderr_cov.smooth_cov);

  const Mat& sf = out.empirical.filter_cov;
  out.det_filter = sf(0, 0) * sf(1, 1) - sf(0, 1) * sf(0, 1);
  // Delta method on the per-trial moments.
  const double n = static_cast<double>(trials);
  NeumaierSum lin_sum;
  std::vector<double> lin(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const Moments& m = f[t];
    lin[t] = sf(1, 1) * m[0] + sf(0, 0) * m[2] - 2.0 * sf(0, 1) * m[1];
    lin_sum.add(lin[t]);
  }
  const double lin_mean = lin_sum.value() / n;
  NeumaierSum lin_var;
  for (double v : lin) lin_var.add((v - lin_mean) * (v - lin_mean));
  out.det_filter_stderr = std::sqrt(lin_var.value() / (n - 1.0) / n);
  return out;
}

}  // namespace phaselock
