#include "phaselock/pll.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "phaselock/errors.hpp"
#include "phaselock/kalman_bucy.hpp"
#include "phaselock/parallel.hpp"
#include "phaselock/smoothers.hpp"

namespace phaselock {

namespace {

using simd::kLanes;

// Trials per parallel task; fixed so results do not depend on the thread count.
constexpr std::size_t kBlocksPerChunk = 16;

void check_experiment(const LoopExperiment& ex) {
  ex.grid.validate();
  if (ex.model.dim() != 1) {
    throw ConfigError("phase loop: the message model must be one-dimensional");
  }
  if (!(ex.slip_threshold > 0.0)) throw ConfigError("phase loop: slip threshold must be > 0");
  if (ex.delay < 0.0) throw ConfigError("phase loop: delay must be >= 0");
  if (ex.smoothing == SmoothingKind::post_loop && ex.estimator != EstimatorKind::wiener_loop) {
    throw ConfigError("phase loop: post-loop smoothing needs the Wiener loop filter");
  }
}

double drift_of(const LinearModel& m) { return m.drift()(0, 0); }
double noise_of(const LinearModel& m) { return m.process_covariance()(0, 0); }

std::size_t ceil_index(double t, double dt) {
  return static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
}

struct PostLoopDesign {
  OnePoleRecursion recursion;
  std::size_t delay_steps = 0;
  double delay = 0.0;
  bool warning = false;
};

PostLoopDesign design_post_loop(const LoopExperiment& ex, double gamma) {
  const LinearModel& m = ex.model;
  const double beta = m.coupling();
  const LorentzianSpectrum sx{noise_of(m), -drift_of(m), 0.0};
  const LorentzianSpectrum sy = observation_spectrum(sx, beta, m.meas_intensity());
  const LorentzianSpectrum sxy = cross_spectrum(sx, beta);
  const RationalTransfer h = wiener_filter(sxy, spectral_factorize(sy));
  const PostLoopFilter f = post_loop_filter(unrealizable_filter(sxy, sy), h);
  PostLoopDesign d;
  d.recursion = discretize_one_pole(f.transfer, ex.grid.dt);
  d.delay = ex.delay > 0.0 ? ex.delay : f.suggested_delay;
  d.delay_steps = static_cast<std::size_t>(std::llround(d.delay / ex.grid.dt));
  d.warning = d.delay < 5.0 / gamma;
  return d;
}

// Noise for one block of lanes, drawn per trial in the order x0, then
// (du_j, z_j) for each step.
struct BlockNoise {
  std::vector<double> du;
  std::vector<double> z;
  std::array<double, kLanes> x0{};

  explicit BlockNoise(std::size_t steps) : du(steps * kLanes), z(steps * kLanes) {}
};

void draw_block(const LoopExperiment& ex, const LoopDesign& design,
                const std::array<std::uint64_t, kLanes>& seeds, std::size_t active,
                BlockNoise& noise) {
  const std::size_t steps = ex.grid.steps;
  const double du_scale = std::sqrt(noise_of(ex.model) * ex.grid.dt);
  const double z_scale = std::sqrt(ex.model.meas_intensity() / ex.grid.dt);
  const double x0_scale = std::sqrt(design.stationary_variance);
  const bool draw_x0 = ex.stationary_start && design.stationary_variance > 0.0;
  for (std::size_t l = 0; l < kLanes; ++l) {
    if (l >= active) {
      noise.x0[l] = 0.0;
      for (std::size_t j = 0; j < steps; ++j) {
        noise.du[j * kLanes + l] = 0.0;
        noise.z[j * kLanes + l] = 0.0;
      }
      continue;
    }
    Rng rng(seeds[l]);
    noise.x0[l] = draw_x0 ? x0_scale * standard_normal(rng) : 0.0;
    for (std::size_t j = 0; j < steps; ++j) {
      noise.du[j * kLanes + l] = du_scale * standard_normal(rng);
      noise.z[j * kLanes + l] = z_scale * standard_normal(rng);
    }
  }
}

simd::LoopBlock make_block(const LoopExperiment& ex, const LoopDesign& design,
                           const BlockNoise& noise, double* x, double* xhat, double* err) {
  simd::LoopBlock b;
  b.steps = ex.grid.steps;
  b.drift = drift_of(ex.model);
  b.dt = ex.grid.dt;
  b.beta = ex.model.coupling();
  b.decay = design.decay;
  b.gains = design.gains.data();
  b.du = noise.du.data();
  b.z = noise.z.data();
  b.mode = ex.mode;
  b.x = x;
  b.xhat = xhat;
  b.err = err;
  for (std::size_t l = 0; l < kLanes; ++l) {
    x[l] = noise.x0[l];
    xhat[l] = 0.0;
  }
  return b;
}

}  // namespace

double loop_bandwidth(const LinearModel& model) {
  if (model.dim() != 1) throw std::invalid_argument("loop_bandwidth: scalar model required");
  const double a = drift_of(model);
  const double beta = model.coupling();
  return std::sqrt(a * a + beta * beta * noise_of(model) / model.meas_intensity());
}

LoopDesign design_loop(const LoopExperiment& ex) {
  check_experiment(ex);
  const LinearModel& m = ex.model;
  const double a = drift_of(m);
  const double q = noise_of(m);
  const double beta = m.coupling();
  const double dt = ex.grid.dt;

  LoopDesign d;
  d.gamma = loop_bandwidth(m);
  if (!(d.gamma > 0.0)) throw ConfigError("phase loop: zero loop bandwidth (no noise, no drift)");
  d.stationary_variance = a < 0.0 ? q / (-2.0 * a) : 0.0;
  if (std::isnan(ex.sigma0)) {
    d.sigma0 = ex.stationary_start ? d.stationary_variance : 0.0;
  } else {
    if (ex.sigma0 < 0.0) throw ConfigError("phase loop: sigma0 must be >= 0");
    d.sigma0 = ex.sigma0;
  }

  if (ex.estimator == EstimatorKind::kb_filter) {
    Mat s0(1, 1);
    s0(0, 0) = d.sigma0;
    const auto path = integrate_riccati(m, ex.grid, s0);
    const double scale = beta / m.meas_intensity() * dt;
    d.decay = 1.0 + a * dt;
    d.gains.resize(ex.grid.steps);
    for (std::size_t j = 0; j < ex.grid.steps; ++j) d.gains[j] = path->values[j](0, 0) * scale;
    return d;
  }

  if (a > 0.0) throw ConfigError("phase loop: Wiener loop filter needs a stable or Wiener message");
  if (beta == 0.0) throw ConfigError("phase loop: Wiener loop filter needs beta != 0");
  const LorentzianSpectrum sx{q, -a, 0.0};
  const LorentzianSpectrum sy = observation_spectrum(sx, beta, m.meas_intensity());
  const RationalTransfer h = wiener_filter(cross_spectrum(sx, beta), spectral_factorize(sy));
  const RationalTransfer l = loop_filter(h, beta);
  if (!(l.pole * dt < 0.1) || !(h.pole * dt < 0.1)) {
    throw ConfigError("phase loop: dt too coarse for the loop filter (gamma dt >= 0.1)");
  }
  const OnePoleRecursion r = discretize_one_pole(l, dt);
  d.decay = r.decay;
  d.gains.assign(ex.grid.steps, r.input_gain);
  return d;
}

PllRun run_pll(const LoopExperiment& ex, std::uint64_t seed) {
  const LoopDesign design = design_loop(ex);
  const std::size_t steps = ex.grid.steps;
  const std::size_t samples = ex.grid.samples();
  BlockNoise noise(steps);
  std::array<std::uint64_t, kLanes> seeds{seed, 0, 0, 0};
  draw_block(ex, design, seeds, 1, noise);

  std::array<double, kLanes> x{};
  std::array<double, kLanes> xhat{};
  std::vector<double> err(samples * kLanes);
  std::vector<double> state(samples * kLanes);
  std::vector<double> est(samples * kLanes);
  std::vector<double> eta(steps * kLanes);
  simd::LoopBlock b = make_block(ex, design, noise, x.data(), xhat.data(), err.data());
  b.state = state.data();
  b.estimate = est.data();
  b.eta = eta.data();
  simd::active_kernels().run_loop(b);

  const double beta = ex.model.coupling();
  PllRun run;
  run.grid = ex.grid;
  run.mode = ex.mode;
  run.true_phase.resize(samples);
  run.estimate.resize(samples);
  run.state_estimate.resize(samples);
  run.homodyne_record.resize(steps);
  for (std::size_t j = 0; j < samples; ++j) {
    run.true_phase[j] = beta * state[j * kLanes];
    run.state_estimate[j] = est[j * kLanes];
    run.estimate[j] = beta * est[j * kLanes];
  }
  for (std::size_t j = 0; j < steps; ++j) run.homodyne_record[j] = eta[j * kLanes];
  run.slips = detect_cycle_slips(run, ex.slip_threshold);
  return run;
}

PllRun run_pll(const LinearModel& model, EstimatorKind estimator, DiscriminatorMode mode,
               const TimeGrid& grid, std::uint64_t seed) {
  LoopExperiment ex{model};
  ex.estimator = estimator;
  ex.mode = mode;
  ex.grid = grid;
  return run_pll(ex, seed);
}

std::vector<double> detect_cycle_slips(const PllRun& run, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("detect_cycle_slips: threshold must be > 0");
  std::vector<double> events;
  double ref = 0.0;
  for (std::size_t j = 0; j < run.true_phase.size(); ++j) {
    const double d = (run.true_phase[j] - run.estimate[j]) - ref;
    if (d > threshold) {
      ref += 2.0 * kPi;
      events.push_back(run.grid.time(j));
    } else if (d <= -threshold) {
      ref -= 2.0 * kPi;
      events.push_back(run.grid.time(j));
    }
  }
  return events;
}

PostLoopSeries apply_post_loop_smoother(const PllRun& run, const OnePoleRecursion& f,
                                        double delay) {
  if (f.form != TransferForm::anticausal && f.decay != 0.0) {
    throw std::invalid_argument("apply_post_loop_smoother: recursion must be anticausal");
  }
  if (!(delay >= 0.0)) throw std::invalid_argument("apply_post_loop_smoother: delay must be >= 0");
  const std::size_t samples = run.state_estimate.size();
  PostLoopSeries out;
  out.delay_steps = static_cast<std::size_t>(std::llround(delay / run.grid.dt));
  out.truncation_warning = f.rate > 0.0 && delay < 5.0 / f.rate;
  std::vector<double> in(samples * kLanes, 0.0);
  std::vector<double> res(samples * kLanes, 0.0);
  for (std::size_t j = 0; j < samples; ++j) in[j * kLanes] = run.state_estimate[j];
  simd::AnticausalBlock a;
  a.in = in.data();
  a.samples = samples;
  a.decay = f.decay;
  a.gain = f.input_gain;
  a.delay_steps = out.delay_steps;
  a.out = res.data();
  simd::active_kernels().anticausal(a);
  out.smoothed.resize(samples);
  for (std::size_t j = 0; j < samples; ++j) out.smoothed[j] = res[j * kLanes];
  return out;
}

namespace {

struct Accumulator {
  std::vector<double> sum2;
  std::vector<double> sum4;

  explicit Accumulator(std::size_t samples) : sum2(samples, 0.0), sum4(samples, 0.0) {}
};

struct ChunkResult {
  Accumulator filtered;
  Accumulator smoothed;

  ChunkResult(std::size_t samples, bool smoothing)
      : filtered(samples), smoothed(smoothing ? samples : 0) {}
};

void finish_trajectory(const std::vector<ChunkResult>& chunks, bool smoothed, std::size_t n,
                       std::vector<double>& mse, std::vector<double>& stderr_out) {
  const std::size_t samples = smoothed ? chunks[0].smoothed.sum2.size()
                                       : chunks[0].filtered.sum2.size();
  mse.assign(samples, 0.0);
  stderr_out.assign(samples, 0.0);
  const double dn = static_cast<double>(n);
  for (std::size_t j = 0; j < samples; ++j) {
    NeumaierSum s2;
    NeumaierSum s4;
    for (const auto& c : chunks) {
      const Accumulator& acc = smoothed ? c.smoothed : c.filtered;
      s2.add(acc.sum2[j]);
      s4.add(acc.sum4[j]);
    }
    const double m = s2.value() / dn;
    const double var = (s4.value() - dn * m * m) / (dn - 1.0);
    mse[j] = m;
    stderr_out[j] = std::sqrt(std::max(var, 0.0) / dn);
  }
}

void tail_statistics(const std::vector<double>& window_sums, std::size_t width, double& mean,
                     double& stderr_out) {
  const double n = static_cast<double>(window_sums.size());
  NeumaierSum s;
  for (double v : window_sums) s.add(v / static_cast<double>(width));
  mean = s.value() / n;
  NeumaierSum d;
  for (double v : window_sums) {
    const double r = v / static_cast<double>(width) - mean;
    d.add(r * r);
  }
  stderr_out = std::sqrt(d.value() / (n - 1.0) / n);
}

}  // namespace

MonteCarloResult monte_carlo_mse(const LoopExperiment& ex, std::size_t trials,
                                 std::uint64_t master_seed, const MonteCarloOptions& opts) {
  if (trials < 2) throw std::invalid_argument("monte_carlo_mse: at least 2 trials required");
  const LoopDesign design = design_loop(ex);
  const TimeGrid& grid = ex.grid;
  const std::size_t steps = grid.steps;
  const std::size_t samples = grid.samples();
  const double dt = grid.dt;
  const double gamma = design.gamma;
  const double beta = ex.model.coupling();
  const double duration = grid.duration();

  MonteCarloResult res;
  res.trials = trials;
  res.grid = grid;
  res.gamma = gamma;

  // Tail window: final third of the record, never earlier than 20 / gamma.
  const std::size_t settle = ceil_index(20.0 / gamma, dt);
  const std::size_t w0 = std::max(ceil_index(2.0 * duration / 3.0, dt), settle);
  const std::size_t w1 = samples;
  if (w0 + 1 >= w1) {
    throw ConfigError("monte_carlo_mse: duration " + std::to_string(duration) +
                      " too short for a tail window after 20/gamma = " +
                      std::to_string(20.0 / gamma));
  }
  res.window_begin = grid.time(w0);
  res.window_end = grid.time(w1 - 1);

  Mat sigma_ss = steady_state_covariance(ex.model);
  res.analytic_mse = beta * beta * sigma_ss(0, 0);

  const bool smoothing = ex.smoothing != SmoothingKind::none;
  PostLoopDesign post;
  std::size_t sw0 = 0;
  std::size_t sw1 = 0;
  std::shared_ptr<const CovariancePath> fwd_path;
  std::shared_ptr<const InformationPath> bwd_path;
  if (smoothing) {
    res.smoothed = true;
    res.smoothed_analytic_mse = beta * beta * smoothing_steady_state_covariance(ex.model)(0, 0);
    // Interior window: both Riccati transients have decayed by exp(-20) after 10 / gamma.
    const std::size_t margin = ceil_index(10.0 / gamma, dt);
    sw0 = margin;
    if (ex.smoothing == SmoothingKind::post_loop) {
      post = design_post_loop(ex, gamma);
      res.delay = post.delay;
      res.truncation_warning = post.warning;
      sw1 = samples > post.delay_steps + 1 ? samples - post.delay_steps - 1 : 0;
    } else {
      Mat s0(1, 1);
      s0(0, 0) = design.sigma0;
      fwd_path = integrate_riccati(ex.model, grid, s0);
      if (!fwd_path->invertible()) {
        throw ConfigError("monte_carlo_mse: state-variable smoothing needs sigma0 > 0");
      }
      bwd_path = integrate_backward_information(ex.model, grid);
      sw1 = samples > margin ? samples - margin : 0;
    }
    if (sw0 + 1 >= sw1) {
      throw ConfigError("monte_carlo_mse: duration too short for an interior smoothing window");
    }
    res.smoothed_window_begin = grid.time(sw0);
    res.smoothed_window_end = grid.time(sw1 - 1);
  }

  const std::size_t blocks = (trials + kLanes - 1) / kLanes;
  const std::size_t chunks = (blocks + kBlocksPerChunk - 1) / kBlocksPerChunk;
  std::vector<ChunkResult> partial;
  partial.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) partial.emplace_back(samples, smoothing);
  std::vector<double> window(blocks * kLanes, 0.0);
  std::vector<double> smooth_window(blocks * kLanes, 0.0);
  std::vector<std::uint64_t> slip_counts(blocks * kLanes, 0);

  const simd::KernelTable& kern = simd::active_kernels();

  auto run_chunk = [&](std::size_t c) {
    BlockNoise noise(steps);
    std::vector<double> err(samples * kLanes);
    std::vector<double> state(smoothing ? samples * kLanes : 0);
    std::vector<double> est(smoothing ? samples * kLanes : 0);
    std::vector<double> eta(ex.smoothing == SmoothingKind::state_variable ? steps * kLanes : 0);
    std::vector<double> smooth(smoothing ? samples * kLanes : 0);
    std::vector<double> serr(smoothing ? samples * kLanes : 0);
    std::vector<double> y(steps);
    ChunkResult& out = partial[c];
    const std::size_t first = c * kBlocksPerChunk;
    const std::size_t last = std::min(blocks, first + kBlocksPerChunk);
    for (std::size_t blk = first; blk < last; ++blk) {
      std::array<std::uint64_t, kLanes> seeds{};
      const std::size_t base = blk * kLanes;
      const std::size_t active = std::min(kLanes, trials - base);
      for (std::size_t l = 0; l < active; ++l) {
        seeds[l] = opts.replicate_seed ? master_seed : derive_trial_seed(master_seed, base + l);
      }
      draw_block(ex, design, seeds, active, noise);
      std::array<double, kLanes> x{};
      std::array<double, kLanes> xhat{};
      simd::LoopBlock b = make_block(ex, design, noise, x.data(), xhat.data(), err.data());
      if (smoothing) {
        b.state = state.data();
        b.estimate = est.data();
      }
      if (!eta.empty()) b.eta = eta.data();
      kern.run_loop(b);

      simd::ErrorAccumulation acc;
      acc.err = err.data();
      acc.samples = samples;
      acc.window_begin = w0;
      acc.window_end = w1;
      acc.sum2 = out.filtered.sum2.data();
      acc.sum4 = out.filtered.sum4.data();
      acc.window_sums = window.data() + base;
      kern.accumulate_errors(acc);

      std::array<double, kLanes> ref{};
      simd::SlipCount sc;
      sc.err = err.data();
      sc.samples = samples;
      sc.threshold = ex.slip_threshold;
      sc.reference = ref.data();
      sc.counts = slip_counts.data() + base;
      kern.count_slips(sc);

      if (!smoothing) continue;
      if (ex.smoothing == SmoothingKind::post_loop) {
        simd::AnticausalBlock ab;
        ab.in = est.data();
        ab.samples = samples;
        ab.decay = post.recursion.decay;
        ab.gain = post.recursion.input_gain;
        ab.delay_steps = post.delay_steps;
        ab.out = smooth.data();
        kern.anticausal(ab);
      } else {
        std::fill(smooth.begin(), smooth.end(), 0.0);
        for (std::size_t l = 0; l < active; ++l) {
          for (std::size_t j = 0; j < steps; ++j) {
            y[j] = eta[j * kLanes + l] + beta * est[j * kLanes + l];
          }
          const FilterRun fr = kb_filter(ex.model, fwd_path, y, Vec::Zero(1));
          const BackwardInfo bi = backward_filter(ex.model, bwd_path, y);
          const SmoothRun sr = two_filter_combine(fr, bi);
          for (std::size_t j = 0; j < samples; ++j) smooth[j * kLanes + l] = sr.estimates[j](0);
        }
      }
      for (std::size_t i = 0; i < samples * kLanes; ++i) {
        serr[i] = beta * state[i] - beta * smooth[i];
      }
      simd::ErrorAccumulation sacc;
      sacc.err = serr.data();
      sacc.samples = sw1;
      sacc.window_begin = sw0;
      sacc.window_end = sw1;
      sacc.sum2 = out.smoothed.sum2.data();
      sacc.sum4 = out.smoothed.sum4.data();
      sacc.window_sums = smooth_window.data() + base;
      kern.accumulate_errors(sacc);
    }
  };
  parallel_for(chunks, run_chunk);

  finish_trajectory(partial, false, trials, res.mse, res.stderr_mse);
  window.resize(trials);
  tail_statistics(window, w1 - w0, res.steady_state_mse, res.steady_state_stderr);
  for (std::size_t t = 0; t < trials; ++t) res.slips += slip_counts[t];
  res.slip_rate = static_cast<double>(res.slips) / (static_cast<double>(trials) * duration);

  if (smoothing) {
    finish_trajectory(partial, true, trials, res.smoothed_mse, res.smoothed_stderr);
    // Samples past the smoothing window carry no smoothed estimate.
    for (std::size_t j = sw1; j < samples; ++j) {
      res.smoothed_mse[j] = std::numeric_limits<double>::quiet_NaN();
      res.smoothed_stderr[j] = std::numeric_limits<double>::quiet_NaN();
    }
    smooth_window.resize(trials);
    tail_statistics(smooth_window, sw1 - sw0, res.smoothed_steady_state_mse,
                    res.smoothed_steady_state_stderr);
  }
  return res;
}

}  // namespace phaselock
