// Acceptance gate: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "phaselock/cli/experiment.hpp"
#include "phaselock/kalman_bucy.hpp"
#include "phaselock/oscillator.hpp"
#include "phaselock/pll.hpp"
#include "phaselock/smoothers.hpp"
#include "phaselock/spectral.hpp"

using namespace phaselock;
using namespace phaselock::cli;
using Clock = std::chrono::steady_clock;
using cd = std::complex<double>;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const std::vector<Cell>* find_row(const ResultTable& t, const std::string& q) {
  for (const auto& row : t.rows) {
    if (std::get<std::string>(row[0]) == q) return &row;
  }
  return nullptr;
}

// Requires the named summary row to exist and carry PASS; notes its values.
void require_row(Verdict& v, const ResultTable& t, const std::string& q) {
  const auto* row = find_row(t, q);
  if (row == nullptr) {
    v.require(false, q + " missing");
    return;
  }
  const bool pass = std::get<std::string>(row->back()) == "PASS";
  std::string text = q + "=" + fmt("%.6g", std::get<double>((*row)[2]));
  if (std::holds_alternative<double>((*row)[3])) text += fmt("+-%.2g", std::get<double>((*row)[3]));
  if (std::holds_alternative<double>((*row)[1])) text += fmt(" (target %.6g)", std::get<double>((*row)[1]));
  v.note(text);
  v.require(pass, q);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Mat scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return m;
}

// Scalar Riccati s' = 2 a s + q - c s^2 through its two roots.
double riccati_oracle(double a, double q, double c, double s0, double t) {
  const double disc = std::sqrt(a * a + c * q);
  const double sp = (a + disc) / c;
  const double sm = (a - disc) / c;
  const double r = (s0 - sp) / (s0 - sm) * std::exp(-2.0 * disc * t);
  return (sp - sm * r) / (1.0 - r);
}

const char* kOuBase = "k = 1\nkappa = 1\nbeta = 1\nLambda = 8\n";

Verdict criterion1() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto cfg = parse_config(std::string("experiment = ou-filter\n") + kOuBase +
                                "trials = 1000\nmaster_seed = 1001\n");
  const TimeGrid g = resolve_grid(cfg);
  v.require(std::abs(g.dt - 1.0 / 600.0) < 1e-15 && std::abs(g.duration() - 40.0 / 3.0) < 1e-12,
            "default grid dt = 1/(200 gamma), 40/gamma");
  const ExperimentOutput out = run_experiment(cfg);
  require_row(v, out.summary, "sigma_ss_riccati");
  require_row(v, out.summary, "mc_tail_mse");
  const double secs = seconds_since(t0);
  v.note(fmt("%.1f s", secs));
  v.require(secs < 60.0, "runtime < 60 s");
  return v;
}

Verdict criterion2() {
  Verdict v;
  const LinearModel m = ou_model_from_lambda(1.0, 1.0, 8.0);
  const OuClosedForm cf = OuClosedForm::from(1.0, 1.0, 8.0);
  v.require(std::abs(cf.mu(0.0) - 2.0) < 1e-12 && std::abs(cf.gamma - 3.0) < 1e-12, "mu = 2, gamma = 3");
  TimeGrid g;
  g.dt = 1e-4 / 3.0;
  g.steps = 100000;
  const auto path = integrate_riccati(m, g, scalar(0.0));
  double worst = 0.0;
  double worst_cf = 0.0;
  for (std::size_t j = 1; j < g.samples(); ++j) {
    const double exact = riccati_oracle(-1.0, 1.0, 8.0, 0.0, g.time(j));
    worst = std::max(worst, std::abs(path->values[j](0, 0) - exact) / exact);
    worst_cf = std::max(worst_cf, std::abs(ou_variance_closed_form(cf, 0.0, g.time(j)) - exact) / exact);
  }
  v.note(fmt("max rel err Riccati %.2g, closed form %.2g", worst, worst_cf));
  v.require(worst < 1e-6, "Riccati vs closed form < 1e-6");
  v.require(worst_cf < 1e-12, "closed form vs root oracle");
  TimeGrid spot;
  spot.steps = 1000;
  spot.dt = std::log(2.0) / 6.0 / 1000.0;
  const double s = integrate_riccati(m, spot, scalar(0.0))->values.back()(0, 0);
  v.note(fmt("Sigma(ln2/6) = %.12g", s));
  v.require(std::abs(s - 0.1) / 0.1 < 1e-6, "spot value 0.1");
  return v;
}

Verdict criterion3() {
  Verdict v;
  for (double n : {1.0, 100.0, 1e4}) {
    const LinearModel m = wiener_process_model(1.0, n);
    const double sigma = steady_state_covariance(m)(0, 0);
    const double pi = smoothing_steady_state_covariance(m)(0, 0);
    v.require(std::abs(sigma - 1.0 / (2.0 * std::sqrt(n))) < 1e-9 / std::sqrt(n), "Sigma_ss = 1/(2 sqrt N)");
    v.require(std::abs(pi - 1.0 / (4.0 * std::sqrt(n))) < 1e-9 / std::sqrt(n), "Pi_ss = 1/(4 sqrt N)");
  }
  const auto cfg = parse_config(
      "experiment = wiener-process\nkappa = 1\nN = 100\nbeta = 1\ntrials = 1000\nmaster_seed = 3003\n");
  const ExperimentOutput out = run_experiment(cfg);
  require_row(v, out.summary, "sigma_over_pi");
  require_row(v, out.summary, "mc_tail_mse");
  require_row(v, out.summary, "mc_smoothed_mse");
  return v;
}

Verdict criterion4() {
  Verdict v;
  const auto cfg = parse_config(std::string("experiment = ou-smooth\n") + kOuBase +
                                "trials = 1000\nmaster_seed = 4004\n");
  const ExperimentOutput out = run_experiment(cfg);
  v.require(std::abs(1.0 / (2.0 * std::sqrt(9.0)) - 1.0 / 6.0) < 1e-15, "closed form 1/6");
  require_row(v, out.summary, "sigma_ss");
  require_row(v, out.summary, "xi_ss");
  require_row(v, out.summary, "pi_ss_bryson_frazier");
  require_row(v, out.summary, "pi_ss_two_filter");
  require_row(v, out.summary, "pi_ss_quadrature");
  require_row(v, out.summary, "mc_smoothed_mse");
  return v;
}

Verdict criterion5() {
  Verdict v;
  const double z = 0.125;
  const LorentzianSpectrum sx{1.0, 1.0, 0.0};
  const auto sy = observation_spectrum(sx, 1.0, z);
  const auto hp = spectral_factorize(sy);
  const auto h = wiener_filter(cross_spectrum(sx, 1.0), hp);
  const auto l = loop_filter(h, 1.0);
  const cd i(0.0, 1.0);
  double form = 0.0;
  double factor = 0.0;
  double loop = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const double w = 1e-3 * std::pow(1e6, n / 999.0);
    form = std::max({form, std::abs(hp(w) - std::sqrt(z) * (i * w + 3.0) / (i * w + 1.0)),
                     std::abs(h(w) - 2.0 / (i * w + 3.0)), std::abs(l(w) - 2.0 / (i * w + 1.0))});
    factor = std::max(factor, std::abs(std::norm(hp(w)) - sy(w)) / sy(w));
    loop = std::max(loop, std::abs(h(w) - l(w) / (1.0 + l(w))) / std::abs(h(w)));
  }
  v.note(fmt("forms %.2g, |H+|^2 %.2g, loop %.2g", form, factor, loop));
  v.require(form < 1e-12, "transfer forms");
  v.require(factor < 1e-10, "|H+|^2 = S_y");
  v.require(loop < 1e-10, "H = L/(1+L)");
  const double mse = filtering_mse(sx, 1.0, z);
  v.note(fmt("MSE quadrature %.10g", mse));
  v.require(std::abs(mse - 0.25) < 1e-4 * 0.25, "MSE quadrature 0.25");
  const auto cfg = parse_config(std::string("experiment = wiener-filter-freq\n") + kOuBase);
  v.require(run_experiment(cfg).all_pass, "wiener-filter-freq experiment");
  return v;
}

Verdict criterion6() {
  Verdict v;
  const LorentzianSpectrum sx{1.0, 1.0, 0.0};
  const auto sy = observation_spectrum(sx, 1.0, 0.125);
  const auto sxy = cross_spectrum(sx, 1.0);
  const auto h = wiener_filter(sxy, spectral_factorize(sy));
  const PostLoopFilter f = post_loop_filter(unrealizable_filter(sxy, sy), h);
  const cd i(0.0, 1.0);
  double err = 0.0;
  for (double w : {0.0, 0.1, 1.0, 3.0, 10.0, 1000.0}) {
    err = std::max(err, std::abs(f.transfer(w) - 4.0 / (-i * w + 3.0)));
  }
  for (double t : {-2.0, -0.5, -0.01}) err = std::max(err, std::abs(f.impulse(t) - 4.0 * std::exp(3.0 * t)));
  v.require(err < 1e-12 && f.impulse(0.5) == 0.0, "F and f(t)");
  v.require(std::abs(f.suggested_delay - 10.0 / 3.0) < 1e-12, "t_d = 10/gamma");
  const auto cfg = parse_config(std::string("experiment = pll\n") + kOuBase +
                                "estimator = wiener\nsmoothing = post_loop\ntrials = 1000\n"
                                "master_seed = 6006\n");
  const ExperimentOutput out = run_experiment(cfg);
  require_row(v, out.summary, "mc_smoothed_mse");
  return v;
}

Verdict criterion7() {
  Verdict v;
  OscParams p;
  const Mat s = oscillator_filter_steady_state(p);
  v.note(fmt("Sigma11 %.6f Sigma12 %.6f Sigma22 %.6f", s(0, 0), s(0, 1), s(1, 1)));
  v.require(std::abs(s(0, 0) - 0.455090) < 5e-7, "Sigma11");
  v.require(std::abs(s(0, 1) - 0.207107) < 5e-7, "Sigma12");
  v.require(std::abs(s(1, 1) - 0.643594) < 5e-7, "Sigma22");
  const auto t0 = Clock::now();
  for (double q : {0.1, 1.0, 10.0}) {
    p.q = q;
    const Mat cf = oscillator_filter_steady_state(p);
    v.require(std::abs(cf.determinant() - 0.25) < 1e-9, fmt("det at Q=%g", q));
    // integrate the Riccati equation from the ground state for 60 relaxation times
    const LinearModel m = oscillator_model(p);
    TimeGrid g;
    const double tf = oscillator_relaxation_time(p);
    g.dt = std::min(tf, 1.0) / 1000.0;
    g.steps = static_cast<std::size_t>(std::ceil(60.0 * tf / g.dt));
    Mat ground(2, 2);
    ground << 0.5, 0.0, 0.0, 0.5;
    const Mat end = integrate_riccati(m, g, ground)->values.back();
    double rel = 0.0;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) rel = std::max(rel, std::abs(end(a, b) - cf(a, b)) / std::abs(cf(a, b)));
    }
    v.require(rel < 1e-6, fmt("Riccati convergence at Q=%g", q));
  }
  const double secs = seconds_since(t0);
  v.note(fmt("Riccati %.2f s", secs));
  v.require(secs < 10.0, "Riccati < 10 s");
  return v;
}

Verdict criterion8() {
  Verdict v;
  OscParams p;
  double worst = 0.0;
  bool bounds = true;
  for (int n = 0; n < 20; ++n) {
    p.q = std::pow(10.0, -2.0 + 4.0 * n / 19.0);
    const Mat pi = oscillator_smoothing_steady_state(p);
    const double product = pi(0, 0) * pi(1, 1);
    const double formula = (1.0 / 32.0) * (1.0 + 1.0 / std::sqrt(1.0 + p.q * p.q));
    worst = std::max(worst, std::abs(product - formula));
    v.require(pi(0, 1) == 0.0, "Pi12 = 0");
    bounds = bounds && product > 1.0 / 32.0 && product <= 1.0 / 16.0;
  }
  v.note(fmt("max |product - formula| %.2g", worst));
  v.require(worst < 1e-9, "product formula");
  v.require(bounds, "hbar^2/32 < product <= hbar^2/16");
  p.q = 1.0;
  const double at1 = oscillator_uncertainty_product(p);
  v.note(fmt("product(Q=1) = %.8f", at1));
  // the quoted 0.0533447 agrees to five significant figures
  v.require(std::abs(at1 - 0.0533447) / 0.0533447 < 1e-4, "Q=1 product");
  return v;
}

Verdict criterion9() {
  Verdict v;
  auto compare = [&](const LinearModel& m, const Mat& prior, double dt, std::size_t steps,
                     const char* label) {
    TimeGrid g;
    g.dt = dt;
    g.steps = steps;
    const Trajectory t = simulate(m, g, Vec::Zero(m.dim()), 909);
    const FilterRun fr = kb_filter(m, g, t.observations, Vec::Zero(m.dim()), prior);
    const SmoothRun bf = bryson_frazier_smooth(m, fr);
    const SmoothRun tf = two_filter_combine(fr, backward_filter(m, g, t.observations));
    double dx = 0.0;
    double dp = 0.0;
    for (std::size_t j = 0; j < g.samples(); ++j) {
      dx = std::max(dx, (bf.estimates[j] - tf.estimates[j]).cwiseAbs().maxCoeff());
      dp = std::max(dp, (bf.covariances[j] - tf.covariances[j]).cwiseAbs().maxCoeff());
    }
    v.note(std::string(label) + fmt(" dx %.2g dPi %.2g", dx, dp));
    v.require(dx < 1e-6 && dp < 1e-6, label);
  };
  compare(ou_model_from_lambda(1.0, 1.0, 8.0), scalar(0.5), 1.0 / 600.0, 8000, "OU");
  Mat ground(2, 2);
  ground << 0.5, 0.0, 0.0, 0.5;
  OscParams p;
  compare(oscillator_model(p), ground, oscillator_relaxation_time(p) / 200.0, 5000, "oscillator");
  return v;
}

Verdict criterion10() {
  Verdict v;
  const auto locked = parse_config(
      "experiment = pll\nkappa = 1\nN = 100\nbeta = 1\nmode = nonlinear\ntrials = 1000\n"
      "master_seed = 1010\n");
  require_row(v, run_experiment(locked).summary, "mse_ratio_vs_linearized");
  // 4N = 2 over 200 loop times so that slips have room to occur
  const auto unlocked = parse_config(
      "experiment = pll\nkappa = 1\nN = 0.5\nbeta = 1\nmode = nonlinear\ntrials = 1000\n"
      "master_seed = 1011\nduration_gamma = 200\n");
  const ExperimentOutput out = run_experiment(unlocked);
  require_row(v, out.summary, "mse_ratio_vs_linearized");
  const auto* rate = find_row(out.summary, "slip_rate");
  const auto* mse = find_row(out.summary, "mc_tail_mse");
  const auto* margin = find_row(out.summary, "threshold_margin");
  v.require(rate && std::get<double>((*rate)[2]) > 0.0, "slip rate > 0");
  v.require(mse && margin && std::get<double>((*mse)[2]) > std::get<double>((*margin)[2]),
            "MSE above the linearized prediction");
  return v;
}

Verdict criterion11() {
  Verdict v;
  const std::vector<std::string> configs = {
      std::string("experiment = ou-filter\n") + kOuBase +
          "trials = 64\nmaster_seed = 11\nmode = nonlinear\ndump_run = true\n",
      "experiment = wiener-process\nkappa = 1\nN = 100\nbeta = 1\ntrials = 64\nmaster_seed = 12\n",
      "experiment = oscillator\nQ = 1\nmass = 1\nmech_freq = 1\nhbar = 1\ntrials = 16\nmaster_seed = 13\n"};
  for (const auto& text : configs) {
    const auto cfg = parse_config(text);
    const ExperimentOutput a = run_experiment(cfg);
    const ExperimentOutput b = run_experiment(cfg);
    bool same = to_csv(a.summary) == to_csv(b.summary);
    same = same && a.trace.has_value() == b.trace.has_value() && (!a.trace || to_csv(*a.trace) == to_csv(*b.trace));
    same = same && (!a.run_dump || to_csv(*a.run_dump) == to_csv(*b.run_dump));
    v.require(same, a.name + " rerun identical");
    v.require(config_from_metadata(to_csv(a.summary)) == cfg, a.name + " config echo");
  }
  if (v.ok) v.note("3 experiments byte-identical");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"OU filtering steady state", criterion1},
      {"OU transient", criterion2},
      {"Wiener-process filtering and smoothing", criterion3},
      {"OU smoothing three ways", criterion4},
      {"Wiener-filter synthesis", criterion5},
      {"post-loop smoother", criterion6},
      {"oscillator filter", criterion7},
      {"oscillator smoothing", criterion8},
      {"smoother equivalence", criterion9},
      {"threshold behavior", criterion10},
      {"determinism", criterion11},
  };
  int failures = 0;
  for (std::size_t n = 0; n < criteria.size(); ++n) {
    Verdict v;
    try {
      v = criteria[n].second();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failures += v.ok ? 0 : 1;
    std::printf("%s %zu %s: %s\n", v.ok ? "PASS" : "FAIL", n + 1, criteria[n].first, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
