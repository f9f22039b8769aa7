#include "phaselock/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "phaselock/errors.hpp"
#include "phaselock/stochastic_core.hpp"

namespace phaselock {

namespace {

struct Simpson {
  const std::function<double(double)>& f;
  int max_depth;

  double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol,
                 int depth) const {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth >= max_depth || !std::isfinite(delta)) {
      throw PrecisionError("adaptive_simpson: tolerance not reached");
    }
    return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }
};

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const QuadratureOptions& opts) {
  if (!(b > a)) throw std::invalid_argument("adaptive_simpson: empty interval");
  const Simpson s{f, opts.max_depth};
  // Start from a few panels so that narrow features are not missed.
  constexpr int kPanels = 16;
  const double width = (b - a) / kPanels;
  double total = 0.0;
  double fa = f(a);
  for (int i = 0; i < kPanels; ++i) {
    const double lo = a + i * width;
    const double hi = i + 1 == kPanels ? b : lo + width;
    const double fm = f(0.5 * (lo + hi));
    const double fb = f(hi);
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    total += s.recurse(lo, hi, fa, fm, fb, whole, opts.abs_tol / kPanels, 0);
    fa = fb;
  }
  return total;
}

double integrate_even_real_line(const std::function<double(double)>& f, double scale,
                                const QuadratureOptions& opts) {
  if (!(scale > 0.0)) throw std::invalid_argument("integrate_even_real_line: scale must be > 0");
  const double half_pi = 0.5 * kPi;
  auto mapped = [&](double v) -> double {
    if (v == 0.0) return 0.0;
    const double u = std::min(v * v, half_pi);
    const double t = std::tan(u);
    const double sec2 = 1.0 + t * t;
    return f(scale * t) * scale * sec2 * 2.0 * v;
  };
  // Factor 2 for the even integrand on the full line.
  return 2.0 * adaptive_simpson(mapped, 0.0, std::sqrt(half_pi), {opts.abs_tol / 2.0, opts.max_depth});
}

}  // namespace phaselock
