#pragma once

#include <functional>

namespace phaselock {

struct QuadratureOptions {
  double abs_tol = 1e-8;
  int max_depth = 50;
};

/// Adaptive Simpson on a finite interval. Throws PrecisionError when a
/// subinterval reaches max_depth without meeting its share of the tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const QuadratureOptions& opts = {});

/// Integral over the real line of an even integrand decaying at least like
/// 1/w^2. Uses w = scale * tan(u), u = v^2 on (0, pi/2); the v^2 step removes
/// integrable log singularities at w = 0.
double integrate_even_real_line(const std::function<double(double)>& f, double scale,
                                const QuadratureOptions& opts = {});

}  // namespace phaselock
