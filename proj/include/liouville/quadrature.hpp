#pragma once

#include "liouville/geometry.hpp"

#include <functional>
#include <vector>

namespace liouville {

/// A point where an integrand varies on a length scale much shorter than the
/// domain (bubble center, pole). Polar quadrature grades its breakpoints there.
struct HotSpot {
    Vec2 center;
    double scale;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;  // sum of the local error estimates
};

struct QuadratureTolerance {
    double relative = 1e-10;
    unsigned max_depth = 12;
};

/// Adaptive Gauss-Kronrod on [a, b] with interior breakpoints (need not be sorted).
QuadratureResult integrate_segments(const std::function<double(double)>& f, double a, double b,
                                    std::vector<double> breakpoints, const QuadratureTolerance& tol);

/// Integral over the annulus rho_in <= |x| <= rho_out of f(x) dx in polar coordinates.
/// Radial and angular breakpoints are graded geometrically around every hot spot.
QuadratureResult integrate_annulus(const std::function<double(Vec2)>& f, double rho_in, double rho_out,
                                   const std::vector<HotSpot>& hotspots, const QuadratureTolerance& tol = {});

inline QuadratureResult integrate_disk(const std::function<double(Vec2)>& f, double rho,
                                       const std::vector<HotSpot>& hotspots, const QuadratureTolerance& tol = {}) {
    return integrate_annulus(f, 0.0, rho, hotspots, tol);
}

/// Integral over the circle |x| = rho of f(x) d(theta) (no rho Jacobian).
QuadratureResult integrate_circle(const std::function<double(Vec2)>& f, double rho,
                                  const std::vector<HotSpot>& hotspots, const QuadratureTolerance& tol = {});

/// Breakpoints in [lo, hi] graded around `at` with smallest gap `scale`, ratio 4.
void graded_breakpoints(double at, double scale, double lo, double hi, std::vector<double>& out);

} // namespace liouville
