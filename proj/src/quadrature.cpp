#include "liouville/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace liouville {

namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;

std::vector<double> angular_breakpoints(double rho, const std::vector<HotSpot>& hotspots) {
    std::vector<double> cuts;
    for (const auto& hs : hotspots) {
        const double a = hs.center.norm();
        if (a == 0.0 || rho == 0.0) continue;
        const double width = std::max(hs.scale, std::abs(rho - a)) / rho;
        if (width >= pi) continue;
        const double phi = std::atan2(hs.center.y, hs.center.x);
        for (double w = width; w < pi; w *= 4.0) {
            for (double c : {phi - w, phi + w}) {
                double t = std::fmod(c, 2.0 * pi);
                if (t < 0.0) t += 2.0 * pi;
                cuts.push_back(t);
            }
        }
        double t = std::fmod(phi, 2.0 * pi);
        if (t < 0.0) t += 2.0 * pi;
        cuts.push_back(t);
    }
    return cuts;
}

// Points are held in global coordinates, so next to a hot spot at distance |c| from the
// origin the integrand carries relative noise ~ eps |c| / scale. Asking for less than
// that only drives the adaptive rule to its depth limit.
double noise_floor(const std::vector<HotSpot>& hotspots) {
    double worst = 0.0;
    for (const auto& hs : hotspots)
        if (hs.scale > 0.0) worst = std::max(worst, hs.center.norm() / hs.scale);
    return 64.0 * std::numeric_limits<double>::epsilon() * worst;
}

} // namespace

void graded_breakpoints(double at, double scale, double lo, double hi, std::vector<double>& out) {
    if (!(scale > 0.0)) return;
    if (at > lo && at < hi) out.push_back(at);
    for (double w = scale; w < (hi - lo) * 2.0; w *= 4.0) {
        if (at - w > lo && at - w < hi) out.push_back(at - w);
        if (at + w > lo && at + w < hi) out.push_back(at + w);
    }
}

QuadratureResult integrate_segments(const std::function<double(double)>& f, double a, double b,
                                    std::vector<double> breakpoints, const QuadratureTolerance& tol) {
    QuadratureResult out;
    if (!(b > a)) return out;
    breakpoints.push_back(a);
    breakpoints.push_back(b);
    std::sort(breakpoints.begin(), breakpoints.end());
    double prev = a;
    for (double c : breakpoints) {
        if (c <= prev || c > b) continue;
        if (c - prev <= 1e-15 * std::max(1.0, std::abs(c))) continue;
        // Boost compares an unscaled local error against a scaled tolerance, so
        // short segments never terminate; integrate on a unit-width parameter instead.
        const double lo = prev, len = c - prev;
        auto g = [&](double t) { return len * f(lo + len * t); };
        double err = 0.0;
        out.value += Rule::integrate(g, 0.0, 1.0, tol.max_depth, tol.relative, &err);
        out.error += err;
        prev = c;
    }
    return out;
}

QuadratureResult integrate_circle(const std::function<double(Vec2)>& f, double rho,
                                  const std::vector<HotSpot>& hotspots, const QuadratureTolerance& tol) {
    auto g = [&](double t) { return f({rho * std::cos(t), rho * std::sin(t)}); };
    QuadratureTolerance t = tol;
    t.relative = std::max(t.relative, noise_floor(hotspots));
    return integrate_segments(g, 0.0, 2.0 * pi, angular_breakpoints(rho, hotspots), t);
}

QuadratureResult integrate_annulus(const std::function<double(Vec2)>& f, double rho_in, double rho_out,
                                   const std::vector<HotSpot>& hotspots, const QuadratureTolerance& tol) {
    std::vector<double> cuts;
    for (const auto& hs : hotspots) graded_breakpoints(hs.center.norm(), hs.scale, rho_in, rho_out, cuts);
    double inner_error = 0.0;
    // the angular integrals must be resolved well below the radial tolerance,
    // otherwise the radial refinement chases their noise
    const double floor = noise_floor(hotspots);
    QuadratureTolerance outer_tol = tol, inner_tol = tol;
    outer_tol.relative = std::max(tol.relative, 10.0 * floor);
    inner_tol.relative = std::max({tol.relative * 1e-3, floor, 1e-15});
    auto radial = [&](double rho) {
        if (rho == 0.0) return 0.0;
        const auto r = integrate_circle(f, rho, hotspots, inner_tol);
        inner_error = std::max(inner_error, r.error * rho);
        return rho * r.value;
    };
    auto res = integrate_segments(radial, rho_in, rho_out, cuts, outer_tol);
    res.error += inner_error * (rho_out - rho_in);
    return res;
}

} // namespace liouville
