#pragma once

// Independent reference computations used only by the tests. None of these
// route through the library's quadrature or closed forms.

#include "liouville/exact_families.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracles {

using liouville::Vec2;

inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

// Polar tensor rule over B_R: geometric radial panels from rmin to R (16-point
// Gauss-Legendre each, plus one panel on [0, rmin]) and a uniform angular trapezoid.
inline double polar_gauss(const std::function<double(Vec2)>& f, double R, double rmin, int panels, int ntheta,
                          double rstart = 0.0) {
    std::vector<double> gx, gw;
    gauss_legendre(16, gx, gw);
    std::vector<double> edges{rstart};
    const double lo = std::max(rmin, rstart);
    const double ratio = std::pow(R / lo, 1.0 / panels);
    for (int p = 0; p <= panels; ++p) {
        const double e = lo * std::pow(ratio, p);
        if (e > edges.back()) edges.push_back(std::min(e, R));
    }
    edges.back() = R;
    double total = 0.0;
    const double dt = 2.0 * M_PI / ntheta;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double a = edges[p], b = edges[p + 1];
        for (int q = 0; q < 16; ++q) {
            const double r = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
            double ring = 0.0;
            for (int t = 0; t < ntheta; ++t) ring += f({r * std::cos(t * dt), r * std::sin(t * dt)});
            total += 0.5 * (b - a) * gw[q] * r * ring * dt;
        }
    }
    return total;
}

inline std::complex<double> horner(const std::vector<std::complex<double>>& c, std::complex<double> z) {
    std::complex<double> acc{};
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
    return acc;
}

// 8 lambda^2 |F'|^2 / (1 + lambda^2 |F - c|^2)^2 straight from the coefficients and the pole product.
inline double developing_density(const liouville::DevelopingMap& m, Vec2 x) {
    const std::complex<double> z{x.x, x.y};
    std::complex<double> fp{1.0, 0.0};
    const auto& poles = m.poles.poles();
    for (std::size_t j = 0; j < poles.size(); ++j)
        for (int a = 0; a < m.poles.multiplicities()[j]; ++a) fp *= z - std::complex<double>{poles[j].x, poles[j].y};
    const auto F = horner(m.primitive.coefficients(), z) - m.shift;
    const double lam = m.amplitude;
    const double den = 1.0 + lam * lam * std::norm(F);
    return 8.0 * lam * lam * std::norm(fp) / (den * den);
}

// (1/2 pi) int_{B_R} ln(1/|x-y|) rho(y) dy for |x| = R, in polar coordinates centred at x:
// the direction theta' in (0, pi) from the inward normal sweeps the chord of length 2R sin theta'.
inline double boundary_log_potential(const std::function<double(Vec2)>& rho, Vec2 x, int panels, int radial_panels) {
    std::vector<double> gx, gw;
    gauss_legendre(16, gx, gw);
    const double R = x.norm();
    const double phi = std::atan2(x.y, x.x);
    double total = 0.0;
    for (int pt = 0; pt < panels; ++pt) {
        const double a = M_PI * pt / panels, b = M_PI * (pt + 1) / panels;
        for (int qt = 0; qt < 16; ++qt) {
            const double t = 0.5 * (a + b) + 0.5 * (b - a) * gx[qt];
            const double dir = phi + M_PI / 2.0 + t;
            const Vec2 e{std::cos(dir), std::sin(dir)};
            const double smax = 2.0 * R * std::sin(t);
            // radial panels graded toward s = 0 where s ln s loses smoothness
            double inner = 0.0;
            double lo = 0.0;
            for (int ps = 0; ps < radial_panels; ++ps) {
                const double hi = smax * std::pow(2.0, ps - radial_panels + 1);
                for (int qs = 0; qs < 16; ++qs) {
                    const double s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gx[qs];
                    inner += 0.5 * (hi - lo) * gw[qs] * std::log(1.0 / s) * rho(x + e * s) * s;
                }
                lo = hi;
            }
            total += 0.5 * (b - a) * gw[qt] * inner;
        }
    }
    return total / (2.0 * M_PI);
}

} // namespace oracles
