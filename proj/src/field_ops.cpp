#include "liouville/field_ops.hpp"
#include "liouville/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace liouville {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr int circle_base_samples = 256;

// Fourth-order centered differences along each axis when both arms reach two nodes;
// the second-order node gradient otherwise.
Vec2 energy_gradient(const ScalarField& f, std::size_t idx) {
    const auto& g = f.grid();
    const Vec2 low = f.node_gradient(idx);
    auto axis = [&](Direction plus, Direction minus, double fallback) {
        if (g.arm_cut(idx, plus) || g.arm_cut(idx, minus)) return fallback;
        const std::size_t p1 = g.neighbor(idx, plus), m1 = g.neighbor(idx, minus);
        if (g.arm_cut(p1, plus) || g.arm_cut(m1, minus)) return fallback;
        const std::size_t p2 = g.neighbor(p1, plus), m2 = g.neighbor(m1, minus);
        return (8.0 * (f[p1] - f[m1]) - (f[p2] - f[m2])) / (12.0 * g.spacing());
    };
    return {axis(East, West, low.x), axis(North, South, low.y)};
}

double laplacian_at(const ScalarField& f, std::size_t idx) {
    const auto& g = f.grid();
    const double h = g.spacing();
    const double u0 = f[idx];
    if (g.kind(idx) == NodeKind::Interior) {
        return (f[g.neighbor(idx, East)] + f[g.neighbor(idx, West)] + f[g.neighbor(idx, North)] +
                f[g.neighbor(idx, South)] - 4.0 * u0) /
               (h * h);
    }
    auto second = [&](Direction plus, Direction minus) {
        const double a = g.arm(idx, plus);
        const double b = g.arm(idx, minus);
        const double up = f.arm_value(idx, plus);
        const double um = f.arm_value(idx, minus);
        return 2.0 / (h * h) * ((up - u0) / (a * (a + b)) + (um - u0) / (b * (a + b)));
    };
    return second(East, West) + second(North, South);
}

double weighted_exp(const WeightSpec& w, Vec2 x, double fx) {
    if (fx == -std::numeric_limits<double>::infinity()) return 0.0;
    return std::exp(w.log_value(x) + fx);
}

void check_radius(const DiskGrid& g, double rho, const char* what) {
    if (!(rho >= 0.0)) throw DomainError(std::string(what) + ": radius must be nonnegative");
    if (rho > g.radius() * (1.0 + 1e-12))
        throw DomainError(std::string(what) + ": radius " + std::to_string(rho) + " exceeds grid radius " +
                          std::to_string(g.radius()));
}

} // namespace

ScalarField laplacian(const ScalarField& f) {
    const auto& g = f.grid();
    std::vector<double> out(g.size(), nan);
    for (auto idx : g.inside_nodes()) out[idx] = laplacian_at(f, idx);
    return ScalarField(f.grid_ptr(), std::move(out));
}

std::vector<double> pde_residual(const ScalarField& f, const WeightSpec& w) {
    const auto& g = f.grid();
    std::vector<double> out(g.size(), nan);
    for (auto idx : g.inside_nodes()) out[idx] = laplacian_at(f, idx) + weighted_exp(w, g.point(idx), f[idx]);
    return out;
}

double max_norm(const DiskGrid& grid, const std::vector<double>& v, bool include_boundary_adjacent) {
    double m = 0.0;
    for (auto idx : grid.inside_nodes()) {
        if (!include_boundary_adjacent && grid.kind(idx) != NodeKind::Interior) continue;
        m = std::max(m, std::abs(v[idx]));
    }
    return m;
}

std::vector<double> node_area_weights(const DiskGrid& grid, double rho) {
    std::vector<double> wts(grid.size(), 0.0);
    const double reach = rho + grid.spacing();
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const Vec2 p = grid.point(idx);
        if (std::abs(p.x) > reach || std::abs(p.y) > reach) continue;
        wts[idx] = grid.cell_area_in_disk(idx, rho);
    }
    return wts;
}

std::vector<HotSpot> combined_hotspots(const ScalarField& f, const WeightSpec& w) {
    auto spots = f.hotspots();
    const auto& poles = w.poles().poles();
    for (std::size_t j = 0; j < poles.size(); ++j) {
        double sep = poles[j].norm();
        for (std::size_t l = 0; l < poles.size(); ++l)
            if (l != j) sep = std::min(sep, (poles[j] - poles[l]).norm());
        spots.push_back({poles[j], std::max(0.25 * sep, 1e-14)});
    }
    return spots;
}

double dirichlet_energy(const ScalarField& f, double rho, const QuadratureTolerance& tol) {
    const auto& g = f.grid();
    check_radius(g, rho, "dirichlet_energy");
    if (f.has_closed_form() && f.closed_form().gradient) {
        const auto& grad = f.closed_form().gradient;
        return integrate_disk([&](Vec2 x) { return grad(x).norm2(); }, rho, f.hotspots(), tol).value;
    }
    const auto wts = node_area_weights(g, rho);
    double sum = 0.0;
    const double h = g.spacing();
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        if (wts[idx] == 0.0) continue;
        std::size_t src = idx;
        if (!g.inside(idx)) {
            const Vec2 q = g.point(idx);
            src = g.nearest(q * std::max(0.0, 1.0 - 1.5 * h / q.norm()));
            if (!g.inside(src)) continue;
        }
        sum += wts[idx] * energy_gradient(f, src).norm2();
    }
    return sum;
}

QuadratureResult weighted_mass_annulus(const ScalarField& f, const WeightSpec& w, double delta_in,
                                       double delta_out, const QuadratureTolerance& tol) {
    const auto& g = f.grid();
    check_radius(g, delta_out, "weighted_mass");
    if (!(delta_in >= 0.0 && delta_in <= delta_out)) throw DomainError("weighted_mass: need 0 <= inner <= outer");
    if (f.has_closed_form()) {
        const auto& v = f.closed_form().value;
        return integrate_annulus([&](Vec2 x) { return weighted_exp(w, x, v(x)); }, delta_in, delta_out,
                                 combined_hotspots(f, w), tol);
    }
    const auto outer = node_area_weights(g, delta_out);
    const auto inner = delta_in > 0.0 ? node_area_weights(g, delta_in) : std::vector<double>(g.size(), 0.0);
    QuadratureResult r;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const double a = outer[idx] - inner[idx];
        if (a <= 0.0) continue;
        r.value += a * weighted_exp(w, g.point(idx), f.extended_value(idx));
    }
    return r;
}

QuadratureResult weighted_mass(const ScalarField& f, const WeightSpec& w, double delta, const QuadratureTolerance& tol) {
    return weighted_mass_annulus(f, w, 0.0, delta, tol);
}

std::vector<double> circle_samples(const ScalarField& f, double rho, int count) {
    const auto& g = f.grid();
    check_radius(g, rho, "circle_samples");
    std::vector<double> out(count);
    const bool on_boundary = std::abs(rho - g.radius()) <= 1e-12 * g.radius();
    for (int k = 0; k < count; ++k) {
        const double t = 2.0 * pi * k / count;
        const Vec2 x{rho * std::cos(t), rho * std::sin(t)};
        out[k] = on_boundary ? f.boundary_value(x) : f.value_at(x);
    }
    return out;
}

QuadratureResult pohozaev_boundary_functional(const ScalarField& f, const WeightSpec& w, double rho,
                                              const QuadratureTolerance& tol) {
    const auto& g = f.grid();
    check_radius(g, rho, "pohozaev_boundary_functional");
    if (!(rho > 0.0)) throw DomainError("pohozaev_boundary_functional: radius must be positive");
    if (f.has_closed_form() && f.closed_form().gradient) {
        const auto& cf = f.closed_form();
        auto integrand = [&](Vec2 x) {
            const Vec2 grad = cf.gradient(x);
            const double dn = dot(grad, x) / rho;
            return dn * dn - 0.5 * grad.norm2() + weighted_exp(w, x, cf.value(x));
        };
        auto r = integrate_circle(integrand, rho, combined_hotspots(f, w), tol);
        r.value *= rho * rho;
        r.error *= rho * rho;
        return r;
    }
    const double h = g.spacing();
    if (rho <= 2.0 * h) throw DomainError("pohozaev_boundary_functional: circle too small for the grid");
    auto trapezoid = [&](int count) {
        const double dt = 2.0 * pi / count;
        std::vector<double> on(count);
        double sum = 0.0;
        for (int k = 0; k < count; ++k) {
            const double t = dt * k;
            const Vec2 e{std::cos(t), std::sin(t)};
            on[k] = f.interpolate(e * rho);
        }
        for (int k = 0; k < count; ++k) {
            const double t = dt * k;
            const Vec2 e{std::cos(t), std::sin(t)};
            const double u1 = f.interpolate(e * (rho - h));
            const double u2 = f.interpolate(e * (rho - 2.0 * h));
            const double dn = (3.0 * on[k] - 4.0 * u1 + u2) / (2.0 * h);
            const double dtan = (on[(k + 1) % count] - on[(k + count - 1) % count]) / (2.0 * rho * dt);
            const double grad2 = dn * dn + dtan * dtan;
            sum += dn * dn - 0.5 * grad2 + weighted_exp(w, e * rho, on[k]);
        }
        return rho * rho * sum * dt;
    };
    const double fine = trapezoid(circle_base_samples);
    const double coarse = trapezoid(circle_base_samples / 2);
    return {fine, std::abs(fine - coarse)};
}

} // namespace liouville
