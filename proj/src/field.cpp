#include "liouville/field.hpp"
#include "liouville/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace liouville {

namespace {
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

Direction opposite(Direction d) {
    switch (d) {
    case East: return West;
    case West: return East;
    case North: return South;
    default: return North;
    }
}
} // namespace

ScalarField::ScalarField(std::shared_ptr<const DiskGrid> grid, std::vector<double> values, BoundaryTrace trace)
    : grid_(std::move(grid)), values_(std::move(values)), trace_(std::move(trace)) {
    if (!grid_) throw ConfigError("field needs a grid");
    if (values_.size() != grid_->size()) throw ConfigError("field value count does not match the grid");
    for (std::size_t idx = 0; idx < values_.size(); ++idx) {
        if (!grid_->inside(idx)) {
            values_[idx] = nan;
            continue;
        }
        const double v = values_[idx];
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
            throw DataError("field value is not finite at node " + std::to_string(idx));
    }
}

ScalarField ScalarField::from_closed_form(std::shared_ptr<const DiskGrid> grid, ClosedForm form) {
    std::vector<double> v(grid->size(), nan);
    for (auto idx : grid->inside_nodes()) v[idx] = form.value(grid->point(idx));
    ScalarField f(std::move(grid), std::move(v));
    f.closed_ = std::move(form);
    return f;
}

ScalarField ScalarField::sampled(std::shared_ptr<const DiskGrid> grid, const std::function<double(Vec2)>& fn) {
    std::vector<double> v(grid->size(), nan);
    for (auto idx : grid->inside_nodes()) v[idx] = fn(grid->point(idx));
    return ScalarField(std::move(grid), std::move(v), fn);
}

ScalarField ScalarField::empty(std::shared_ptr<const DiskGrid> grid) {
    const double ninf = -std::numeric_limits<double>::infinity();
    return sampled(std::move(grid), [ninf](Vec2) { return ninf; });
}

double ScalarField::boundary_value(Vec2 p) const {
    if (closed_) return closed_->value(p);
    if (trace_) return trace_(p);
    // no trace: nearest inside node
    const auto& g = *grid_;
    const Vec2 q = p * ((g.radius() - g.spacing()) / std::max(p.norm(), 1e-300));
    std::size_t idx = g.nearest(q);
    if (!g.inside(idx)) idx = g.nearest(q * 0.9);
    return values_[idx];
}

double ScalarField::arm_value(std::size_t idx, Direction d) const {
    const auto& g = *grid_;
    if (!g.arm_cut(idx, d)) return values_[g.neighbor(idx, d)];
    if (has_trace()) return boundary_value(g.arm_end(idx, d));
    // linear extrapolation from the opposite side
    const Direction o = opposite(d);
    const double theta = g.arm(idx, d);
    if (!g.arm_cut(idx, o)) return values_[idx] + theta * (values_[idx] - values_[g.neighbor(idx, o)]);
    return values_[idx];
}

double ScalarField::extended_value(std::size_t idx) const {
    const auto& g = *grid_;
    if (g.inside(idx)) return values_[idx];
    // Ghost value: quadratic extrapolation along grid lines (diagonals if no axis
    // line reaches an inside node), through the node behind and the circle crossing.
    const int i = g.column(idx), j = g.row(idx);
    const Vec2 p_out = g.point(idx);
    double sum = 0.0;
    int terms = 0;
    auto along = [&](int sx, int sy) {
        const int ai = i + sx, aj = j + sy, bi = ai + sx, bj = aj + sy;
        if (ai < 0 || aj < 0 || ai >= g.n() || aj >= g.n() || !g.inside(ai, aj)) return;
        const double u0 = values_[g.index(ai, aj)];
        if (!std::isfinite(u0)) return;
        const bool has_behind = bi >= 0 && bj >= 0 && bi < g.n() && bj < g.n() && g.inside(bi, bj);
        const double um = has_behind ? values_[g.index(bi, bj)] : u0;
        // crossing of the segment from the inside node to idx with the circle, as a fraction t
        const Vec2 p0 = g.point(ai, aj);
        const Vec2 dvec = p_out - p0;
        const double qa = dvec.norm2(), qb = 2.0 * dot(p0, dvec), qc = p0.norm2() - g.radius() * g.radius();
        const double t = std::clamp((-qb + std::sqrt(std::max(0.0, qb * qb - 4.0 * qa * qc))) / (2.0 * qa), 0.0, 1.0);
        if (has_trace() && has_behind && t >= 0.25) {
            const double ub = boundary_value(p0 + dvec * t);
            sum += um * (1.0 - t) / (1.0 + t) - u0 * 2.0 * (1.0 - t) / t + ub * 2.0 / (t * (1.0 + t));
        } else if (has_behind) {
            sum += 2.0 * u0 - um;
        } else if (has_trace() && t > 0.0) {
            sum += u0 + (boundary_value(p0 + dvec * t) - u0) / std::max(t, 0.25);
        } else {
            sum += u0;
        }
        ++terms;
    };
    along(1, 0);
    along(-1, 0);
    along(0, 1);
    along(0, -1);
    if (terms == 0) {
        along(1, 1);
        along(1, -1);
        along(-1, 1);
        along(-1, -1);
    }
    if (terms > 0) return sum / terms;
    const Vec2 p = g.point(idx);
    const double norm = p.norm();
    if (has_trace() && norm > 0.0) return boundary_value(p * (g.radius() / norm));
    return boundary_value(p);
}

double ScalarField::interpolate(Vec2 p) const {
    const auto& g = *grid_;
    const double h = g.spacing();
    const double fx = (p.x + g.radius()) / h;
    const double fy = (p.y + g.radius()) / h;
    int i = std::clamp(static_cast<int>(std::floor(fx)), 0, g.n() - 2);
    int j = std::clamp(static_cast<int>(std::floor(fy)), 0, g.n() - 2);
    const double tx = fx - i;
    const double ty = fy - j;
    const double v00 = extended_value(g.index(i, j));
    const double v10 = extended_value(g.index(i + 1, j));
    const double v01 = extended_value(g.index(i, j + 1));
    const double v11 = extended_value(g.index(i + 1, j + 1));
    return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
}

double ScalarField::value_at(Vec2 p) const {
    if (closed_) return closed_->value(p);
    return interpolate(p);
}

Vec2 ScalarField::node_gradient(std::size_t idx) const {
    const auto& g = *grid_;
    const double h = g.spacing();
    const double u0 = values_[idx];
    auto derivative = [&](Direction plus, Direction minus) {
        const double a = g.arm(idx, plus) * h;
        const double b = g.arm(idx, minus) * h;
        const double up = arm_value(idx, plus);
        const double um = arm_value(idx, minus);
        return (b * b * (up - u0) + a * a * (u0 - um)) / (a * b * (a + b));
    };
    return {derivative(East, West), derivative(North, South)};
}

Vec2 ScalarField::gradient_at(Vec2 p) const {
    if (closed_ && closed_->gradient) return closed_->gradient(p);
    const auto& g = *grid_;
    const double h = g.spacing();
    const double fx = (p.x + g.radius()) / h;
    const double fy = (p.y + g.radius()) / h;
    int i = std::clamp(static_cast<int>(std::floor(fx)), 0, g.n() - 2);
    int j = std::clamp(static_cast<int>(std::floor(fy)), 0, g.n() - 2);
    const double tx = fx - i;
    const double ty = fy - j;
    auto grad = [&](int ii, int jj) {
        std::size_t idx = g.index(ii, jj);
        if (!g.inside(idx)) {
            // nearest inside node toward the center
            const Vec2 q = g.point(idx);
            idx = g.nearest(q * std::max(0.0, 1.0 - 1.5 * h / std::max(q.norm(), h)));
            if (!g.inside(idx)) return Vec2{};
        }
        return node_gradient(idx);
    };
    const Vec2 g00 = grad(i, j), g10 = grad(i + 1, j), g01 = grad(i, j + 1), g11 = grad(i + 1, j + 1);
    return g00 * ((1 - tx) * (1 - ty)) + g10 * (tx * (1 - ty)) + g01 * ((1 - tx) * ty) + g11 * (tx * ty);
}

ScalarField ScalarField::with_values(std::vector<double> values) const {
    return ScalarField(grid_, std::move(values), trace_);
}

ScalarField ScalarField::with_trace(BoundaryTrace trace) const {
    ScalarField f = *this;
    f.trace_ = std::move(trace);
    return f;
}

} // namespace liouville
