#include "liouville/grid.hpp"
#include "liouville/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace liouville {

namespace {

constexpr int di[4] = {1, -1, 0, 0};
constexpr int dj[4] = {0, 0, 1, -1};

// Antiderivative of sqrt(rho^2 - x^2).
double half_chord_primitive(double x, double rho) {
    const double t = std::clamp(x / rho, -1.0, 1.0);
    const double s = rho * std::sqrt(std::max(0.0, 1.0 - t * t));
    return 0.5 * (x * s + rho * rho * std::asin(t));
}

double overlap_piece(double a, double b, double y0, double y1, double rho) {
    if (b <= a) return 0.0;
    const double xm = 0.5 * (a + b);
    const double s = std::sqrt(std::max(0.0, rho * rho - xm * xm));
    const bool top_clipped = s < y1;      // upper limit is the circle
    const bool bottom_clipped = -s > y0;  // lower limit is the circle
    const double lo = bottom_clipped ? -s : y0;
    const double hi = top_clipped ? s : y1;
    if (hi <= lo) return 0.0;
    const double chord = half_chord_primitive(b, rho) - half_chord_primitive(a, rho);
    double area = 0.0;
    area += top_clipped ? chord : y1 * (b - a);
    area -= bottom_clipped ? -chord : y0 * (b - a);
    return area;
}

} // namespace

double rect_disk_overlap(double x0, double x1, double y0, double y1, double rho) {
    if (rho <= 0.0) return 0.0;
    x0 = std::max(x0, -rho);
    x1 = std::min(x1, rho);
    if (x1 <= x0 || y1 <= y0) return 0.0;
    std::vector<double> cuts{x0, x1};
    for (double y : {y0, y1}) {
        if (std::abs(y) < rho) {
            const double xc = std::sqrt(rho * rho - y * y);
            for (double c : {-xc, xc})
                if (c > x0 && c < x1) cuts.push_back(c);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        area += overlap_piece(cuts[k], cuts[k + 1], y0, y1, rho);
    return area;
}

DiskGrid::DiskGrid(double radius, int n) : radius_(radius), n_(n) {
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw ConfigError("grid radius must be positive and finite");
    if (n < min_points)
        throw ConfigError("grid too coarse: n = " + std::to_string(n) + " < " + std::to_string(min_points));
    if (n % 2 == 0) throw ConfigError("grid size n must be odd so the origin is a node");
    h_ = 2.0 * radius / (n - 1);

    const double cut = radius * (1.0 - 1e-10);
    kinds_.assign(size(), NodeKind::Exterior);
    arms_.assign(size(), {1.0, 1.0, 1.0, 1.0});
    auto is_in = [&](int i, int j) {
        if (i < 0 || j < 0 || i >= n_ || j >= n_) return false;
        return point(i, j).norm() < cut;
    };
    for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < n_; ++i) {
            if (!is_in(i, j)) continue;
            const std::size_t idx = index(i, j);
            const Vec2 p = point(i, j);
            bool cutarm = false;
            for (int d = 0; d < 4; ++d) {
                if (is_in(i + di[d], j + dj[d])) continue;
                cutarm = true;
                // distance along the grid line to the circle
                double t;
                if (d == East) t = std::sqrt(radius * radius - p.y * p.y) - p.x;
                else if (d == West) t = p.x + std::sqrt(radius * radius - p.y * p.y);
                else if (d == North) t = std::sqrt(radius * radius - p.x * p.x) - p.y;
                else t = p.y + std::sqrt(radius * radius - p.x * p.x);
                arms_[idx][d] = std::clamp(t / h_, 1e-12, 1.0);
            }
            kinds_[idx] = cutarm ? NodeKind::BoundaryAdjacent : NodeKind::Interior;
            inside_.push_back(idx);
        }
    }
}

NodeKind DiskGrid::kind(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_) return NodeKind::Exterior;
    return kinds_[index(i, j)];
}

bool DiskGrid::arm_cut(std::size_t idx, Direction d) const {
    const int i = column(idx) + di[d];
    const int j = row(idx) + dj[d];
    return kind(i, j) == NodeKind::Exterior;
}

std::size_t DiskGrid::neighbor(std::size_t idx, Direction d) const {
    return index(column(idx) + di[d], row(idx) + dj[d]);
}

Vec2 DiskGrid::arm_end(std::size_t idx, Direction d) const {
    const Vec2 p = point(idx);
    const double len = arms_[idx][d] * h_;
    Vec2 e = p + Vec2(di[d], dj[d]) * len;
    if (arm_cut(idx, d)) {
        // project exactly onto the circle to remove rounding in the arm length
        e = e * (radius_ / e.norm());
    }
    return e;
}

std::size_t DiskGrid::count(NodeKind k) const {
    return static_cast<std::size_t>(std::count(kinds_.begin(), kinds_.end(), k));
}

double DiskGrid::cell_area_in_disk(std::size_t idx, double rho) const {
    const Vec2 p = point(idx);
    const double hh = 0.5 * h_;
    const double far = std::hypot(std::abs(p.x) + hh, std::abs(p.y) + hh);
    if (far <= rho) return h_ * h_;
    return rect_disk_overlap(p.x - hh, p.x + hh, p.y - hh, p.y + hh, rho);
}

std::size_t DiskGrid::nearest(Vec2 p) const {
    const int i = std::clamp(static_cast<int>(std::lround((p.x + radius_) / h_)), 0, n_ - 1);
    const int j = std::clamp(static_cast<int>(std::lround((p.y + radius_) / h_)), 0, n_ - 1);
    return index(i, j);
}

AnnulusSpec::AnnulusSpec(double inner_radius, double outer_radius, double grid_radius)
    : inner(inner_radius), outer(outer_radius) {
    if (!(inner >= 0.0 && inner < outer && outer <= grid_radius))
        throw DomainError("annulus requires 0 <= inner < outer <= grid radius");
}

} // namespace liouville
