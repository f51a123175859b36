#pragma once

#include "liouville/geometry.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace liouville {

enum class NodeKind : std::uint8_t {
    Exterior,
    Interior,          // all four neighbors inside the disk: 5-point stencil
    BoundaryAdjacent,  // at least one arm cut by the circle: Shortley-Weller stencil
};

enum Direction : int { East = 0, West = 1, North = 2, South = 3 };

/// Uniform Cartesian grid on the square [-r, r]^2 restricted to the open disk B_r.
///
/// Node (i, j) sits at (-r + i h, -r + j h) with h = 2r/(n-1); n is odd so the
/// origin is node (n/2, n/2). Inside nodes carry four arm lengths (in units of h):
/// 1 when the neighbor is inside, otherwise the fraction of the grid line that
/// reaches the circle.
class DiskGrid {
public:
    static constexpr int min_points = 33;

    DiskGrid(double radius, int n);

    double radius() const { return radius_; }
    int n() const { return n_; }
    double spacing() const { return h_; }
    std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n_ + i; }
    int column(std::size_t idx) const { return static_cast<int>(idx % n_); }
    int row(std::size_t idx) const { return static_cast<int>(idx / n_); }
    Vec2 point(int i, int j) const { return {-radius_ + i * h_, -radius_ + j * h_}; }
    Vec2 point(std::size_t idx) const { return point(column(idx), row(idx)); }
    int center() const { return n_ / 2; }
    std::size_t origin_index() const { return index(center(), center()); }

    NodeKind kind(std::size_t idx) const { return kinds_[idx]; }
    NodeKind kind(int i, int j) const;
    bool inside(std::size_t idx) const { return kinds_[idx] != NodeKind::Exterior; }
    bool inside(int i, int j) const { return kind(i, j) != NodeKind::Exterior; }

    /// Arm length in units of h; only meaningful for inside nodes.
    double arm(std::size_t idx, Direction d) const { return arms_[idx][d]; }
    /// Point where the arm in direction d ends (a neighbor node or a point on the circle).
    Vec2 arm_end(std::size_t idx, Direction d) const;
    /// Whether the arm in direction d ends on the circle rather than at a node.
    bool arm_cut(std::size_t idx, Direction d) const;
    std::size_t neighbor(std::size_t idx, Direction d) const;

    const std::vector<std::size_t>& inside_nodes() const { return inside_; }
    std::size_t count(NodeKind k) const;

    /// Area of the node's cell [x-h/2, x+h/2] x [y-h/2, y+h/2] that lies in B_rho.
    double cell_area_in_disk(std::size_t idx, double rho) const;

    /// Nearest node to p (may be exterior).
    std::size_t nearest(Vec2 p) const;

private:
    double radius_;
    int n_;
    double h_;
    std::vector<NodeKind> kinds_;
    std::vector<std::array<double, 4>> arms_;
    std::vector<std::size_t> inside_;
};

/// Annulus B_out \ B_in.
struct AnnulusSpec {
    double inner;
    double outer;

    AnnulusSpec(double inner_radius, double outer_radius, double grid_radius);
};

/// Area of the rectangle [x0,x1] x [y0,y1] intersected with the disk of radius rho at the origin.
double rect_disk_overlap(double x0, double x1, double y0, double y1, double rho);

} // namespace liouville
