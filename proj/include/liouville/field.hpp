#pragma once

#include "liouville/grid.hpp"
#include "liouville/quadrature.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace liouville {

/// Analytic description of an exact field. Integrals over such fields can be
/// refined beyond the grid resolution.
struct ClosedForm {
    std::function<double(Vec2)> value;
    std::function<Vec2(Vec2)> gradient;  // optional
    std::vector<HotSpot> hotspots;
};

/// Values on the circle |x| = r of the grid; used by the Shortley-Weller stencil.
using BoundaryTrace = std::function<double(Vec2)>;

/// A real field sampled at the inside nodes of a DiskGrid. Exterior entries are NaN.
class ScalarField {
public:
    ScalarField(std::shared_ptr<const DiskGrid> grid, std::vector<double> values, BoundaryTrace trace = {});

    /// Samples a closed form at every inside node and keeps it attached.
    static ScalarField from_closed_form(std::shared_ptr<const DiskGrid> grid, ClosedForm form);
    /// Samples f at the inside nodes; f also supplies the boundary trace but is not kept as a closed form.
    static ScalarField sampled(std::shared_ptr<const DiskGrid> grid, const std::function<double(Vec2)>& f);
    /// The empty field: e^f is identically 0.
    static ScalarField empty(std::shared_ptr<const DiskGrid> grid);

    const DiskGrid& grid() const { return *grid_; }
    const std::shared_ptr<const DiskGrid>& grid_ptr() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t idx) const { return values_[idx]; }

    bool has_closed_form() const { return closed_.has_value(); }
    const ClosedForm& closed_form() const { return *closed_; }
    bool has_trace() const { return closed_.has_value() || static_cast<bool>(trace_); }
    const BoundaryTrace& trace() const { return trace_; }
    std::vector<HotSpot> hotspots() const { return closed_ ? closed_->hotspots : std::vector<HotSpot>{}; }

    /// Value at a point on the grid circle.
    double boundary_value(Vec2 on_circle) const;
    /// Value at the end of the arm of node idx in direction d (neighbor or circle point).
    double arm_value(std::size_t idx, Direction d) const;
    /// Value used for exterior nodes in interpolation and quadrature stencils.
    double extended_value(std::size_t idx) const;

    /// Closed form when available, otherwise bilinear interpolation.
    double value_at(Vec2 p) const;
    /// Bilinear interpolation of nodal values (ignores any closed form).
    double interpolate(Vec2 p) const;

    /// Centered-difference gradient at an inside node (unequal arms next to the circle).
    Vec2 node_gradient(std::size_t idx) const;
    /// Closed-form gradient when available, otherwise bilinear interpolation of node gradients.
    Vec2 gradient_at(Vec2 p) const;

    ScalarField with_values(std::vector<double> values) const;
    ScalarField with_trace(BoundaryTrace trace) const;

private:
    std::shared_ptr<const DiskGrid> grid_;
    std::vector<double> values_;
    BoundaryTrace trace_;
    std::optional<ClosedForm> closed_;
};

} // namespace liouville
