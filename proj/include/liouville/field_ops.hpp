#pragma once

#include "liouville/field.hpp"
#include "liouville/weight.hpp"

#include <vector>

namespace liouville {

/// Discrete Laplacian: 5-point stencil at interior nodes, Shortley-Weller at
/// boundary-adjacent nodes (cut arms read the boundary trace). Exterior entries are NaN.
ScalarField laplacian(const ScalarField& f);

/// Delta f + W e^f at inside nodes (NaN elsewhere).
std::vector<double> pde_residual(const ScalarField& f, const WeightSpec& w);

/// Max |v| over nodes of the given kind(s); interior only by default.
double max_norm(const DiskGrid& grid, const std::vector<double>& v, bool include_boundary_adjacent = false);

/// Node weights for integrating over B_rho: h^2 times the part of each node cell inside B_rho.
/// Exterior nodes get a weight when their cell meets B_rho.
std::vector<double> node_area_weights(const DiskGrid& grid, double rho);

/// Integral of |grad f|^2 over B_rho. Closed-form gradients use polar quadrature;
/// otherwise centered differences with node-area quadrature.
double dirichlet_energy(const ScalarField& f, double rho, const QuadratureTolerance& tol = {});

/// Integral of W e^f over B_delta (polar quadrature on closed forms, node quadrature otherwise).
QuadratureResult weighted_mass(const ScalarField& f, const WeightSpec& w, double delta,
                               const QuadratureTolerance& tol = {});
/// Integral of W e^f over delta_in <= |x| <= delta_out.
QuadratureResult weighted_mass_annulus(const ScalarField& f, const WeightSpec& w, double delta_in, double delta_out,
                                       const QuadratureTolerance& tol = {});

/// rho * integral over |x| = rho of (|d_nu f|^2 - |grad f|^2 / 2 + W e^f) d sigma.
QuadratureResult pohozaev_boundary_functional(const ScalarField& f, const WeightSpec& w, double rho,
                                              const QuadratureTolerance& tol = {});

/// Field values on `count` equally spaced points of the circle |x| = rho.
std::vector<double> circle_samples(const ScalarField& f, double rho, int count = 256);

/// Hot spots of the field plus the poles of the weight.
std::vector<HotSpot> combined_hotspots(const ScalarField& f, const WeightSpec& w);

} // namespace liouville
