#pragma once

#include "liouville/field.hpp"
#include "liouville/weight.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace liouville {

struct NewtonParams {
    int max_iterations = 50;
    /// Sup-norm residual tolerance relative to max(1, max W e^xi).
    double tolerance = 1e-9;
    double backtrack = 0.5;
    double min_step = 1.0 / 1024.0;
    /// Relative residual accepted from the linear solve.
    double linear_tolerance = 1e-12;
    /// Retry through the problem's homotopy when plain Newton stalls.
    bool continuation = true;

    void validate() const;
};

struct DirichletProblem {
    WeightSpec weight;
    BoundaryTrace boundary;  // g on the circle |x| = r
    std::shared_ptr<const DiskGrid> grid;
    std::optional<ScalarField> initial_guess;  // harmonic extension of g when absent
    /// Problem at fraction t in (0, 1] of the target amplitude, used for continuation.
    std::function<DirichletProblem(double)> homotopy;

    /// max g - min g over 256 circle samples.
    double boundary_oscillation() const;
};

struct IterationRecord {
    int iter = 0;
    double residual = 0.0;
    double step = 0.0;
};

struct ConvergenceRecord {
    std::vector<IterationRecord> iterations;  // all stages, in order
    bool converged = false;
    bool damped_only = false;  // converged without an observed quadratic residual drop
    bool continuation_used = false;
    double residual = 0.0;      // final sup-norm residual at inside nodes (scaled rows)
    double tolerance = 0.0;     // absolute tolerance applied
    double linear_residual = 0.0;  // worst relative residual of the linear solves
    std::string message;
};

struct SolveResult {
    ScalarField field;  // the solution, or the best iterate on failure
    ConvergenceRecord record;
};

/// Damped Newton for Delta xi + W e^xi = 0 with xi = g on the circle. Never throws on
/// divergence: the record says whether the run converged and the field is the best iterate.
SolveResult solve_dirichlet(const DirichletProblem& problem, const NewtonParams& params = {});

/// Discrete harmonic extension of g (same stencils as the solver).
ScalarField harmonic_extension(std::shared_ptr<const DiskGrid> grid, const BoundaryTrace& g);

/// Solves Delta_h u = rhs at the inside nodes with u = g on the circle.
ScalarField poisson_solve(std::shared_ptr<const DiskGrid> grid, const std::vector<double>& rhs,
                          const BoundaryTrace& g, double* linear_residual = nullptr);

struct GreenDecomposition {
    ScalarField newtonian;  // N(x) = (1/2 pi) int_{B_r} ln(1/|x-y|) W e^f dy
    ScalarField remainder;  // psi = f - min_{circle} f - N
    double boundary_min = 0.0;
    double linear_residual = 0.0;
    bool partial = false;
};

/// N on the circle by direct quadrature, N inside by the discrete Poisson problem with the
/// same density, so that Delta_h psi equals the PDE residual of f.
GreenDecomposition green_decompose(const ScalarField& f, const WeightSpec& w);

/// Direct quadrature of N at x. Closed-form fields use adaptive polar quadrature; otherwise
/// node quadrature where each cell is replaced by the disk of equal area.
double newtonian_potential(const ScalarField& f, const WeightSpec& w, Vec2 x);

} // namespace liouville
