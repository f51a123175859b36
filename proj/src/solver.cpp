#include "liouville/solver.hpp"
#include "liouville/errors.hpp"
#include "liouville/field_ops.hpp"
#include "liouville/quadrature.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace liouville {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// Delta_h u = A u + b on the inside nodes, b carrying the boundary data.
struct DiscreteLaplacian {
    std::vector<std::size_t> nodes;  // unknown -> node index
    SpMat a;
    Vec b;
    Vec row_scale;  // (4/h^2)/|A_ii|: 1 at interior nodes

    DiscreteLaplacian(const DiskGrid& g, const BoundaryTrace& trace) {
        nodes = g.inside_nodes();
        std::vector<long> pos(g.size(), -1);
        for (std::size_t i = 0; i < nodes.size(); ++i) pos[nodes[i]] = static_cast<long>(i);
        const double h2 = g.spacing() * g.spacing();
        const long m = static_cast<long>(nodes.size());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(5 * nodes.size());
        b = Vec::Zero(m);
        row_scale = Vec::Ones(m);
        for (long i = 0; i < m; ++i) {
            const std::size_t idx = nodes[i];
            double diag = 0.0;
            for (auto [plus, minus] : {std::pair{East, West}, std::pair{North, South}}) {
                const double ap = g.arm(idx, plus), am = g.arm(idx, minus);
                const double cp = 2.0 / (h2 * ap * (ap + am));
                const double cm = 2.0 / (h2 * am * (ap + am));
                diag -= cp + cm;
                for (auto [d, c] : {std::pair{plus, cp}, std::pair{minus, cm}}) {
                    if (g.arm_cut(idx, d)) {
                        if (!trace) throw ConfigError("boundary data missing for the Dirichlet problem");
                        b[i] += c * trace(g.arm_end(idx, d));
                    } else {
                        trip.emplace_back(i, pos[g.neighbor(idx, d)], c);
                    }
                }
            }
            trip.emplace_back(i, i, diag);
            row_scale[i] = (4.0 / h2) / std::abs(diag);
        }
        a.resize(m, m);
        a.setFromTriplets(trip.begin(), trip.end());
        a.makeCompressed();
    }

    Vec gather(const ScalarField& f) const {
        Vec u(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) u[i] = f[nodes[i]];
        return u;
    }

    std::vector<double> scatter(const Vec& u, std::size_t size) const {
        std::vector<double> v(size, nan);
        for (std::size_t i = 0; i < nodes.size(); ++i) v[nodes[i]] = u[i];
        return v;
    }
};

double l2_scaled(const Vec& r, const Vec& scale) {
    const double v = r.cwiseProduct(scale).norm();
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

double sup_scaled(const Vec& r, const Vec& scale) {
    double m = 0.0;
    for (long i = 0; i < r.size(); ++i) {
        const double v = std::abs(r[i]) * scale[i];
        if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        m = std::max(m, v);
    }
    return m;
}

struct Stage {
    Vec u;
    bool converged = false;
    double residual = std::numeric_limits<double>::infinity();
    double tolerance = 0.0;
    bool quadratic = false;
    int steps = 0;
    std::string message;
};

Stage newton(const DirichletProblem& p, Vec u, const NewtonParams& np, ConvergenceRecord& rec, int& counter) {
    const auto& g = *p.grid;
    DiscreteLaplacian op(g, p.boundary);
    const long m = static_cast<long>(op.nodes.size());
    Vec logw(m);
    for (long i = 0; i < m; ++i) logw[i] = p.weight.log_value(g.point(op.nodes[i]));

    auto source = [&](const Vec& v) {
        Vec s(m);
        for (long i = 0; i < m; ++i) s[i] = std::exp(logw[i] + v[i]);
        return s;
    };
    auto residual = [&](const Vec& v, const Vec& s) -> Vec { return op.a * v + op.b + s; };

    Stage st;
    Vec s = source(u);
    Vec r = residual(u, s);
    // the line search descends the Euclidean norm (Newton directions are descent
    // directions for it); convergence is judged in the sup norm
    double merit = l2_scaled(r, op.row_scale);
    double sup = sup_scaled(r, op.row_scale);
    auto tolerance_for = [&](const Vec& src) {
        const double top = src.size() ? src.maxCoeff() : 0.0;
        return np.tolerance * std::max(1.0, std::isfinite(top) ? top : 1.0);
    };
    double tol = tolerance_for(s);
    rec.iterations.push_back({counter, sup, 0.0});
    double prev_normalized = sup / (tol / np.tolerance);

    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    SpMat jac = op.a;
    lu.analyzePattern(jac);
    for (int it = 0; it < np.max_iterations && !(sup <= tol); ++it) {
        jac = op.a;
        for (long i = 0; i < m; ++i) jac.coeffRef(i, i) += s[i];
        lu.factorize(jac);
        if (lu.info() != Eigen::Success) {
            st.message = "Jacobian factorization failed: " + lu.lastErrorMessage();
            break;
        }
        const Vec delta = lu.solve(-r);
        const double lres = (jac * delta + r).norm() / std::max(r.norm(), 1e-300);
        rec.linear_residual = std::max(rec.linear_residual, lres);

        double t = 1.0;
        bool accepted = false;
        while (t >= np.min_step) {
            Vec trial = u + t * delta;
            Vec ts = source(trial);
            Vec tr = residual(trial, ts);
            const double tm = l2_scaled(tr, op.row_scale);
            if (std::isfinite(tm) && tm < (1.0 - 1e-4 * t) * merit) {
                u = std::move(trial);
                s = std::move(ts);
                r = std::move(tr);
                merit = tm;
                sup = sup_scaled(r, op.row_scale);
                accepted = true;
                break;
            }
            t *= np.backtrack;
        }
        ++counter;
        ++st.steps;
        if (!accepted) {
            rec.iterations.push_back({counter, sup, 0.0});
            st.message = "line search stalled below the minimum step";
            break;
        }
        rec.iterations.push_back({counter, sup, t});
        tol = tolerance_for(s);
        const double normalized = sup / (tol / np.tolerance);
        if (t == 1.0 && prev_normalized < 0.1 && normalized <= std::pow(prev_normalized, 1.5)) st.quadratic = true;
        prev_normalized = normalized;
    }
    st.u = std::move(u);
    st.residual = sup;
    st.tolerance = tol;
    st.converged = sup <= tol;
    if (!st.converged && st.message.empty()) st.message = "maximum Newton iterations reached";
    return st;
}

Vec initial_vector(const DirichletProblem& p) {
    if (p.initial_guess) {
        const auto& f = *p.initial_guess;
        if (f.grid().n() != p.grid->n() || f.grid().radius() != p.grid->radius())
            throw ConfigError("initial guess lives on a different grid");
        DiscreteLaplacian op(*p.grid, p.boundary);
        return op.gather(f);
    }
    DiscreteLaplacian op(*p.grid, p.boundary);
    return op.gather(harmonic_extension(p.grid, p.boundary));
}

// log kernel integrated over the disk of radius a around a node, per unit area
double cell_kernel(double d, double a) {
    if (d >= a) return std::log(1.0 / d);
    return 0.5 - std::log(a) - d * d / (2.0 * a * a);
}

struct NodeDensity {
    std::vector<Vec2> pts;
    std::vector<double> mass;    // rho * cell area
    std::vector<double> radius;  // equal-area disk radius
};

NodeDensity node_density(const ScalarField& f, const WeightSpec& w) {
    const auto& g = f.grid();
    const auto wts = node_area_weights(g, g.radius());
    NodeDensity nd;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        if (wts[idx] <= 0.0) continue;
        const double v = f.extended_value(idx);
        if (v == -std::numeric_limits<double>::infinity()) continue;
        const Vec2 x = g.point(idx);
        const double rho = std::exp(w.log_value(x) + v);
        if (rho == 0.0) continue;
        nd.pts.push_back(x);
        nd.mass.push_back(rho * wts[idx]);
        nd.radius.push_back(std::sqrt(wts[idx] / pi));
    }
    return nd;
}

double node_potential(const NodeDensity& nd, Vec2 x) {
    double s = 0.0;
    for (std::size_t i = 0; i < nd.pts.size(); ++i) s += nd.mass[i] * cell_kernel((x - nd.pts[i]).norm(), nd.radius[i]);
    return s / (2.0 * pi);
}

} // namespace

void NewtonParams::validate() const {
    if (!(tolerance > 0.0)) throw ConfigError("newton tolerance must be positive");
    if (max_iterations < 1) throw ConfigError("newton max_iterations must be at least 1");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("newton backtrack factor must lie in (0, 1)");
    if (!(min_step > 0.0 && min_step <= 1.0)) throw ConfigError("newton min_step must lie in (0, 1]");
    if (!(linear_tolerance > 0.0)) throw ConfigError("newton linear_tolerance must be positive");
}

double DirichletProblem::boundary_oscillation() const {
    if (!boundary || !grid) return 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int k = 0; k < 256; ++k) {
        const double t = 2.0 * pi * k / 256;
        const double v = boundary(Vec2{std::cos(t), std::sin(t)} * grid->radius());
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

ScalarField poisson_solve(std::shared_ptr<const DiskGrid> grid, const std::vector<double>& rhs,
                          const BoundaryTrace& g, double* linear_residual) {
    DiscreteLaplacian op(*grid, g);
    Vec target(op.nodes.size());
    for (std::size_t i = 0; i < op.nodes.size(); ++i) target[i] = rhs[op.nodes[i]] - op.b[i];
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(op.a);
    if (lu.info() != Eigen::Success) throw SolverError("Laplacian factorization failed: " + lu.lastErrorMessage());
    Vec u = lu.solve(target);
    if (linear_residual) *linear_residual = (op.a * u - target).norm() / std::max(target.norm(), 1e-300);
    return ScalarField(grid, op.scatter(u, grid->size()), g);
}

ScalarField harmonic_extension(std::shared_ptr<const DiskGrid> grid, const BoundaryTrace& g) {
    std::vector<double> zero(grid->size(), 0.0);
    return poisson_solve(std::move(grid), zero, g);
}

SolveResult solve_dirichlet(const DirichletProblem& problem, const NewtonParams& params) {
    params.validate();
    if (!problem.grid) throw ConfigError("Dirichlet problem needs a grid");
    if (!problem.boundary) throw ConfigError("Dirichlet problem needs boundary data");
    if (!std::isfinite(problem.boundary_oscillation())) throw ConfigError("boundary data must be bounded");

    ConvergenceRecord rec;
    int counter = 0;
    DiscreteLaplacian layout(*problem.grid, problem.boundary);
    auto finish = [&](const Stage& st, bool quadratic_seen) {
        rec.converged = st.converged;
        rec.residual = st.residual;
        rec.tolerance = st.tolerance;
        rec.damped_only = st.converged && st.steps > 0 && !quadratic_seen;
        rec.message = st.converged ? "converged" : st.message;
        ScalarField f(problem.grid, layout.scatter(st.u, problem.grid->size()), problem.boundary);
        return SolveResult{std::move(f), rec};
    };

    Stage plain = newton(problem, initial_vector(problem), params, rec, counter);
    if (plain.converged || !params.continuation || !problem.homotopy) return finish(plain, plain.quadratic);

    // continuation in the amplitude: t = 1/4, 1/2, 1
    rec.continuation_used = true;
    std::optional<Vec> carry;
    Stage st;
    for (double t : {0.25, 0.5, 1.0}) {
        DirichletProblem sub = t < 1.0 ? problem.homotopy(t) : problem;
        if (!sub.grid) sub.grid = problem.grid;
        Vec start = carry ? *carry : initial_vector(sub);
        st = newton(sub, std::move(start), params, rec, counter);
        if (!st.converged) {
            st.message = "continuation stalled at fraction " + std::to_string(t) + ": " + st.message;
            break;
        }
        carry = st.u;
    }
    if (!st.converged && plain.residual < st.residual) return finish(plain, false);
    return finish(st, st.quadratic);
}

double newtonian_potential(const ScalarField& f, const WeightSpec& w, Vec2 x) {
    if (f.has_closed_form()) {
        const auto& cf = f.closed_form();
        auto integrand = [&](Vec2 y) {
            const double d = (x - y).norm();
            if (d == 0.0) return 0.0;
            const double v = cf.value(y);
            if (v == -std::numeric_limits<double>::infinity()) return 0.0;
            return std::log(1.0 / d) * std::exp(w.log_value(y) + v);
        };
        auto spots = combined_hotspots(f, w);
        spots.push_back({x, 1e-6 * f.grid().radius()});
        return integrate_disk(integrand, f.grid().radius(), spots, {1e-8, 8}).value / (2.0 * pi);
    }
    return node_potential(node_density(f, w), x);
}

GreenDecomposition green_decompose(const ScalarField& f, const WeightSpec& w) {
    const auto& g = f.grid();
    auto nd = std::make_shared<const NodeDensity>(node_density(f, w));
    GreenDecomposition out{f, f};
    for (double m : nd->mass)
        if (!std::isfinite(m)) out.partial = true;

    std::vector<double> rhs(g.size(), 0.0);
    for (auto idx : g.inside_nodes()) {
        const double v = f[idx];
        rhs[idx] = v == -std::numeric_limits<double>::infinity() ? 0.0 : -std::exp(w.log_value(g.point(idx)) + v);
    }
    BoundaryTrace trace = [nd](Vec2 x) { return node_potential(*nd, x); };
    out.newtonian = poisson_solve(f.grid_ptr(), rhs, trace, &out.linear_residual);

    const auto ring = circle_samples(f, g.radius());
    out.boundary_min = *std::min_element(ring.begin(), ring.end());
    std::vector<double> psi(g.size(), nan);
    for (auto idx : g.inside_nodes()) psi[idx] = f[idx] - out.boundary_min - out.newtonian[idx];
    const double shift = out.boundary_min;
    const ScalarField fcopy = f;
    BoundaryTrace psi_trace = [fcopy, trace, shift](Vec2 x) { return fcopy.boundary_value(x) - shift - trace(x); };
    out.remainder = ScalarField(f.grid_ptr(), std::move(psi), psi_trace);
    return out;
}

} // namespace liouville
