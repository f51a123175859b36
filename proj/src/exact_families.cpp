#include "liouville/exact_families.hpp"
#include "liouville/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace liouville {

namespace {

// ln(1 + e^t) without overflow.
double softplus(double t) { return t > 30.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

bool on_pole(Vec2 x, const PoleConfig& cfg, double tol) {
    for (auto p : cfg.poles())
        if ((x - p).norm() <= tol) return true;
    return false;
}

} // namespace

ClosedForm radial_bubble_form(int alpha, double lambda) {
    if (alpha < 0) throw ConfigError("radial_bubble: alpha must be a nonnegative integer");
    if (!(lambda > 0.0)) throw ConfigError("radial_bubble: lambda must be positive");
    const double a1 = 1.0 + alpha;
    const double peak = std::log(8.0 * a1 * a1 * lambda * lambda);
    const double loglam = std::log(lambda);
    ClosedForm cf;
    cf.value = [=](Vec2 x) {
        const double r2 = x.norm2();
        if (r2 == 0.0) return peak;
        return peak - 2.0 * softplus(2.0 * loglam + a1 * std::log(r2));
    };
    cf.gradient = [=](Vec2 x) {
        const double r2 = x.norm2();
        if (r2 == 0.0) return Vec2{};
        // -4(1+a) lambda^2 r^{2a} x / (1 + lambda^2 r^{2(1+a)})
        const double t = 2.0 * loglam + a1 * std::log(r2);  // ln(lambda^2 r^{2(1+a)})
        const double frac = t > 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
        return x * (-4.0 * a1 * frac / r2);
    };
    cf.hotspots.push_back({Vec2{}, std::pow(lambda, -1.0 / a1)});
    return cf;
}

ScalarField radial_bubble(std::shared_ptr<const DiskGrid> grid, int alpha, double lambda) {
    return ScalarField::from_closed_form(std::move(grid), radial_bubble_form(alpha, lambda));
}

ComplexPolynomial DevelopingMap::shifted_primitive() const {
    auto g = primitive.taylor_shift(anchor) - shift;
    if (centered) {
        auto c = g.coefficients();
        c[0] = Complex{};
        g = ComplexPolynomial(std::move(c));
    }
    return g;
}

void DevelopingMap::validate() const {
    if (!(amplitude > 0.0)) throw ConfigError("developing map amplitude must be positive");
    if (degree() != 1 + poles.total_multiplicity())
        throw ConfigError("developing map degree must equal 1 + sum of multiplicities");
    const auto deriv = primitive.derivative();
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int trial = 0; trial < 8; ++trial) {
        const Complex z{u(rng), u(rng)};
        Complex product{1.0, 0.0};
        double scale = 1.0;
        for (std::size_t j = 0; j < poles.size(); ++j) {
            const Complex p = to_complex(poles.poles()[j]);
            for (int a = 0; a < poles.multiplicities()[j]; ++a) {
                product *= (z - p);
                scale *= std::abs(z) + std::abs(p);
            }
        }
        if (std::abs(deriv(z) - product) > 1e-10 * std::max(scale, 1e-300))
            throw ConfigError("developing map: F' does not match the product over poles");
    }
    if (centered && std::abs(primitive(anchor) - shift) > 1e-12 * std::max(1.0, std::abs(shift)))
        throw ConfigError("developing map: centered mode requires F(anchor) = c");
}

DevelopingMap DevelopingMap::centered_at(Complex a, double lambda) const {
    DevelopingMap m = *this;
    m.anchor = a;
    m.shift = primitive(a);
    m.amplitude = lambda;
    m.centered = true;
    return m;
}

DevelopingMap polynomial_primitive(const PoleConfig& cfg) {
    const int degree = 1 + cfg.total_multiplicity();
    if (degree > max_developing_degree)
        throw ConfigError("developing map degree " + std::to_string(degree) + " exceeds " +
                          std::to_string(max_developing_degree));
    ComplexPolynomial product(std::vector<Complex>{Complex{1.0, 0.0}});
    for (std::size_t j = 0; j < cfg.size(); ++j)
        for (int a = 0; a < cfg.multiplicities()[j]; ++a)
            product = product * ComplexPolynomial::monomial_root(to_complex(cfg.poles()[j]));
    DevelopingMap m;
    m.poles = cfg;
    m.primitive = product.primitive();
    m.amplitude = 1.0;
    m.shift = Complex{};
    m.anchor = Complex{};
    m.centered = true;
    return m;
}

std::vector<HotSpot> developing_map_hotspots(const DevelopingMap& m) {
    const auto g = m.shifted_primitive();
    const double lam = m.amplitude;
    std::vector<HotSpot> spots;
    for (const Complex w0 : g.roots()) {
        // radius where |lambda G| reaches 1 along the real direction
        auto level = [&](double s) { return std::log(lam) + std::log(std::abs(g(w0 + Complex{s, 0.0}))); };
        double lo = -40.0, hi = 3.0;  // log10 of the radius
        double scale;
        if (level(std::pow(10.0, lo)) >= 0.0) scale = std::pow(10.0, lo);
        else if (level(std::pow(10.0, hi)) <= 0.0) scale = std::pow(10.0, hi);
        else {
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                (level(std::pow(10.0, mid)) < 0.0 ? lo : hi) = mid;
            }
            scale = std::pow(10.0, 0.5 * (lo + hi));
        }
        const Vec2 c = to_vec(m.anchor + w0);
        bool duplicate = false;
        for (const auto& s : spots)
            if ((s.center - c).norm() <= 1e-3 * std::min(s.scale, scale)) duplicate = true;
        if (!duplicate) spots.push_back({c, scale});
    }
    return spots;
}

namespace {

// |G(w)| as |lead| prod |w - r_i|. Horner loses all relative accuracy next to a root that
// is far from the origin, and the noise stalls adaptive quadrature around the bubble.
// Falls back to Horner when the roots do not reproduce G (clustered or multiple roots).
std::function<double(Complex)> factored_modulus(const ComplexPolynomial& g) {
    auto horner = [g](Complex w) { return std::abs(g(w)); };
    const auto roots = g.roots();
    if (roots.empty()) return horner;
    const double lead = std::abs(g.coefficients().back());
    auto product = [roots, lead](Complex w) {
        double p = lead;
        for (const auto& r : roots) p *= std::abs(w - r);
        return p;
    };
    double reach = 1.0;
    for (const auto& r : roots) reach = std::max(reach, 2.0 * std::abs(r));
    for (int k = 0; k < 8; ++k) {
        const Complex w = std::polar(reach * (0.3 + 0.1 * k), 0.7 + 0.9 * k);
        const double h = horner(w), q = product(w);
        if (!(std::abs(h - q) <= 1e-9 * std::max(h, 1e-300))) return horner;
    }
    return product;
}

} // namespace

ClosedForm developing_map_form(const DevelopingMap& m) {
    m.validate();
    const auto g = m.shifted_primitive();
    const Complex a = m.anchor;
    const double loglam = std::log(m.amplitude);
    const double lam = m.amplitude;
    const double peak = std::log(8.0) + 2.0 * loglam;
    const auto modulus = factored_modulus(g);
    ClosedForm cf;
    cf.value = [=](Vec2 x) {
        const double mod = modulus(to_complex(x) - a);
        if (mod == 0.0) return peak;
        return peak - 2.0 * softplus(2.0 * (loglam + std::log(mod)));
    };
    cf.gradient = [=](Vec2 x) {
        auto [gv, gd] = g.eval_with_derivative(to_complex(x) - a);
        const double mod = modulus(to_complex(x) - a);
        if (mod > 0.0) gv *= mod / std::abs(gv);
        if (mod == 0.0) return Vec2{};
        const double lf = loglam + std::log(mod);
        Complex q;  // conj(f) f' / (1 + |f|^2)
        if (lf > 0.0) {
            const double frac = 1.0 / (1.0 + std::exp(-2.0 * lf));
            q = (gd / gv) * frac;
        } else {
            const Complex f = lam * gv;
            q = std::conj(f) * (lam * gd) / (1.0 + std::norm(f));
        }
        return Vec2{-4.0 * q.real(), 4.0 * q.imag()};
    };
    cf.hotspots = developing_map_hotspots(m);
    return cf;
}

ScalarField developing_map_field(std::shared_ptr<const DiskGrid> grid, const DevelopingMap& m) {
    return ScalarField::from_closed_form(std::move(grid), developing_map_form(m));
}

double LambdaSchedule::at(int k) const {
    if (kind == Kind::Power) return lambda0 * std::pow(static_cast<double>(k), gamma);
    return lambda0 * std::pow(base, static_cast<double>(k));
}

std::vector<Vec2> FamilyMember::normalized_poles() const {
    std::vector<Vec2> q;
    for (auto p : poles.poles()) q.push_back(tau > 0.0 ? p / tau : p);
    return q;
}

CollapsingFamily make_family(const FamilyRule& rule) {
    if (rule.count < 4) throw ConfigError("family needs K >= 4 members");
    if (rule.first_index < 1) throw ConfigError("family index starts at k >= 1");
    for (std::size_t j = 0; j < rule.poles.size(); ++j) {
        const auto& pr = rule.poles[j];
        const std::string tag = "pole rule " + std::to_string(j);
        if (!(pr.exponent > 0.0)) throw ConfigError(tag + ": scale exponent must be positive");
        if (std::abs(pr.direction.norm() - 1.0) > 1e-9) throw ConfigError(tag + ": direction must be a unit vector");
        if (!(pr.coefficient > 0.0)) throw ConfigError(tag + ": coefficient must be positive");
        if (pr.multiplicity < 1) throw ConfigError(tag + ": multiplicity must be a positive integer");
    }
    CollapsingFamily fam;
    fam.rule = rule;
    double prev_tau = std::numeric_limits<double>::infinity();
    double prev_lambda = 0.0;
    for (int k = rule.first_index; k < rule.first_index + rule.count; ++k) {
        std::vector<Vec2> pts;
        std::vector<int> mult;
        for (const auto& pr : rule.poles) {
            pts.push_back(pr.direction * (pr.coefficient * std::pow(static_cast<double>(k), -pr.exponent)));
            mult.push_back(pr.multiplicity);
        }
        FamilyMember m;
        m.k = k;
        try {
            m.poles = PoleConfig(std::move(pts), std::move(mult)).sorted_by_modulus();
        } catch (const ConfigError& e) {
            throw ConfigError("family member k = " + std::to_string(k) + ": " + e.what());
        }
        for (auto p : m.poles.poles()) m.tau = std::max(m.tau, p.norm());
        m.lambda = rule.lambda.at(k);
        if (!(m.lambda > 0.0) || !std::isfinite(m.lambda))
            throw ConfigError("lambda schedule must be positive and finite");
        if (m.lambda < prev_lambda) throw ConfigError("lambda schedule must be nondecreasing in k");
        if (!m.poles.empty() && !(m.tau < prev_tau)) throw ConfigError("tau_k must decrease strictly in k");
        prev_tau = m.tau;
        prev_lambda = m.lambda;
        m.map = polynomial_primitive(m.poles).centered_at(to_complex(rule.anchor), m.lambda);
        fam.members.push_back(std::move(m));
    }
    return fam;
}

ScalarField rescale(const ScalarField& f, double tau, int alpha) {
    if (!(tau > 0.0)) throw DomainError("rescale: tau must be positive");
    if (tau > 1.0) throw DomainError("rescale: tau must not exceed 1");
    if (alpha < 0) throw DomainError("rescale: alpha must be nonnegative");
    const auto& g = f.grid();
    const double radius = std::min(g.radius() / tau, 1e3 * g.radius());
    auto grid = std::make_shared<const DiskGrid>(radius, g.n());
    const double shift = 2.0 * (alpha + 1.0) * std::log(tau);
    if (f.has_closed_form()) {
        const auto src = f.closed_form();
        ClosedForm cf;
        cf.value = [src, tau, shift](Vec2 x) { return src.value(x * tau) + shift; };
        if (src.gradient) cf.gradient = [src, tau](Vec2 x) { return src.gradient(x * tau) * tau; };
        for (auto hs : src.hotspots) cf.hotspots.push_back({hs.center / tau, hs.scale / tau});
        return ScalarField::from_closed_form(std::move(grid), std::move(cf));
    }
    const double outer = g.radius();
    auto sample = [&f, tau, shift, outer](Vec2 x) {
        const Vec2 y = x * tau;
        if (std::abs(y.norm() - outer) <= 1e-12 * outer) return f.boundary_value(y) + shift;
        return f.interpolate(y) + shift;
    };
    std::vector<double> v(grid->size(), std::numeric_limits<double>::quiet_NaN());
    for (auto idx : grid->inside_nodes()) v[idx] = sample(grid->point(idx));
    // the trace captures f by value so the result stays valid on its own
    auto trace = [f, tau, shift, outer](Vec2 x) {
        const Vec2 y = x * tau;
        if (std::abs(y.norm() - outer) <= 1e-12 * outer) return f.boundary_value(y) + shift;
        return f.interpolate(y) + shift;
    };
    return ScalarField(std::move(grid), std::move(v), trace);
}

SingularReconstruction singular_part_reconstruct(const ScalarField& f, const PoleConfig& cfg) {
    const auto& g = f.grid();
    const double tol = 1e-9 * g.spacing();
    SingularReconstruction out{f, {}};
    if (cfg.empty()) return out;
    std::vector<double> v(g.size(), std::numeric_limits<double>::quiet_NaN());
    for (auto idx : g.inside_nodes()) {
        const Vec2 x = g.point(idx);
        if (on_pole(x, cfg, tol)) {
            v[idx] = -std::numeric_limits<double>::infinity();
            out.excluded_nodes.push_back(idx);
            continue;
        }
        v[idx] = f[idx] + cfg.log_modulus(x);
    }
    auto trace = [f, cfg](Vec2 x) { return f.boundary_value(x) + cfg.log_modulus(x); };
    out.field = ScalarField(f.grid_ptr(), std::move(v), trace);
    return out;
}

std::size_t origin_node_off_poles(const DiskGrid& grid, const PoleConfig& cfg) {
    const double tol = 1e-9 * grid.spacing();
    const std::size_t o = grid.origin_index();
    if (!on_pole(grid.point(o), cfg, tol)) return o;
    const int c = grid.center();
    std::size_t best = o;
    double best_d = std::numeric_limits<double>::infinity();
    for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
            const std::size_t idx = grid.index(c + di, c + dj);
            if (on_pole(grid.point(idx), cfg, tol)) continue;
            const double d = grid.point(idx).norm();
            if (d < best_d) best_d = d, best = idx;
        }
    return best;
}

} // namespace liouville
