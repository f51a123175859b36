#include "liouville/asymptotics.hpp"
#include "liouville/errors.hpp"
#include "liouville/field_ops.hpp"
#include "liouville/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace liouville {

namespace {

constexpr double eight_pi = 8.0 * pi;
constexpr double inf = std::numeric_limits<double>::infinity();

double density(const WeightSpec& w, Vec2 x, double v) {
    if (v == -inf) return 0.0;
    const double lw = w.log_value(x);
    if (lw == -inf) return 0.0;
    return std::exp(lw + v);
}

bool near_pole(Vec2 x, const PoleConfig& poles, double radius) {
    for (auto p : poles.poles())
        if ((x - p).norm() < radius) return true;
    return false;
}

} // namespace

std::vector<double> geometric_deltas(double r, int levels) {
    if (!(r > 0.0)) throw ConfigError("delta grid radius must be positive");
    if (levels < 1) throw ConfigError("delta grid needs at least one level");
    std::vector<double> d;
    for (int i = 0; i < levels; ++i) d.push_back(std::ldexp(r, -i));
    return d;
}

MassProfile mass_profile(const std::vector<ScalarField>& fields, const std::vector<WeightSpec>& weights,
                         const std::vector<double>& deltas, const std::vector<int>& ks,
                         const std::vector<double>& local_radii) {
    if (fields.size() != weights.size()) throw ConfigError("mass_profile: fields and weights must align in k");
    if (!ks.empty() && ks.size() != fields.size()) throw ConfigError("mass_profile: k labels must align with fields");
    if (!local_radii.empty() && local_radii.size() != fields.size())
        throw ConfigError("mass_profile: local radii must align with fields");
    for (std::size_t i = 1; i < deltas.size(); ++i)
        if (!(deltas[i] < deltas[i - 1])) throw ConfigError("mass_profile: delta grid must decrease strictly");

    MassProfile mp;
    mp.deltas = deltas;
    for (std::size_t k = 0; k < fields.size(); ++k) mp.ks.push_back(ks.empty() ? static_cast<int>(k + 1) : ks[k]);
    for (std::size_t k = 0; k < fields.size(); ++k) {
        std::vector<double> m, e;
        std::vector<bool> fl;
        for (double d : deltas) {
            double v = std::numeric_limits<double>::quiet_NaN(), err = 0.0;
            bool bad = false;
            try {
                const auto q = weighted_mass(fields[k], weights[k], d);
                v = q.value;
                err = q.error;
                bad = !std::isfinite(v) || v < 0.0;
            } catch (const DomainError&) {
                bad = true;
            }
            m.push_back(v);
            e.push_back(err);
            fl.push_back(bad);
        }
        mp.mass.push_back(std::move(m));
        mp.error.push_back(std::move(e));
        mp.flagged.push_back(std::move(fl));
        double mu = std::numeric_limits<double>::quiet_NaN();
        if (!local_radii.empty() && local_radii[k] > 0.0 && local_radii[k] <= fields[k].grid().radius())
            mu = weighted_mass(fields[k], weights[k], local_radii[k]).value;
        mp.local_mass.push_back(mu);
    }
    return mp;
}

const char* to_string(QuantizationVerdict::Status s) {
    switch (s) {
    case QuantizationVerdict::Status::Quantized: return "quantized";
    case QuantizationVerdict::Status::NoBlowUp: return "no-blow-up";
    default: return "inconclusive";
    }
}

QuantizationVerdict estimate_sigma(const MassProfile& mp, double slope_threshold) {
    if (mp.deltas.size() < 4) throw ConfigError("estimate_sigma needs at least 4 delta levels");
    if (mp.mass.size() < 4) throw ConfigError("estimate_sigma needs at least 4 k levels");
    for (std::size_t k = 0; k < mp.mass.size(); ++k) {
        const auto& m = mp.mass[k];
        const double scale = *std::max_element(m.begin(), m.end());
        for (std::size_t i = 1; i < m.size(); ++i) {
            const double slack = 1e-9 * scale + mp.error[k][i] + mp.error[k][i - 1];
            if (m[i] > m[i - 1] + slack)
                throw DataError("mass profile decreases in delta at k = " + std::to_string(mp.ks[k]));
        }
    }
    QuantizationVerdict v;
    const auto& m = mp.mass.back();
    for (std::size_t i = 0; i < m.size(); ++i)
        if (mp.flagged.back()[i]) {
            v.reason = "quadrature flagged at the last k";
            return v;
        }
    const std::size_t levels = m.size();
    std::vector<double> slope(levels - 1);
    for (std::size_t i = 0; i + 1 < levels; ++i) {
        if (!(m[i + 1] > 0.0) || !(m[i] > 0.0)) {
            slope[i] = inf;
            continue;
        }
        slope[i] = std::log(m[i] / m[i + 1]) / std::log(mp.deltas[i] / mp.deltas[i + 1]);
    }
    // widest run of flat slopes, at least two long; ties go to larger delta
    int best_first = -1, best_len = 0;
    for (std::size_t i = 0; i < slope.size();) {
        if (!(std::abs(slope[i]) < slope_threshold)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < slope.size() && std::abs(slope[j]) < slope_threshold) ++j;
        const int len = static_cast<int>(j - i);
        if (len > best_len) best_len = len, best_first = static_cast<int>(i);
        i = j;
    }
    if (best_len >= 2) {
        v.window_first = best_first;
        v.window_last = best_first + best_len;
        for (int i = best_first; i < v.window_last; ++i) v.plateau_slope = std::max(v.plateau_slope, std::abs(slope[i]));
        v.sigma = m[best_first];
        v.n = static_cast<int>(std::lround(v.sigma / eight_pi));
        v.residual = std::abs(v.sigma - eight_pi * v.n) / eight_pi;
        v.status = v.n >= 1 ? QuantizationVerdict::Status::Quantized : QuantizationVerdict::Status::NoBlowUp;
        v.reason = "plateau over delta levels " + std::to_string(v.window_first) + ".." + std::to_string(v.window_last);
        return v;
    }
    const double last_slope = slope.back();
    if (last_slope >= 1.0 && m.back() < 0.01 * eight_pi) {
        v.status = QuantizationVerdict::Status::NoBlowUp;
        v.sigma = m.back();
        v.n = 0;
        v.residual = v.sigma / eight_pi;
        v.plateau_slope = last_slope;
        v.reason = "mass vanishes with delta";
        return v;
    }
    v.sigma = m.back();
    v.reason = "no plateau with slope below threshold";
    return v;
}

PohozaevCheck pohozaev_relation_check(const ScalarField& f, const WeightSpec& w, double r_in, double r_out,
                                      int alpha) {
    const auto& g = f.grid();
    if (!(r_in > 0.0 && r_in < r_out)) throw DomainError("pohozaev_relation_check: need 0 < r_in < r_out");
    if (r_out > g.radius()) throw DomainError("pohozaev_relation_check: r_out exceeds the grid radius");
    PohozaevCheck c;
    c.r_in = r_in;
    c.r_out = r_out;
    if (!f.has_closed_form()) {
        const double h = g.spacing();
        for (double* r : {&c.r_in, &c.r_out})
            for (auto p : w.poles().poles())
                if (std::abs(p.norm() - *r) < 0.5 * h) {
                    *r = std::min(*r + 0.5 * h, g.radius());
                    c.radius_perturbed = true;
                }
    }
    const auto outer = weighted_mass(f, w, c.r_out);
    const auto inner = weighted_mass(f, w, c.r_in);
    c.m_hat = outer.value / (2.0 * pi);
    c.mu_hat = inner.value / (2.0 * pi);
    c.algebraic_defect = pohozaev_algebraic_defect(c.m_hat, c.mu_hat, alpha);

    const auto fo = pohozaev_boundary_functional(f, w, c.r_out);
    const auto fi = pohozaev_boundary_functional(f, w, c.r_in);
    c.lhs = fo.value - fi.value;

    QuadratureResult rhs;
    if (f.has_closed_form()) {
        const auto& cf = f.closed_form();
        auto integrand = [&](Vec2 x) {
            const double d = density(w, x, cf.value(x));
            return d == 0.0 ? 0.0 : d * (2.0 + w.radial_log_derivative(x));
        };
        rhs = integrate_annulus(integrand, c.r_in, c.r_out, combined_hotspots(f, w));
    } else {
        const auto wo = node_area_weights(g, c.r_out);
        const auto wi = node_area_weights(g, c.r_in);
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            const double a = wo[idx] - wi[idx];
            if (a <= 0.0) continue;
            const Vec2 x = g.point(idx);
            const double d = density(w, x, f.extended_value(idx));
            if (d > 0.0) rhs.value += a * d * (2.0 + w.radial_log_derivative(x));
        }
        rhs.error = 0.0;
    }
    c.rhs = rhs.value;
    c.identity_defect = c.lhs - c.rhs;
    c.tolerance = fo.error + fi.error + rhs.error;
    return c;
}

FarFieldFit gradient_far_field_check(const ScalarField& f, const std::vector<double>& radii, int samples) {
    if (radii.empty()) throw ConfigError("gradient_far_field_check needs at least one radius");
    std::vector<Vec2> xs, gs;
    for (double rho : radii) {
        if (!(rho > 0.0) || rho > f.grid().radius()) throw DomainError("far-field radius outside the grid");
        for (int k = 0; k < samples; ++k) {
            const double t = 2.0 * pi * k / samples;
            const Vec2 x{rho * std::cos(t), rho * std::sin(t)};
            xs.push_back(x);
            gs.push_back(f.gradient_at(x));
        }
    }
    // least squares for grad = -mu x / |x|^2
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Vec2 b = xs[i] / xs[i].norm2();
        num -= dot(gs[i], b);
        den += b.norm2();
    }
    FarFieldFit fit;
    fit.mu_hat = num / den;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Vec2 b = xs[i] / xs[i].norm2();
        fit.defect = std::max(fit.defect, (gs[i] + b * fit.mu_hat).norm() * xs[i].norm2());
    }
    return fit;
}

PeakValue peak_value(const ScalarField& f, const PoleConfig& poles) {
    const auto& g = f.grid();
    PeakValue pv;
    pv.node = origin_node_off_poles(g, poles);
    pv.node_value = f[pv.node];
    pv.value = pv.node_value;
    pv.location = g.point(pv.node);
    const int ci = g.column(pv.node), cj = g.row(pv.node);
    Eigen::Matrix<double, 9, 6> a;
    Eigen::Matrix<double, 9, 1> b;
    int row = 0;
    for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
            const int i = ci + di, j = cj + dj;
            if (i < 0 || j < 0 || i >= g.n() || j >= g.n() || !g.inside(i, j)) return pv;
            const double v = f[g.index(i, j)];
            if (!std::isfinite(v)) return pv;
            a.row(row) << 1.0, di, dj, di * di, di * dj, dj * dj;
            b[row] = v;
            ++row;
        }
    const Eigen::Matrix<double, 6, 1> c = a.colPivHouseholderQr().solve(b);
    Eigen::Matrix2d hess;
    hess << 2.0 * c[3], c[4], c[4], 2.0 * c[5];
    const double det = hess.determinant();
    if (!(hess(0, 0) < 0.0 && det > 0.0)) return pv;
    const Eigen::Vector2d s = hess.lu().solve(Eigen::Vector2d(-c[1], -c[2]));
    if (std::abs(s[0]) > 1.0 || std::abs(s[1]) > 1.0) return pv;
    const double fitted =
        c[0] + c[1] * s[0] + c[2] * s[1] + c[3] * s[0] * s[0] + c[4] * s[0] * s[1] + c[5] * s[1] * s[1];
    // a peak too sharp for the stencil fits badly; keep the node then
    const double misfit = (a * c - b).cwiseAbs().maxCoeff();
    const double drop = pv.node_value - b.minCoeff();
    if (fitted < pv.node_value || misfit > 0.05 * drop) return pv;
    pv.value = fitted;
    pv.location = pv.location + Vec2{s[0], s[1]} * g.spacing();
    return pv;
}

double circle_min(const ScalarField& f, double rho) {
    double m = inf;
    if (f.has_closed_form()) {
        for (int k = 0; k < 256; ++k) {
            const double t = 2.0 * pi * k / 256;
            m = std::min(m, f.closed_form().value({rho * std::cos(t), rho * std::sin(t)}));
        }
        return m;
    }
    for (double v : circle_samples(f, rho)) m = std::min(m, v);
    return m;
}

EnergyCheck energy_identity_check(const ScalarField& f, const WeightSpec& w, double r) {
    EnergyCheck e;
    const double w0 = w({0.0, 0.0});
    if (!(w0 > 0.0)) {
        e.applicable = false;
        return e;
    }
    e.energy = dirichlet_energy(f, r);
    e.peak = peak_value(f, w.poles()).value;
    e.defect = e.energy - 16.0 * pi * (e.peak + std::log(w0));
    return e;
}

double profile_residual(const ScalarField& f, double w0, double r, const PoleConfig& exclude) {
    if (!(w0 > 0.0)) throw DomainError("profile_residual needs W0 > 0");
    const auto& g = f.grid();
    const double xi0 = peak_value(f, exclude).value;
    const double amp = std::exp(xi0) * w0 / 8.0;
    double worst = 0.0;
    for (auto idx : g.inside_nodes()) {
        const Vec2 x = g.point(idx);
        if (x.norm() > r) continue;
        if (near_pole(x, exclude, 2.0 * g.spacing())) continue;
        const double profile = xi0 - 2.0 * std::log1p(amp * x.norm2());
        worst = std::max(worst, std::abs(f[idx] - profile));
    }
    return worst;
}

PointwiseBound pointwise_upper_bound_check(const ScalarField& f, double r, double eps, double inner_radius) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("pointwise bound needs eps in (0, 1)");
    const auto& g = f.grid();
    PointwiseBound pb;
    pb.c_upper = -inf;
    const double base = circle_min(f, r);
    for (auto idx : g.inside_nodes()) {
        const Vec2 x = g.point(idx);
        const double d = x.norm();
        if (d < inner_radius || d > r || d == 0.0) continue;
        const double v = f[idx] - base;
        pb.c_upper = std::max(pb.c_upper, v - (4.0 + eps) * std::log(1.0 / d));
        pb.c_two_sided = std::max(pb.c_two_sided, std::abs(v - 4.0 * std::log(1.0 / d)));
        ++pb.nodes;
    }
    if (pb.nodes == 0) {
        pb.applicable = false;
        pb.c_upper = 0.0;
    }
    return pb;
}

double boundary_oscillation(const ScalarField& f, double rho) {
    double lo = inf, hi = -inf;
    for (int k = 0; k < 256; ++k) {
        const double t = 2.0 * pi * k / 256;
        const Vec2 x{rho * std::cos(t), rho * std::sin(t)};
        double v;
        if (f.has_closed_form())
            v = f.closed_form().value(x);
        else if (std::abs(rho - f.grid().radius()) <= 1e-12 * rho)
            v = f.boundary_value(x);
        else
            v = f.interpolate(x);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(rho > 0.0) || rho > f.grid().radius() * (1.0 + 1e-12))
        throw DomainError("boundary_oscillation: circle outside the grid");
    return hi - lo;
}

PeakRelation peak_boundary_relation(const ScalarField& f, const WeightSpec& w, double r) {
    PeakRelation pr;
    const double w0 = w({0.0, 0.0});
    if (!(w0 > 0.0)) {
        pr.applicable = false;
        return pr;
    }
    pr.defect = peak_value(f, w.poles()).value + circle_min(f, r) + 2.0 * std::log(w0);
    return pr;
}

TrendFit fit_trend(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("trend fit needs two or more aligned points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    TrendFit t;
    t.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    t.intercept = my - t.slope * mx;
    t.monotone_increasing = true;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (!(y[i] > y[i - 1])) t.monotone_increasing = false;
    return t;
}

std::vector<std::vector<Vec2>> pole_trajectories(const CollapsingFamily& family) {
    const auto& rules = family.rule.poles;
    std::vector<std::vector<Vec2>> traj(rules.size());
    for (std::size_t j = 0; j < rules.size(); ++j)
        for (const auto& m : family.members)
            traj[j].push_back(rules[j].direction *
                              (rules[j].coefficient * std::pow(static_cast<double>(m.k), -rules[j].exponent)));
    std::vector<std::size_t> order(traj.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return traj[a].back().norm() < traj[b].back().norm(); });
    std::vector<std::vector<Vec2>> out;
    for (auto j : order) out.push_back(traj[j]);
    return out;
}

CascadeReport detect_cascade(const std::vector<std::vector<Vec2>>& traj, const std::vector<int>& ks) {
    const std::size_t s = traj.size();
    if (s == 0) throw ConfigError("detect_cascade needs at least one pole");
    if (ks.size() < 4) throw ConfigError("detect_cascade needs K >= 4");
    for (const auto& t : traj)
        if (t.size() != ks.size()) throw ConfigError("detect_cascade: trajectory length differs from K");
    const std::size_t K = ks.size();
    for (std::size_t j = 1; j < s; ++j)
        if (traj[j].back().norm() < traj[j - 1].back().norm())
            throw ConfigError("detect_cascade: poles must be sorted by modulus at the last k");

    CascadeReport rep;
    rep.s = static_cast<int>(s);
    std::vector<double> lk;
    for (int k : ks) lk.push_back(std::log(static_cast<double>(k)));
    for (const auto& t : traj) {
        std::vector<double> lm;
        for (auto p : t) lm.push_back(std::log(p.norm()));
        rep.exponents.push_back(std::isfinite(lm.front()) ? -fit_trend(lk, lm).slope : inf);
    }

    rep.group.assign(s, 0);
    for (std::size_t j = 0; j + 1 < s; ++j) {
        std::vector<double> ratio;
        for (std::size_t k = 0; k < K; ++k) {
            const double lo = traj[j][k].norm(), hi = traj[j + 1][k].norm();
            ratio.push_back(lo > 0.0 ? hi / lo : inf);
        }
        bool same = false, split = false;
        if (std::isfinite(ratio[K - 1]) && std::isfinite(ratio[K - 2])) {
            const double change = std::abs(ratio[K - 1] - ratio[K - 2]) / ratio[K - 1];
            if (change < 1e-3) same = true;
        }
        if (!same) {
            bool finite = true, increasing = true;
            for (std::size_t k = 0; k < K; ++k) {
                if (!std::isfinite(ratio[k])) finite = false;
                if (k > 0 && !(ratio[k] > ratio[k - 1])) increasing = false;
            }
            if (!finite) {
                split = true;  // a pole sitting at the origin collapses faster than any power
            } else {
                std::vector<double> lr;
                for (double r : ratio) lr.push_back(std::log(r));
                split = increasing && fit_trend(lk, lr).slope >= 0.1;
            }
        }
        const bool confident = same || split;
        rep.boundary_confident.push_back(confident);
        if (!confident) rep.resolved = false;
        rep.group[j + 1] = rep.group[j] + (same ? 0 : 1);
    }

    rep.s1 = static_cast<int>(std::count(rep.group.begin(), rep.group.end(), 0));
    rep.s1_below_two = rep.s1 < 2;
    const std::size_t crit = static_cast<std::size_t>(rep.s1 - 1);
    for (std::size_t k = 0; k < K; ++k) rep.eps.push_back(traj[crit][k].norm());
    const double eps = rep.eps.back();
    const double outer = traj[s - 1].back().norm();
    for (std::size_t j = 0; j < s; ++j) {
        const Vec2 p = traj[j].back();
        if (j < crit + 1) {
            const Vec2 z = eps > 0.0 ? p / eps : Vec2{};
            if (z.norm() <= 1e-8) rep.z_below_floor = true;
            rep.z.push_back(z);
        }
        rep.q.push_back(outer > 0.0 ? p / outer : Vec2{});
        rep.diverges.push_back(rep.group[j] > 0);
    }
    return rep;
}

CascadeReport detect_cascade(const CollapsingFamily& family) {
    std::vector<int> ks;
    for (const auto& m : family.members) ks.push_back(m.k);
    return detect_cascade(pole_trajectories(family), ks);
}

DivergenceTrend peak_scale_divergence_check(const std::vector<double>& peaks, const CollapsingFamily& family,
                                            const CascadeReport& cascade) {
    if (peaks.size() != family.members.size()) throw ConfigError("peak values must align with the family");
    if (cascade.eps.size() != peaks.size()) throw ConfigError("cascade report must align with the family");
    DivergenceTrend out;
    std::vector<double> lk;
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        const auto& m = family.members[i];
        double v = peaks[i] + 2.0 * std::log(cascade.eps[i]);
        for (std::size_t j = 0; j < m.poles.size(); ++j)
            v += 2.0 * m.poles.multiplicities()[j] * std::log(m.poles.poles()[j].norm());
        out.values.push_back(v);
        lk.push_back(std::log(static_cast<double>(m.k)));
    }
    out.fit = fit_trend(lk, out.values);
    return out;
}

LadderVerdict total_mass_ladder_check(const ScalarField& f, const WeightSpec& w, const std::vector<double>& betas,
                                      double tolerance) {
    if (!f.has_closed_form()) throw ConfigError("total_mass_ladder_check needs a closed-form field");
    LadderVerdict lv;
    const auto& cf = f.closed_form();
    auto integrand = [&](Vec2 x) { return density(w, x, cf.value(x)); };
    const auto spots = combined_hotspots(f, w);
    double radius = f.grid().radius();
    double total = integrate_disk(integrand, radius, spots).value;
    double prev_ring = -1.0;
    int growing = 0;
    for (int it = 0; it < 80; ++it) {
        const double ring = integrate_annulus(integrand, radius, 2.0 * radius, spots).value;
        total += ring;
        radius *= 2.0;
        if (prev_ring > 0.0) {
            const double q = ring / prev_ring;
            if (q >= 1.0) {
                if (++growing >= 3) {
                    lv.applicable = false;
                    lv.reason = "mass in doubling rings does not decay";
                    break;
                }
            } else {
                growing = 0;
                const double tail = ring * q / (1.0 - q);
                if (tail < 1e-4 * total) {
                    total += tail;
                    lv.outer_radius = radius;
                    break;
                }
            }
        }
        prev_ring = ring;
    }
    lv.total = total;
    if (lv.applicable && lv.outer_radius == 0.0) {
        lv.applicable = false;
        lv.reason = "tail did not fall below 1e-4 of the total";
    }
    if (!lv.applicable) return lv;
    const double beta = std::accumulate(betas.begin(), betas.end(), 0.0);
    lv.sigma = total / (4.0 * pi) - beta - 1.0;
    lv.n = static_cast<int>(std::lround(total / eight_pi));
    lv.residual = std::abs(total - eight_pi * lv.n) / eight_pi;
    lv.on_ladder = lv.n >= 1 && lv.residual < tolerance;
    lv.boundary_case = std::abs(lv.sigma - 1.0) < 2.0 * tolerance;
    lv.reason = lv.sigma > 1.0 + 2.0 * tolerance ? "sigma > 1" : lv.boundary_case ? "boundary case sigma = 1" : "sigma < 1";
    return lv;
}

} // namespace liouville
