#include "liouville/lab.hpp"
#include "liouville/errors.hpp"
#include "liouville/field_ops.hpp"
#include "liouville/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace liouville {

using nlohmann::json;

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

ClosedForm shifted(ClosedForm cf, double shift) {
    if (shift == 0.0) return cf;
    auto base = cf.value;
    cf.value = [base, shift](Vec2 x) { return base(x) + shift; };
    return cf;
}

std::shared_ptr<const DiskGrid> grid_for(const ExperimentConfig& c) {
    return std::make_shared<const DiskGrid>(c.grid_r, c.grid_n);
}

// concentration scale of the member's bubble
double bubble_scale(const LabMember& m) {
    if (!(m.lambda > 0.0)) return 0.0;
    return std::pow(m.lambda, -1.0 / (1.0 + m.alpha_total));
}

std::string field_file(const std::string& dir, const std::string& source, int k) {
    return (std::filesystem::path(dir) / "fields" / (source + "_k" + std::to_string(k) + ".csv")).string();
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

json verdict_to_json(const QuantizationVerdict& v) {
    return {{"status", to_string(v.status)},
            {"sigma", number_or_null(v.sigma)},
            {"n", v.n},
            {"residual", number_or_null(v.residual)},
            {"plateau_slope", number_or_null(v.plateau_slope)},
            {"window", {v.window_first, v.window_last}},
            {"reason", v.reason}};
}

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

json poles_json(const PoleConfig& p) {
    json out = json::array();
    for (std::size_t j = 0; j < p.size(); ++j)
        out.push_back({{"x", p.poles()[j].x}, {"y", p.poles()[j].y}, {"multiplicity", p.multiplicities()[j]}});
    return out;
}

json manifest_base(const ExperimentConfig& c, const std::string& command) {
    return {{"schema", config_schema}, {"command", command}, {"config", config_to_json(c)}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

} // namespace

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<LabMember> build_members(const ExperimentConfig& c) {
    c.validate();
    const auto fam = make_family(c.rule);
    const double shift = -std::log(c.amplitude);
    std::vector<LabMember> out;
    for (const auto& fm : fam.members) {
        LabMember m;
        m.k = fm.k;
        m.lambda = fm.lambda;
        switch (c.kind) {
        case ExperimentConfig::FamilyKind::Developing:
            m.poles = fm.poles;
            m.tau = fm.tau;
            for (int a : fm.poles.multiplicities()) m.alpha_total += a;
            m.exact = shifted(developing_map_form(fm.map), shift);
            break;
        case ExperimentConfig::FamilyKind::Bubble:
            if (c.bubble_alpha > 0) m.poles = PoleConfig({Vec2{0.0, 0.0}}, {c.bubble_alpha});
            m.alpha_total = c.bubble_alpha;
            m.exact = shifted(radial_bubble_form(c.bubble_alpha, fm.lambda), shift);
            break;
        case ExperimentConfig::FamilyKind::Constant: {
            const double v = c.constant_value;
            m.exact = ClosedForm{[v](Vec2) { return v; }, [](Vec2) { return Vec2{}; }, {}};
            break;
        }
        }
        m.weight = WeightSpec(m.poles, SmoothFactor::constant_one(), c.amplitude);
        out.push_back(std::move(m));
    }
    return out;
}

void attach_exact_fields(std::vector<LabMember>& members, const ExperimentConfig& c) {
    auto g = grid_for(c);
    for (auto& m : members) {
        m.field = ScalarField::from_closed_form(g, *m.exact);
        m.source = "exact";
    }
}

SolveRun solve_members(std::vector<LabMember>& members, const ExperimentConfig& c, int jobs) {
    auto g = grid_for(c);
    NewtonParams np;
    np.tolerance = c.newton_tolerance;
    np.max_iterations = c.newton_max_iterations;
    np.continuation = c.continuation;
    SolveRun run;
    run.records.resize(members.size());
    std::vector<std::optional<ScalarField>> fields(members.size());
    parallel_for(members.size(), jobs, [&](std::size_t i) {
        const auto& m = members[i];
        BoundaryTrace trace;
        if (c.boundary == "exact") {
            trace = m.exact->value;
        } else {
            const double v = c.boundary_value;
            trace = [v](Vec2) { return v; };
        }
        std::optional<ScalarField> guess;
        if (c.guess == "perturbed" && c.boundary == "exact") {
            const auto exact = m.exact->value;
            const double bump = c.guess_bump, r2 = c.grid_r * c.grid_r;
            guess = ScalarField::sampled(g, [&](Vec2 x) { return exact(x) + bump * (1.0 - x.norm2() / r2); });
        }
        DirichletProblem p{m.weight, trace, g, guess, {}};
        const auto poles = m.poles;
        const double amp = c.amplitude;
        p.homotopy = [=](double t) {
            return DirichletProblem{WeightSpec(poles, SmoothFactor::constant_one(), t * amp), trace, g, std::nullopt, {}};
        };
        auto res = solve_dirichlet(p, np);
        fields[i] = std::move(res.field);
        run.records[i] = std::move(res.record);
    });
    for (std::size_t i = 0; i < members.size(); ++i) {
        members[i].field = std::move(fields[i]);
        members[i].source = "solve";
        if (!run.records[i].converged) ++run.failures;
    }
    return run;
}

DiagnosticsReport diagnose(const std::vector<LabMember>& members, const ExperimentConfig& c, int jobs) {
    DiagnosticsReport rep;
    rep.config = c;
    const double r = c.grid_r;
    rep.deltas = geometric_deltas(c.delta_r > 0.0 ? c.delta_r : r, c.delta_levels);

    std::optional<CollapsingFamily> family;
    if (c.kind == ExperimentConfig::FamilyKind::Developing && !c.rule.poles.empty()) {
        family = make_family(c.rule);
        if (c.wants("cascade")) rep.cascade = detect_cascade(*family);
    }

    rep.members.resize(members.size());
    parallel_for(members.size(), jobs, [&](std::size_t i) {
        const auto& m = members[i];
        if (!m.field) throw DataError("member k = " + std::to_string(m.k) + " has no field");
        const auto& f = *m.field;
        auto& d = rep.members[i];
        d.k = m.k;
        d.tau = m.tau;
        d.lambda = m.lambda;
        if (rep.cascade) d.eps = rep.cascade->eps[i];
        const double scale = std::max(std::isfinite(d.eps) ? d.eps : 0.0, bubble_scale(m));

        if (c.wants("mass"))
            for (double delta : rep.deltas) {
                try {
                    const auto q = weighted_mass(f, m.weight, delta);
                    d.mass.push_back(q.value);
                    d.mass_error.push_back(q.error);
                } catch (const std::exception&) {
                    d.mass.push_back(nan_v);
                    d.mass_error.push_back(nan_v);
                }
            }
        d.peak = peak_value(f, m.poles).value;
        d.circle_min = circle_min(f, r);
        d.w0 = m.weight({0.0, 0.0});
        // a diagnostic outside its domain is noted and skipped; the rest of the report stands
        auto guard = [&](const char* name, auto fn) {
            if (!c.wants(name)) return;
            try {
                fn();
            } catch (const DomainError& e) {
                d.notes.push_back(std::string(name) + ": " + e.what());
            }
        };
        guard("energy", [&] { d.energy = energy_identity_check(f, m.weight, r); });
        guard("profile", [&] {
            if (d.w0 > 0.0) d.profile = profile_residual(f, d.w0, r, m.poles);
        });
        guard("peak", [&] { d.peak_relation = peak_boundary_relation(f, m.weight, r); });
        guard("oscillation", [&] { d.oscillation = boundary_oscillation(f, r); });
        guard("pointwise", [&] {
            const double inner = c.exclusion_l0 * scale;
            if (inner < r) d.pointwise = pointwise_upper_bound_check(f, r, c.pointwise_eps, inner);
            else d.pointwise = PointwiseBound{false, 0.0, 0.0, 0};
        });
        guard("pohozaev", [&] {
            // grid circles need a few cells of room for the boundary functional
            const double floor = f.has_closed_form() ? 0.0 : 3.0 * f.grid().spacing();
            const double r_in = std::max(10.0 * std::max(m.tau, scale), floor), r_out = 0.5 * r;
            if (r_in > 0.0 && r_in < r_out) d.pohozaev = pohozaev_relation_check(f, m.weight, r_in, r_out, m.alpha_total);
            else d.notes.push_back("pohozaev: annulus empty at this scale");
        });
        guard("green", [&] {
            const auto gd = green_decompose(f, m.weight);
            d.green_defect = max_norm(f.grid(), laplacian(gd.remainder).values());
            if (f.has_closed_form()) {
                // an exact field carries its discretization residual into psi
                d.green_tolerance = max_norm(f.grid(), pde_residual(f, m.weight));
            } else {
                double peak_density = 1.0;
                for (auto idx : f.grid().inside_nodes())
                    peak_density = std::max(peak_density, m.weight(f.grid().point(idx)) * std::exp(f[idx]));
                d.green_tolerance = c.newton_tolerance * peak_density + gd.linear_residual;
            }
        });
        if (m.exact && !f.has_closed_form()) {
            double e = 0.0;
            for (auto idx : f.grid().inside_nodes())
                e = std::max(e, std::abs(f[idx] - m.exact->value(f.grid().point(idx))));
            d.exact_error = e;
        }
    });

    if (c.wants("mass")) {
        MassProfile mp;
        mp.deltas = rep.deltas;
        for (const auto& d : rep.members) {
            mp.ks.push_back(d.k);
            mp.mass.push_back(d.mass);
            mp.error.push_back(d.mass_error);
            std::vector<bool> fl;
            for (double v : d.mass) fl.push_back(!std::isfinite(v));
            mp.flagged.push_back(fl);
        }
        try {
            rep.verdict = estimate_sigma(mp, c.plateau_slope);
        } catch (const std::exception& e) {
            QuantizationVerdict v;
            v.reason = e.what();
            rep.verdict = v;
        }
    }
    if (family && rep.cascade && c.wants("peak")) {
        std::vector<double> peaks;
        for (const auto& d : rep.members) peaks.push_back(d.peak);
        rep.divergence = peak_scale_divergence_check(peaks, *family, *rep.cascade);
    }

    std::vector<double> lk;
    for (const auto& d : rep.members) lk.push_back(std::log(static_cast<double>(d.k)));
    auto trend = [&](const std::string& name, auto get) {
        std::vector<double> y;
        for (const auto& d : rep.members) {
            const auto v = get(d);
            if (!v || !std::isfinite(*v)) return;
            y.push_back(*v);
        }
        if (y.size() >= 2) rep.trends.emplace_back(name, fit_trend(lk, y));
    };
    using OD = std::optional<double>;
    trend("energy_defect", [](const MemberDiagnostics& d) {
        return d.energy && d.energy->applicable ? OD(d.energy->defect) : OD();
    });
    trend("profile_residual", [](const MemberDiagnostics& d) { return d.profile; });
    trend("peak_relation", [](const MemberDiagnostics& d) {
        return d.peak_relation && d.peak_relation->applicable ? OD(d.peak_relation->defect) : OD();
    });
    trend("oscillation", [](const MemberDiagnostics& d) { return d.oscillation; });
    trend("pointwise_c", [](const MemberDiagnostics& d) {
        return d.pointwise && d.pointwise->applicable ? OD(d.pointwise->c_upper) : OD();
    });
    return rep;
}

json cascade_to_json(const CascadeReport& c) {
    json z = json::array(), q = json::array(), conf = json::array(), div = json::array();
    for (auto v : c.z) z.push_back(vec_json(v));
    for (auto v : c.q) q.push_back(vec_json(v));
    for (bool b : c.boundary_confident) conf.push_back(b);
    for (bool b : c.diverges) div.push_back(b);
    json exps = json::array();
    for (double e : c.exponents) exps.push_back(number_or_null(e));
    json eps = json::array();
    for (double e : c.eps) eps.push_back(number_or_null(e));
    return {{"s", c.s},
            {"s1", c.s1},
            {"resolved", c.resolved},
            {"s1_below_two", c.s1_below_two},
            {"z_below_floor", c.z_below_floor},
            {"group", c.group},
            {"boundary_confident", conf},
            {"exponents", exps},
            {"eps", eps},
            {"z", z},
            {"q", q},
            {"diverges", div}};
}

json report_to_json(const DiagnosticsReport& r) {
    const auto& c = r.config;
    json j = manifest_base(c, "diagnose");
    const double h = 2.0 * c.grid_r / (c.grid_n - 1);
    j["tolerances"] = {{"grid_n", c.grid_n},
                       {"grid_h", h},
                       {"quadrature_relative", QuadratureTolerance{}.relative},
                       {"newton", c.newton_tolerance},
                       {"plateau_slope", c.plateau_slope},
                       {"pointwise_eps", c.pointwise_eps},
                       {"exclusion_l0", c.exclusion_l0}};
    j["deltas"] = r.deltas;
    json rows = json::array();
    for (const auto& d : r.members) {
        json row{{"k", d.k},
                 {"tau", d.tau},
                 {"eps", number_or_null(d.eps)},
                 {"lambda", d.lambda},
                 {"peak", d.peak},
                 {"circle_min", d.circle_min},
                 {"w0", d.w0}};
        if (!d.mass.empty()) {
            json ms = json::array();
            for (std::size_t i = 0; i < d.mass.size(); ++i)
                ms.push_back({{"delta", r.deltas[i]}, {"value", number_or_null(d.mass[i])},
                              {"error", number_or_null(d.mass_error[i])}});
            row["mass"] = ms;
        }
        if (d.energy)
            row["energy"] = {{"applicable", d.energy->applicable}, {"energy", d.energy->energy},
                             {"peak", d.energy->peak}, {"defect", d.energy->defect}};
        if (d.profile) row["profile_residual"] = *d.profile;
        if (d.peak_relation)
            row["peak_relation"] = {{"applicable", d.peak_relation->applicable}, {"defect", d.peak_relation->defect}};
        if (d.oscillation) row["oscillation"] = *d.oscillation;
        if (d.pointwise)
            row["pointwise"] = {{"applicable", d.pointwise->applicable}, {"c_upper", d.pointwise->c_upper},
                                {"c_two_sided", d.pointwise->c_two_sided}, {"nodes", d.pointwise->nodes}};
        if (d.pohozaev) {
            const auto& p = *d.pohozaev;
            row["pohozaev"] = {{"r_in", p.r_in}, {"r_out", p.r_out}, {"m_hat", p.m_hat}, {"mu_hat", p.mu_hat},
                               {"algebraic_defect", p.algebraic_defect}, {"lhs", p.lhs}, {"rhs", p.rhs},
                               {"identity_defect", p.identity_defect}, {"tolerance", p.tolerance},
                               {"radius_perturbed", p.radius_perturbed}};
        }
        if (d.green_defect)
            row["green"] = {{"harmonic_defect", *d.green_defect}, {"tolerance", *d.green_tolerance}};
        if (d.exact_error) row["exact_error"] = *d.exact_error;
        if (!d.notes.empty()) row["notes"] = d.notes;
        rows.push_back(row);
    }
    j["members"] = rows;
    if (r.verdict) j["verdict"] = verdict_to_json(*r.verdict);
    if (r.cascade) j["cascade"] = cascade_to_json(*r.cascade);
    if (r.divergence)
        j["divergence"] = {{"values", r.divergence->values}, {"slope", r.divergence->fit.slope},
                           {"monotone_increasing", r.divergence->fit.monotone_increasing}};
    json trends = json::object();
    for (const auto& [name, t] : r.trends)
        trends[name] = {{"slope", t.slope}, {"intercept", t.intercept}, {"monotone_increasing", t.monotone_increasing},
                        {"bounded", std::abs(t.slope) < 0.05}};
    j["trends"] = trends;
    return j;
}

std::vector<std::string> report_csv_columns(int levels) {
    std::vector<std::string> cols{"k", "tau", "eps", "lambda"};
    for (int i = 0; i < levels; ++i) cols.push_back("M_" + std::to_string(i));
    for (const char* s : {"sigma_hat", "n", "residual", "energy_defect", "profile_residual", "peak_relation",
                          "oscillation", "pohozaev_algebraic", "pohozaev_identity", "green_defect", "pointwise_c"})
        cols.push_back(s);
    return cols;
}

void write_report_csv(std::ostream& os, const DiagnosticsReport& r) {
    const auto cols = report_csv_columns(static_cast<int>(r.deltas.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    auto num = [](std::optional<double> v) { return v ? format_number(*v) : std::string("nan"); };
    for (const auto& d : r.members) {
        os << d.k << ',' << format_number(d.tau) << ',' << format_number(d.eps) << ',' << format_number(d.lambda);
        for (std::size_t i = 0; i < r.deltas.size(); ++i)
            os << ',' << (i < d.mass.size() ? format_number(d.mass[i]) : "nan");
        if (r.verdict)
            os << ',' << format_number(r.verdict->sigma) << ',' << r.verdict->n << ','
               << format_number(r.verdict->residual);
        else
            os << ",nan,nan,nan";
        os << ',' << num(d.energy && d.energy->applicable ? std::optional(d.energy->defect) : std::nullopt);
        os << ',' << num(d.profile);
        os << ',' << num(d.peak_relation && d.peak_relation->applicable ? std::optional(d.peak_relation->defect)
                                                                         : std::nullopt);
        os << ',' << num(d.oscillation);
        os << ',' << num(d.pohozaev ? std::optional(d.pohozaev->algebraic_defect) : std::nullopt);
        os << ',' << num(d.pohozaev ? std::optional(d.pohozaev->identity_defect) : std::nullopt);
        os << ',' << num(d.green_defect);
        os << ',' << num(d.pointwise && d.pointwise->applicable ? std::optional(d.pointwise->c_upper) : std::nullopt);
        os << "\n";
    }
}

std::vector<std::string> sweep_csv_columns(int levels) {
    std::vector<std::string> cols{"run", "parameter", "value", "k", "tau", "lambda"};
    for (int i = 0; i < levels; ++i) cols.push_back("M_" + std::to_string(i));
    for (const char* s : {"sigma_hat", "n", "residual", "status"}) cols.push_back(s);
    return cols;
}

ExperimentConfig sweep_variant(const ExperimentConfig& base, double value) {
    ExperimentConfig c = base;
    if (base.sweep_parameter == "lambda0") {
        c.rule.lambda.lambda0 = value;
    } else if (base.sweep_parameter == "degree") {
        const int d = static_cast<int>(std::lround(value));
        if (d < 1 || std::abs(d - value) > 1e-12) throw ConfigError("sweep.values: degree must be a positive integer");
        if (base.kind != ExperimentConfig::FamilyKind::Developing)
            throw ConfigError("sweep.parameter: degree sweeps need a developing family");
        // d - 1 simple poles on a ring, sharing the first rule's rate
        PoleRule proto;
        proto.coefficient = 0.05;
        if (!base.rule.poles.empty()) proto = base.rule.poles.front();
        c.rule.poles.clear();
        for (int j = 0; j + 1 < d; ++j) {
            const double t = 2.0 * pi * j / std::max(1, d - 1) + 0.4;
            PoleRule p = proto;
            p.direction = {std::cos(t), std::sin(t)};
            p.multiplicity = 1;
            c.rule.poles.push_back(p);
        }
    } else {
        throw ConfigError("sweep.parameter: missing");
    }
    c.sweep_parameter.clear();
    c.sweep_values.clear();
    c.validate();
    return c;
}

namespace {

int cmd_generate(const ExperimentConfig& c, const CommandOptions& o, std::ostream& log) {
    if (c.mode == ExperimentConfig::Mode::Solve) throw ConfigError("mode: generate needs mode exact or both");
    auto members = build_members(c);
    attach_exact_fields(members, c);
    json mem = json::array();
    for (const auto& m : members) {
        const auto path = field_file(c.output, "exact", m.k);
        write_field_csv(path, *m.field, {m.k, "exact", c.grid_n, c.grid_r});
        mem.push_back({{"k", m.k}, {"tau", m.tau}, {"lambda", m.lambda}, {"poles", poles_json(m.poles)},
                       {"file", std::filesystem::path(path).lexically_relative(c.output).string()}});
    }
    json man = manifest_base(c, "generate");
    man["members"] = mem;
    write_text_file(join(c.output, "manifest.json"), dump(man));
    log << "generate: wrote " << members.size() << " fields to " << c.output << "\n";
    (void)o;
    return exit_ok;
}

int cmd_solve(const ExperimentConfig& c, const CommandOptions& o, std::ostream& log) {
    if (c.mode == ExperimentConfig::Mode::Exact) throw ConfigError("mode: solve needs mode solve or both");
    auto members = build_members(c);
    auto run = solve_members(members, c, o.jobs);
    std::string lines;
    json mem = json::array();
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& m = members[i];
        const auto path = field_file(c.output, "solve", m.k);
        write_field_csv(path, *m.field, {m.k, "solve", c.grid_n, c.grid_r});
        lines += convergence_to_json(m.k, run.records[i]).dump() + "\n";
        mem.push_back({{"k", m.k}, {"tau", m.tau}, {"lambda", m.lambda}, {"poles", poles_json(m.poles)},
                       {"file", std::filesystem::path(path).lexically_relative(c.output).string()},
                       {"converged", run.records[i].converged}, {"damped_only", run.records[i].damped_only},
                       {"newton_steps", run.records[i].iterations.size()}});
        log << "solve k=" << m.k << ": " << (run.records[i].converged ? "converged" : "FAILED") << " after "
            << run.records[i].iterations.size() << " steps, residual " << format_number(run.records[i].residual)
            << (run.records[i].damped_only ? " (damped-only)" : "") << "\n";
    }
    write_text_file(join(c.output, "convergence.jsonl"), lines);
    json man = manifest_base(c, "solve");
    man["members"] = mem;
    write_text_file(join(c.output, "manifest_solve.json"), dump(man));
    if (run.failures == static_cast<int>(members.size()))
        throw SolverError("solve: no member converged");
    return exit_ok;
}

std::vector<LabMember> load_members(const ExperimentConfig& c) {
    auto members = build_members(c);
    const std::string source = c.mode == ExperimentConfig::Mode::Exact ? "exact" : "solve";
    std::vector<int> missing;
    for (const auto& m : members)
        if (!std::filesystem::exists(field_file(c.output, source, m.k))) missing.push_back(m.k);
    if (!missing.empty()) {
        std::string ks;
        for (int k : missing) ks += (ks.empty() ? "" : ", ") + std::to_string(k);
        throw IoError("diagnose: missing " + source + " fields for k = " + ks + " under " + c.output);
    }
    for (auto& m : members) {
        const auto path = field_file(c.output, source, m.k);
        auto lf = read_field_csv(path);
        if (lf.header.k != m.k || lf.header.n != c.grid_n || lf.header.r != c.grid_r)
            throw DataError(path + ": header does not match the config (k, grid.n, grid.r)");
        if (source == "exact") {
            // the file is the data; the closed form is reattached for refined quadrature
            auto f = ScalarField::from_closed_form(lf.grid, *m.exact);
            for (auto idx : lf.grid->inside_nodes())
                if (std::abs(f[idx] - lf.values[idx]) > 1e-12 * std::max(1.0, std::abs(f[idx])))
                    throw DataError(path + ": values differ from the configured family");
            m.field = std::move(f);
        } else {
            BoundaryTrace trace;
            if (c.boundary == "exact") trace = m.exact->value;
            else {
                const double v = c.boundary_value;
                trace = [v](Vec2) { return v; };
            }
            m.field = ScalarField(lf.grid, std::move(lf.values), trace);
        }
        m.source = source;
    }
    return members;
}

void write_curves(const DiagnosticsReport& rep, const std::string& dir) {
    for (const auto& d : rep.members) {
        if (d.mass.empty()) continue;
        std::ostringstream os;
        os << "# delta M(delta) k=" << d.k << "\n";
        for (std::size_t i = 0; i < d.mass.size(); ++i)
            os << format_number(rep.deltas[i]) << ' ' << format_number(d.mass[i]) << "\n";
        write_text_file(join(dir, "curves/mass_k" + std::to_string(d.k) + ".dat"), os.str());
    }
    for (const auto& [name, _] : rep.trends) {
        std::ostringstream os;
        os << "# ln(k) " << name << "\n";
        for (const auto& d : rep.members) {
            double v = nan_v;
            if (name == "energy_defect" && d.energy) v = d.energy->defect;
            if (name == "profile_residual" && d.profile) v = *d.profile;
            if (name == "peak_relation" && d.peak_relation) v = d.peak_relation->defect;
            if (name == "oscillation" && d.oscillation) v = *d.oscillation;
            if (name == "pointwise_c" && d.pointwise) v = d.pointwise->c_upper;
            os << format_number(std::log(static_cast<double>(d.k))) << ' ' << format_number(v) << "\n";
        }
        write_text_file(join(dir, "curves/" + name + ".dat"), os.str());
    }
}

// probe the Newtonian potential at seeded boundary angles: node rule against the closed form
json newtonian_probes(const std::vector<LabMember>& members, const ExperimentConfig& c) {
    json out = json::array();
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * pi);
    const auto& m = members.back();
    if (!m.exact || !m.field) return out;
    auto g = m.field->grid_ptr();
    auto sampled = ScalarField(g, m.field->values());
    auto closed = ScalarField::from_closed_form(g, *m.exact);
    for (int i = 0; i < 2; ++i) {
        const double t = angle(rng);
        const Vec2 x{c.grid_r * std::cos(t), c.grid_r * std::sin(t)};
        const double node = newtonian_potential(sampled, m.weight, x);
        const double ref = newtonian_potential(closed, m.weight, x);
        out.push_back({{"k", m.k}, {"angle", t}, {"node_rule", node}, {"closed_form", ref}});
    }
    return out;
}

int cmd_diagnose(const ExperimentConfig& c, const CommandOptions& o, std::ostream& log) {
    auto members = load_members(c);
    auto rep = diagnose(members, c, o.jobs);
    auto j = report_to_json(rep);
    if (c.wants("green")) j["newtonian_probes"] = newtonian_probes(members, c);
    write_text_file(join(c.output, "report.json"), dump(j));
    std::ostringstream csv;
    write_report_csv(csv, rep);
    write_text_file(join(c.output, "report.csv"), csv.str());
    write_curves(rep, c.output);
    if (rep.verdict)
        log << "diagnose: verdict " << to_string(rep.verdict->status) << ", sigma " << format_number(rep.verdict->sigma)
            << ", n = " << rep.verdict->n << "\n";
    if (rep.cascade) log << "diagnose: cascade s1 = " << rep.cascade->s1 << "\n";
    return exit_ok;
}

int cmd_sweep(const ExperimentConfig& c, const CommandOptions& o, std::ostream& log) {
    if (c.sweep_parameter.empty() && !c.sweep_values.empty()) throw ConfigError("sweep.parameter: missing");
    const long runs = static_cast<long>(c.sweep_values.size()) * c.rule.count;
    if (runs > sweep_budget)
        throw ConfigError("sweep: " + std::to_string(runs) + " (run, k) pairs exceed the budget of " +
                          std::to_string(sweep_budget));
    // every variant is validated before anything runs
    std::vector<ExperimentConfig> variants;
    for (double v : c.sweep_values) variants.push_back(sweep_variant(c, v));
    std::ostringstream os;
    const auto cols = sweep_csv_columns(c.delta_levels);
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    for (std::size_t run = 0; run < variants.size(); ++run) {
        auto& vc = variants[run];
        vc.diagnostics = {"mass"};
        auto members = build_members(vc);
        if (vc.mode == ExperimentConfig::Mode::Exact) attach_exact_fields(members, vc);
        else solve_members(members, vc, o.jobs);
        auto rep = diagnose(members, vc, o.jobs);
        for (const auto& d : rep.members) {
            os << run << ',' << c.sweep_parameter << ',' << format_number(c.sweep_values[run]) << ',' << d.k << ','
               << format_number(d.tau) << ',' << format_number(d.lambda);
            for (double m : d.mass) os << ',' << format_number(m);
            os << ',' << format_number(rep.verdict->sigma) << ',' << rep.verdict->n << ','
               << format_number(rep.verdict->residual) << ',' << to_string(rep.verdict->status) << "\n";
        }
        log << "sweep run " << run << " (" << c.sweep_parameter << " = " << format_number(c.sweep_values[run])
            << "): sigma " << format_number(rep.verdict->sigma) << ", n = " << rep.verdict->n << "\n";
    }
    write_text_file(join(c.output, "sweep.csv"), os.str());
    return exit_ok;
}

int cmd_cascade(const ExperimentConfig& c, const CommandOptions&, std::ostream& log) {
    if (c.kind != ExperimentConfig::FamilyKind::Developing || c.rule.poles.empty())
        throw ConfigError("family.poles: cascade needs at least one pole rule");
    const auto fam = make_family(c.rule);
    const auto rep = detect_cascade(fam);
    json j = manifest_base(c, "cascade");
    j["cascade"] = cascade_to_json(rep);
    json ks = json::array();
    for (const auto& m : fam.members) ks.push_back(m.k);
    j["ks"] = ks;
    write_text_file(join(c.output, "cascade.json"), dump(j));
    log << "cascade: s1 = " << rep.s1 << (rep.resolved ? "" : " (unresolved)") << "\n";
    return exit_ok;
}

} // namespace

int run_command(const std::string& name, const CommandOptions& o, std::ostream& log, std::ostream& err) {
    try {
        if (o.config_path.empty()) throw ConfigError("--config: required");
        auto c = load_config(o.config_path);
        if (!o.out.empty()) c.output = o.out;
        if (o.grid_n) c.grid_n = *o.grid_n;
        if (o.seed) c.seed = *o.seed;
        if (o.jobs < 1) throw ConfigError("--jobs: must be at least 1");
        c.validate();
        if (name == "generate") return cmd_generate(c, o, log);
        if (name == "solve") return cmd_solve(c, o, log);
        if (name == "diagnose") return cmd_diagnose(c, o, log);
        if (name == "sweep") return cmd_sweep(c, o, log);
        if (name == "cascade") return cmd_cascade(c, o, log);
        throw ConfigError("unknown command '" + name + "'");
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const SolverError& e) {
        err << "error: " << e.what() << "\n";
        return exit_solver;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_io;
    }
}

} // namespace liouville
