#include "liouville/io.hpp"
#include "liouville/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace liouville {

using nlohmann::json;

namespace {

template <class T>
T get(const json& j, const std::string& key, const std::string& path, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + key + ": wrong type");
    }
}

Vec2 get_vec(const json& j, const std::string& key, const std::string& path, Vec2 fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(path + key + ": expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

void reject_unknown(const json& j, const std::vector<std::string>& allowed, const std::string& path) {
    if (!j.is_object()) throw ConfigError((path.empty() ? "config" : path.substr(0, path.size() - 1)) + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(path + key + ": unknown key");
}

const char* kind_name(ExperimentConfig::FamilyKind k) {
    switch (k) {
    case ExperimentConfig::FamilyKind::Bubble: return "bubble";
    case ExperimentConfig::FamilyKind::Constant: return "constant";
    default: return "developing";
    }
}

const char* mode_name(ExperimentConfig::Mode m) {
    switch (m) {
    case ExperimentConfig::Mode::Solve: return "solve";
    case ExperimentConfig::Mode::Both: return "both";
    default: return "exact";
    }
}

const char* node_kind_name(NodeKind k) { return k == NodeKind::Interior ? "interior" : "boundary-adjacent"; }

} // namespace

const std::vector<std::string>& known_diagnostics() {
    static const std::vector<std::string> names{"mass",     "pohozaev", "energy", "profile", "peak",
                                                "oscillation", "pointwise", "green", "cascade"};
    return names;
}

bool ExperimentConfig::wants(const std::string& d) const {
    return diagnostics.empty() || std::find(diagnostics.begin(), diagnostics.end(), d) != diagnostics.end();
}

void ExperimentConfig::validate() const {
    if (schema != config_schema) throw ConfigError("schema: unrecognized version '" + schema + "'");
    if (rule.count < 4) throw ConfigError("family.count: K must be at least 4");
    if (grid_n < DiskGrid::min_points || grid_n % 2 == 0)
        throw ConfigError("grid.n: must be odd and at least " + std::to_string(DiskGrid::min_points));
    if (!(grid_r > 0.0)) throw ConfigError("grid.r: must be positive");
    if (!(amplitude > 0.0)) throw ConfigError("family.amplitude: must be positive");
    if (kind == FamilyKind::Bubble && bubble_alpha < 0) throw ConfigError("family.alpha: must be >= 0");
    if (kind != FamilyKind::Developing && !rule.poles.empty())
        throw ConfigError("family.poles: only developing families carry pole rules");
    for (const auto& d : diagnostics)
        if (std::find(known_diagnostics().begin(), known_diagnostics().end(), d) == known_diagnostics().end())
            throw ConfigError("diagnostics: unknown entry '" + d + "'");
    if (delta_levels < 1) throw ConfigError("deltas.levels: must be positive");
    if (delta_r < 0.0 || delta_r > grid_r) throw ConfigError("deltas.r: must lie in (0, grid.r]");
    if (!(newton_tolerance > 0.0)) throw ConfigError("tolerances.newton: must be positive");
    if (newton_max_iterations < 1) throw ConfigError("tolerances.newton_max_iterations: must be positive");
    if (!(plateau_slope > 0.0)) throw ConfigError("tolerances.plateau_slope: must be positive");
    if (!(pointwise_eps > 0.0 && pointwise_eps < 1.0)) throw ConfigError("tolerances.pointwise_eps: must lie in (0, 1)");
    if (!(exclusion_l0 >= 1.0)) throw ConfigError("tolerances.exclusion_l0: must be >= 1");
    if (mode != Mode::Exact) {
        if (boundary != "exact" && boundary != "constant")
            throw ConfigError("solve.boundary: expected 'exact' or 'constant'");
        if (guess != "perturbed" && guess != "harmonic") throw ConfigError("solve.guess: expected 'perturbed' or 'harmonic'");
    }
    if (!sweep_parameter.empty() && sweep_parameter != "degree" && sweep_parameter != "lambda0")
        throw ConfigError("sweep.parameter: expected 'degree' or 'lambda0'");
    if (output.empty()) throw ConfigError("output: must not be empty");
    // poles pairwise distinct, tau_k decreasing, lambda schedule sane
    make_family(rule);
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    reject_unknown(j, {"schema", "family", "grid", "mode", "diagnostics", "deltas", "tolerances", "solve", "output",
                       "seed", "sweep"},
                   "");
    if (!j.contains("schema")) throw ConfigError("schema: missing");
    c.schema = get<std::string>(j, "schema", "", "");
    if (c.schema != config_schema) throw ConfigError("schema: unrecognized version '" + c.schema + "'");

    if (!j.contains("family")) throw ConfigError("family: missing");
    const auto& f = j.at("family");
    reject_unknown(f, {"kind", "poles", "lambda", "count", "first_index", "anchor", "alpha", "value", "amplitude"},
                   "family.");
    const auto kind = get<std::string>(f, "kind", "family.", "developing");
    if (kind == "developing") c.kind = ExperimentConfig::FamilyKind::Developing;
    else if (kind == "bubble") c.kind = ExperimentConfig::FamilyKind::Bubble;
    else if (kind == "constant") c.kind = ExperimentConfig::FamilyKind::Constant;
    else throw ConfigError("family.kind: expected developing, bubble or constant");
    if (f.contains("poles")) {
        if (!f.at("poles").is_array()) throw ConfigError("family.poles: expected an array");
        int idx = 0;
        for (const auto& p : f.at("poles")) {
            const std::string path = "family.poles[" + std::to_string(idx++) + "].";
            reject_unknown(p, {"direction", "exponent", "coefficient", "multiplicity"}, path);
            PoleRule r;
            r.direction = get_vec(p, "direction", path, r.direction);
            r.exponent = get<double>(p, "exponent", path, r.exponent);
            r.coefficient = get<double>(p, "coefficient", path, r.coefficient);
            r.multiplicity = get<int>(p, "multiplicity", path, r.multiplicity);
            c.rule.poles.push_back(r);
        }
    }
    if (f.contains("lambda")) {
        const auto& l = f.at("lambda");
        reject_unknown(l, {"kind", "lambda0", "gamma", "base"}, "family.lambda.");
        const auto lk = get<std::string>(l, "kind", "family.lambda.", "power");
        if (lk == "power") c.rule.lambda.kind = LambdaSchedule::Kind::Power;
        else if (lk == "geometric") c.rule.lambda.kind = LambdaSchedule::Kind::Geometric;
        else throw ConfigError("family.lambda.kind: expected power or geometric");
        c.rule.lambda.lambda0 = get<double>(l, "lambda0", "family.lambda.", c.rule.lambda.lambda0);
        c.rule.lambda.gamma = get<double>(l, "gamma", "family.lambda.", c.rule.lambda.gamma);
        c.rule.lambda.base = get<double>(l, "base", "family.lambda.", c.rule.lambda.base);
    }
    c.rule.count = get<int>(f, "count", "family.", c.rule.count);
    c.rule.first_index = get<int>(f, "first_index", "family.", c.rule.first_index);
    c.rule.anchor = get_vec(f, "anchor", "family.", c.rule.anchor);
    c.bubble_alpha = get<int>(f, "alpha", "family.", c.bubble_alpha);
    c.constant_value = get<double>(f, "value", "family.", c.constant_value);
    c.amplitude = get<double>(f, "amplitude", "family.", c.amplitude);

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        reject_unknown(g, {"n", "r"}, "grid.");
        c.grid_n = get<int>(g, "n", "grid.", c.grid_n);
        c.grid_r = get<double>(g, "r", "grid.", c.grid_r);
    }
    const auto mode = get<std::string>(j, "mode", "", "exact");
    if (mode == "exact") c.mode = ExperimentConfig::Mode::Exact;
    else if (mode == "solve") c.mode = ExperimentConfig::Mode::Solve;
    else if (mode == "both") c.mode = ExperimentConfig::Mode::Both;
    else throw ConfigError("mode: expected exact, solve or both");
    c.diagnostics = get<std::vector<std::string>>(j, "diagnostics", "", {});
    if (j.contains("deltas")) {
        const auto& d = j.at("deltas");
        reject_unknown(d, {"r", "levels"}, "deltas.");
        c.delta_r = get<double>(d, "r", "deltas.", c.delta_r);
        c.delta_levels = get<int>(d, "levels", "deltas.", c.delta_levels);
    }
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        const std::string p = "tolerances.";
        reject_unknown(t, {"newton", "newton_max_iterations", "continuation", "plateau_slope", "ladder", "pointwise_eps",
                           "exclusion_l0"},
                       p);
        c.newton_tolerance = get<double>(t, "newton", p, c.newton_tolerance);
        c.newton_max_iterations = get<int>(t, "newton_max_iterations", p, c.newton_max_iterations);
        c.continuation = get<bool>(t, "continuation", p, c.continuation);
        c.plateau_slope = get<double>(t, "plateau_slope", p, c.plateau_slope);
        c.ladder_tolerance = get<double>(t, "ladder", p, c.ladder_tolerance);
        c.pointwise_eps = get<double>(t, "pointwise_eps", p, c.pointwise_eps);
        c.exclusion_l0 = get<double>(t, "exclusion_l0", p, c.exclusion_l0);
    }
    if (j.contains("solve")) {
        const auto& s = j.at("solve");
        reject_unknown(s, {"boundary", "boundary_value", "guess", "bump"}, "solve.");
        c.boundary = get<std::string>(s, "boundary", "solve.", c.boundary);
        c.boundary_value = get<double>(s, "boundary_value", "solve.", c.boundary_value);
        c.guess = get<std::string>(s, "guess", "solve.", c.guess);
        c.guess_bump = get<double>(s, "bump", "solve.", c.guess_bump);
    } else if (c.mode != ExperimentConfig::Mode::Exact) {
        throw ConfigError("solve: missing (required when mode includes solve)");
    }
    c.output = get<std::string>(j, "output", "", c.output);
    c.seed = get<std::uint64_t>(j, "seed", "", c.seed);
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        reject_unknown(s, {"parameter", "values"}, "sweep.");
        c.sweep_parameter = get<std::string>(s, "parameter", "sweep.", "");
        c.sweep_values = get<std::vector<double>>(s, "values", "sweep.", {});
    }
    c.validate();
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json poles = json::array();
    for (const auto& p : c.rule.poles)
        poles.push_back({{"direction", {p.direction.x, p.direction.y}},
                         {"exponent", p.exponent},
                         {"coefficient", p.coefficient},
                         {"multiplicity", p.multiplicity}});
    json j;
    j["schema"] = c.schema;
    j["family"] = {{"kind", kind_name(c.kind)},
                   {"poles", poles},
                   {"lambda",
                    {{"kind", c.rule.lambda.kind == LambdaSchedule::Kind::Power ? "power" : "geometric"},
                     {"lambda0", c.rule.lambda.lambda0},
                     {"gamma", c.rule.lambda.gamma},
                     {"base", c.rule.lambda.base}}},
                   {"count", c.rule.count},
                   {"first_index", c.rule.first_index},
                   {"anchor", {c.rule.anchor.x, c.rule.anchor.y}},
                   {"alpha", c.bubble_alpha},
                   {"value", c.constant_value},
                   {"amplitude", c.amplitude}};
    j["grid"] = {{"n", c.grid_n}, {"r", c.grid_r}};
    j["mode"] = mode_name(c.mode);
    j["diagnostics"] = c.diagnostics;
    j["deltas"] = {{"r", c.delta_r}, {"levels", c.delta_levels}};
    j["tolerances"] = {{"newton", c.newton_tolerance},
                       {"newton_max_iterations", c.newton_max_iterations},
                       {"continuation", c.continuation},
                       {"plateau_slope", c.plateau_slope},
                       {"ladder", c.ladder_tolerance},
                       {"pointwise_eps", c.pointwise_eps},
                       {"exclusion_l0", c.exclusion_l0}};
    j["solve"] = {{"boundary", c.boundary}, {"boundary_value", c.boundary_value}, {"guess", c.guess}, {"bump", c.guess_bump}};
    j["output"] = c.output;
    j["seed"] = c.seed;
    j["sweep"] = {{"parameter", c.sweep_parameter}, {"values", c.sweep_values}};
    return j;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + ": not valid JSON (" + e.what() + ")");
    }
    return config_from_json(j);
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_field_csv(std::ostream& os, const ScalarField& f, const FieldHeader& h) {
    const auto& g = f.grid();
    json head{{"format", field_format}, {"k", h.k}, {"source", h.source}, {"n", g.n()}, {"r", g.radius()}};
    os << "# " << head.dump() << "\n";
    os << "x,y,value,kind\n";
    for (auto idx : g.inside_nodes()) {
        const Vec2 x = g.point(idx);
        os << format_number(x.x) << ',' << format_number(x.y) << ',' << format_number(f[idx]) << ','
           << node_kind_name(g.kind(idx)) << '\n';
    }
}

void write_field_csv(const std::string& path, const ScalarField& f, const FieldHeader& h) {
    std::ostringstream os;
    write_field_csv(os, f, h);
    write_text_file(path, os.str());
}

LoadedField read_field_csv(std::istream& is, const std::string& name) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw DataError(name + ": missing header line");
    json head;
    try {
        head = json::parse(line.substr(2));
    } catch (const json::exception&) {
        throw DataError(name + ": header is not JSON");
    }
    if (head.value("format", "") != field_format) throw DataError(name + ": unknown field format");
    LoadedField out;
    out.header.k = head.value("k", 0);
    out.header.source = head.value("source", "");
    out.header.n = head.value("n", 0);
    out.header.r = head.value("r", 1.0);
    try {
        out.grid = std::make_shared<const DiskGrid>(out.header.r, out.header.n);
    } catch (const ConfigError& e) {
        throw DataError(name + ": bad grid in header (" + e.what() + ")");
    }
    const auto& g = *out.grid;
    out.values.assign(g.size(), std::numeric_limits<double>::quiet_NaN());
    if (!std::getline(is, line) || line != "x,y,value,kind") throw DataError(name + ": missing column line");
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string sx, sy, sv;
        if (!std::getline(row, sx, ',') || !std::getline(row, sy, ',') || !std::getline(row, sv, ','))
            throw DataError(name + ": malformed row " + std::to_string(rows + 1));
        const Vec2 x{std::strtod(sx.c_str(), nullptr), std::strtod(sy.c_str(), nullptr)};
        const auto idx = g.nearest(x);
        if (!g.inside(idx) || (g.point(idx) - x).norm() > 1e-9 * g.spacing())
            throw DataError(name + ": row " + std::to_string(rows + 1) + " is not an inside node");
        out.values[idx] = std::strtod(sv.c_str(), nullptr);
        ++rows;
    }
    if (rows != g.inside_nodes().size())
        throw DataError(name + ": expected " + std::to_string(g.inside_nodes().size()) + " rows, found " +
                        std::to_string(rows));
    return out;
}

LoadedField read_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read field file " + path);
    return read_field_csv(in, path);
}

json convergence_to_json(int k, const ConvergenceRecord& r) {
    json its = json::array();
    for (const auto& it : r.iterations) its.push_back({{"iter", it.iter}, {"residual", it.residual}, {"step", it.step}});
    return {{"k", k},
            {"converged", r.converged},
            {"damped_only", r.damped_only},
            {"continuation_used", r.continuation_used},
            {"residual", number_or_null(r.residual)},
            {"tolerance", r.tolerance},
            {"linear_residual", number_or_null(r.linear_residual)},
            {"message", r.message},
            {"iterations", its}};
}

void write_text_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out.flush()) throw IoError("write failed for " + path);
}

} // namespace liouville
