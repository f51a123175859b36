#include <doctest.h>

#include "liouville/errors.hpp"
#include "liouville/lab.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace liouville;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("liouville_lab_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_config(const TempDir& dir, json j, const std::string& name = "config.json") {
    j["schema"] = config_schema;
    if (!j.contains("output")) j["output"] = dir / "out";
    const auto path = dir / name;
    std::ofstream(path) << j.dump(2);
    return path;
}

struct Run {
    int code;
    std::string log, err;
};

Run run(const std::string& cmd, const std::string& config, int jobs = 2) {
    CommandOptions o;
    o.config_path = config;
    o.jobs = jobs;
    std::ostringstream log, err;
    const int code = run_command(cmd, o, log, err);
    return {code, log.str(), err.str()};
}

json d2_family() {
    return {{"poles", {{{"direction", {1, 0}}, {"exponent", 1}, {"coefficient", 0.05}}}},
            {"lambda", {{"kind", "geometric"}, {"lambda0", 1}, {"base", 100}}},
            {"count", 4}};
}

} // namespace

TEST_CASE("config parse, serialize, parse is the identity") {
    json j{{"schema", config_schema},
           {"family", d2_family()},
           {"grid", {{"n", 65}, {"r", 1.5}}},
           {"mode", "both"},
           {"diagnostics", {"mass", "cascade"}},
           {"deltas", {{"r", 1.0}, {"levels", 5}}},
           {"solve", {{"boundary", "exact"}, {"guess", "harmonic"}}},
           {"seed", 42},
           {"sweep", {{"parameter", "lambda0"}, {"values", {1, 10}}}}};
    auto a = config_from_json(j);
    auto b = config_from_json(config_to_json(a));
    CHECK(config_to_json(a) == config_to_json(b));
    CHECK(b.grid_r == 1.5);
    CHECK(b.seed == 42);
    CHECK(b.rule.poles.size() == 1);
    CHECK(b.wants("cascade"));
    CHECK_FALSE(b.wants("green"));

    auto bad = j;
    bad["grid"]["m"] = 3;
    try {
        config_from_json(bad);
        FAIL("unknown key accepted");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("grid.m") != std::string::npos);
    }
    bad = j;
    bad["schema"] = "liouville-lab/0";
    CHECK_THROWS_AS(config_from_json(bad), ConfigError);
    bad = j;
    bad["family"]["count"] = 3;
    CHECK_THROWS_AS(config_from_json(bad), ConfigError);
    bad = j;
    bad.erase("solve");
    CHECK_THROWS_AS(config_from_json(bad), ConfigError);
    bad = j;
    bad["family"]["poles"][0]["exponent"] = "fast";
    try {
        config_from_json(bad);
        FAIL("bad type accepted");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("family.poles[0].exponent") != std::string::npos);
    }
}

TEST_CASE("field files round trip") {
    auto g = std::make_shared<const DiskGrid>(1.0, 65);
    auto f = ScalarField::sampled(g, [](Vec2 x) { return std::sin(3.0 * x.x) * std::exp(x.y) / 7.0; });
    std::stringstream ss;
    write_field_csv(ss, f, {3, "exact", 65, 1.0});
    auto back = read_field_csv(ss);
    CHECK(back.header.k == 3);
    CHECK(back.header.source == "exact");
    for (auto idx : g->inside_nodes()) CHECK(std::abs(back.values[idx] - f[idx]) <= 1e-12 * std::abs(f[idx]));

    std::stringstream truncated(ss.str().substr(0, ss.str().size() / 2));
    CHECK_THROWS_AS(read_field_csv(truncated), DataError);
    std::stringstream no_header("x,y,value,kind\n");
    CHECK_THROWS_AS(read_field_csv(no_header), DataError);
}

TEST_CASE("generate writes one field per k and a deterministic manifest") {
    TempDir dir("generate");
    const auto cfg = write_config(dir, {{"family", {{"count", 4}}}, {"grid", {{"n", 65}}}});
    auto r = run("generate", cfg);
    REQUIRE(r.code == exit_ok);
    auto man = json::parse(slurp(dir / "out/manifest.json"));
    REQUIRE(man["members"].size() == 4);
    for (const auto& m : man["members"]) {
        CHECK(m.contains("tau"));
        CHECK(fs::exists(dir.path / "out" / m["file"].get<std::string>()));
    }
    const auto first = slurp(dir / "out/manifest.json");
    REQUIRE(run("generate", cfg).code == exit_ok);
    CHECK(slurp(dir / "out/manifest.json") == first);
}

TEST_CASE("validation failures exit with code 2 and name the problem") {
    TempDir dir("validate");
    json fam{{"poles",
              {{{"direction", {1, 0}}, {"exponent", 1}, {"coefficient", 0.1}},
               {{"direction", {1, 0}}, {"exponent", 1}, {"coefficient", 0.1}}}},
             {"count", 4}};
    auto r = run("generate", write_config(dir, {{"family", fam}}));
    CHECK(r.code == exit_validation);
    CHECK(r.err.find("pairwise distinct") != std::string::npos);

    r = run("generate", write_config(dir, {{"family", {{"count", 4}}}, {"grid", {{"n", 64}}}}));
    CHECK(r.code == exit_validation);
    CHECK(r.err.find("grid.n") != std::string::npos);

    CHECK(run("solve", write_config(dir, {{"family", {{"count", 4}}}})).code == exit_validation);
    CHECK(run("nonsense", write_config(dir, {{"family", {{"count", 4}}}})).code == exit_validation);
}

TEST_CASE("I/O failures exit with code 4") {
    TempDir dir("io");
    CHECK(run("generate", dir / "absent.json").code == exit_io);
    std::ofstream(dir / "blocker") << "x";
    auto r = run("generate", write_config(dir, {{"family", {{"count", 4}}}, {"grid", {{"n", 65}}},
                                                {"output", dir / "blocker/out"}}));
    CHECK(r.code == exit_io);

    // diagnose lists the absent k
    const auto cfg = write_config(dir, {{"family", {{"count", 4}}}, {"grid", {{"n", 65}}}});
    REQUIRE(run("generate", cfg).code == exit_ok);
    fs::remove(dir.path / "out/fields/exact_k2.csv");
    fs::remove(dir.path / "out/fields/exact_k4.csv");
    r = run("diagnose", cfg);
    CHECK(r.code == exit_io);
    CHECK(r.err.find("k = 2, 4") != std::string::npos);
}

TEST_CASE("solve records convergence per k") {
    TempDir dir("solve");
    json fam{{"kind", "bubble"}, {"lambda", {{"kind", "power"}, {"lambda0", 10}, {"gamma", 0}}}, {"count", 4}};
    const auto cfg = write_config(dir, {{"family", fam}, {"mode", "solve"}, {"solve", {{"boundary", "exact"}}}});
    auto r = run("solve", cfg, 4);
    REQUIRE(r.code == exit_ok);
    std::ifstream in(dir / "out/convergence.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        auto j = json::parse(line);
        CHECK(j["converged"].get<bool>());
        // measured: 6 steps at n = 129
        CHECK(j["iterations"].size() <= 15);
        ++lines;
    }
    CHECK(lines == 4);
    REQUIRE(run("diagnose", cfg, 4).code == exit_ok);
    auto rep = json::parse(slurp(dir / "out/report.json"));
    for (const auto& m : rep["members"]) {
        CHECK(m["exact_error"].get<double>() < 0.05);
        CHECK(m["green"]["harmonic_defect"].get<double>() <= 10.0 * m["green"]["tolerance"].get<double>());
    }

    // a steep schedule from the harmonic guess: recorded, not fatal
    json steep{{"kind", "bubble"}, {"lambda", {{"kind", "geometric"}, {"lambda0", 1}, {"base", 10}}}, {"count", 4}};
    const auto cfg2 = write_config(dir,
                                   {{"family", steep},
                                    {"mode", "solve"},
                                    {"solve", {{"boundary", "exact"}, {"guess", "harmonic"}}},
                                    {"tolerances", {{"continuation", false}, {"newton_max_iterations", 15}}},
                                    {"output", dir / "steep"}},
                                   "steep.json");
    r = run("solve", cfg2, 4);
    CHECK(r.code == exit_ok);
    CHECK((r.log.find("damped-only") != std::string::npos || r.log.find("FAILED") != std::string::npos));

    // every member failing is a solver failure
    const auto cfg3 = write_config(dir,
                                   {{"family", fam},
                                    {"mode", "solve"},
                                    {"solve", {{"boundary", "exact"}, {"bump", 3.0}}},
                                    {"tolerances", {{"continuation", false}, {"newton_max_iterations", 1}}},
                                    {"output", dir / "fail"}},
                                   "fail.json");
    r = run("solve", cfg3, 4);
    CHECK(r.code == exit_solver);
    CHECK(fs::exists(dir.path / "fail/convergence.jsonl"));
}

TEST_CASE("a vanishing weight solves to the harmonic extension") {
    TempDir dir("sentinel");
    json fam{{"kind", "constant"}, {"value", 0.0}, {"amplitude", 1e-300}, {"count", 4}};
    const auto cfg = write_config(
        dir, {{"family", fam}, {"grid", {{"n", 65}}}, {"mode", "solve"},
              {"solve", {{"boundary", "constant"}, {"boundary_value", 1.25}}}});
    REQUIRE(run("solve", cfg).code == exit_ok);
    auto f = read_field_csv(dir / "out/fields/solve_k1.csv");
    auto harm = harmonic_extension(f.grid, [](Vec2) { return 1.25; });
    for (auto idx : f.grid->inside_nodes()) CHECK(f.values[idx] == doctest::Approx(harm[idx]).epsilon(1e-12));
}

TEST_CASE("diagnose reports quantization and cascades") {
    TempDir dir("diagnose");
    auto cfg = write_config(dir, {{"family", d2_family()}, {"grid", {{"n", 65}}}});
    REQUIRE(run("generate", cfg).code == exit_ok);
    auto r = run("diagnose", cfg, 4);
    REQUIRE(r.code == exit_ok);
    auto rep = json::parse(slurp(dir / "out/report.json"));
    CHECK(rep["verdict"]["n"] == 2);
    CHECK(rep["verdict"]["status"] == "quantized");
    CHECK(rep["tolerances"].contains("grid_h"));
    for (const auto& m : rep["members"])
        for (const auto& e : m["mass"]) CHECK(e.contains("error"));
    auto csv = slurp(dir / "out/report.csv");
    CHECK(csv.rfind("k,tau,eps,lambda,M_0", 0) == 0);
    CHECK(fs::exists(dir.path / "out/curves/mass_k4.dat"));

    // a constant field has no blow-up
    cfg = write_config(dir, {{"family", {{"kind", "constant"}, {"value", 0.3}, {"count", 4}}},
                             {"grid", {{"n", 65}}}, {"deltas", {{"levels", 8}}}, {"output", dir / "flat"}},
                       "flat.json");
    REQUIRE(run("generate", cfg).code == exit_ok);
    REQUIRE(run("diagnose", cfg).code == exit_ok);
    rep = json::parse(slurp(dir / "flat/report.json"));
    CHECK(rep["verdict"]["n"] == 0);
    CHECK(rep["verdict"]["status"] == "no-blow-up");

    // three poles on two scales
    json fam{{"poles",
              {{{"direction", {1, 0}}, {"exponent", 2}, {"coefficient", 0.2}},
               {{"direction", {-1, 0}}, {"exponent", 2}, {"coefficient", 0.2}},
               {{"direction", {0, 1}}, {"exponent", 1}, {"coefficient", 0.2}}}},
             {"count", 6},
             {"first_index", 2}};
    cfg = write_config(dir, {{"family", fam}, {"grid", {{"n", 65}}}, {"diagnostics", {"cascade", "mass"}},
                             {"output", dir / "cascade"}},
                       "cascade.json");
    REQUIRE(run("generate", cfg).code == exit_ok);
    REQUIRE(run("diagnose", cfg).code == exit_ok);
    rep = json::parse(slurp(dir / "cascade/report.json"));
    CHECK(rep["cascade"]["s1"] == 2);
    CHECK(rep["cascade"]["diverges"] == json::array({false, false, true}));
    REQUIRE(run("cascade", cfg).code == exit_ok);
    CHECK(json::parse(slurp(dir / "cascade/cascade.json"))["cascade"]["s1"] == 2);
}

TEST_CASE("sweeps") {
    TempDir dir("sweep");
    auto fam = d2_family();
    auto cfg = write_config(dir, {{"family", fam}, {"grid", {{"n", 65}}},
                                  {"sweep", {{"parameter", "degree"}, {"values", {1, 2, 3}}}}});
    REQUIRE(run("sweep", cfg).code == exit_ok);
    std::istringstream csv(slurp(dir / "out/sweep.csv"));
    std::string header, line;
    std::getline(csv, header);
    const auto cols = sweep_csv_columns(6);
    std::string expect;
    for (std::size_t i = 0; i < cols.size(); ++i) expect += (i ? "," : "") + cols[i];
    CHECK(header == expect);
    int rows = 0;
    while (std::getline(csv, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        const int run_idx = std::stoi(cells[0]);
        const double sigma = std::stod(cells[cols.size() - 4]);
        CHECK(sigma == doctest::Approx(8.0 * pi * (run_idx + 1)).epsilon(1e-3));
        ++rows;
    }
    CHECK(rows == 12);

    // three decades of lambda0 leave the rung unchanged
    cfg = write_config(dir, {{"family", fam}, {"grid", {{"n", 65}}},
                             {"sweep", {{"parameter", "lambda0"}, {"values", {1, 10, 100, 1000}}}},
                             {"output", dir / "lam"}},
                       "lam.json");
    REQUIRE(run("sweep", cfg).code == exit_ok);
    std::istringstream lam(slurp(dir / "lam/sweep.csv"));
    std::getline(lam, line);
    while (std::getline(lam, line)) CHECK(line.find(",2,") != std::string::npos);

    cfg = write_config(dir, {{"family", fam}, {"sweep", {{"parameter", "degree"}, {"values", json::array()}}},
                             {"output", dir / "empty"}},
                       "empty.json");
    REQUIRE(run("sweep", cfg).code == exit_ok);
    CHECK(slurp(dir / "empty/sweep.csv") == expect + "\n");

    std::vector<double> many(3000, 1.0);
    cfg = write_config(dir, {{"family", fam}, {"sweep", {{"parameter", "lambda0"}, {"values", many}}},
                             {"output", dir / "big"}},
                       "big.json");
    auto r = run("sweep", cfg);
    CHECK(r.code == exit_validation);
    CHECK(r.err.find("budget") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "big"));
}

TEST_CASE("parallel_for keeps results in index order and rethrows") {
    std::vector<int> out(100, -1);
    parallel_for(out.size(), 8, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
    CHECK_THROWS_AS(parallel_for(10, 4, [](std::size_t i) {
                        if (i == 7) throw DataError("seven");
                    }),
                    DataError);
}
