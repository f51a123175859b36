#include <doctest.h>

#include "liouville/errors.hpp"
#include "liouville/exact_families.hpp"
#include "liouville/field_ops.hpp"
#include "test_oracles.hpp"

#include <cmath>
#include <memory>

using namespace liouville;

namespace {

std::shared_ptr<const DiskGrid> make_grid(int n, double r = 1.0) { return std::make_shared<const DiskGrid>(r, n); }

double residual_norm(const ScalarField& f, const WeightSpec& w) { return max_norm(f.grid(), pde_residual(f, w)); }

// moderately resolved configurations of degree 1..5
PoleConfig ladder_config(int d) {
    std::vector<Vec2> pts;
    for (int j = 0; j + 1 < d; ++j) {
        const double t = 2.0 * pi * j / std::max(1, d - 1) + 0.4;
        pts.push_back({0.3 * std::cos(t), 0.3 * std::sin(t)});
    }
    return PoleConfig(pts, std::vector<int>(pts.size(), 1));
}

} // namespace

TEST_CASE("radial bubble values and full-plane mass") {
    auto g = make_grid(65);
    auto b = radial_bubble(g, 0, 1.0);
    CHECK(b[g->origin_index()] == doctest::Approx(std::log(8.0)).epsilon(1e-14));
    for (auto idx : g->inside_nodes()) CHECK(b[idx] <= b[g->origin_index()]);

    // the disk B_R with R = 1e4 holds all but 8 pi / (1 + R^2) of the mass
    auto big = make_grid(33, 1e4);
    const double r2 = 1e8;
    CHECK(weighted_mass(radial_bubble(big, 0, 1.0), WeightSpec{}, 1e4).value ==
          doctest::Approx(8.0 * pi * r2 / (1.0 + r2)).epsilon(1e-9));
    WeightSpec w1(PoleConfig({Vec2{}}, {1}), SmoothFactor::constant_one(), 1.0, 1e4);
    CHECK(weighted_mass(radial_bubble(big, 1, 10.0), w1, 1e4).value == doctest::Approx(16.0 * pi).epsilon(1e-9));
    CHECK_THROWS_AS(radial_bubble_form(0, 0.0), ConfigError);
}

TEST_CASE("exact fields have second-order discrete residual") {
    for (int alpha : {0, 1, 2}) {
        WeightSpec w(alpha ? PoleConfig({Vec2{}}, {alpha}) : PoleConfig{});
        const double e1 = residual_norm(radial_bubble(make_grid(129), alpha, 3.0), w);
        const double e2 = residual_norm(radial_bubble(make_grid(257), alpha, 3.0), w);
        INFO("alpha = " << alpha);
        CHECK(e1 / e2 >= 3.5);
    }
    for (int d = 1; d <= 5; ++d) {
        const auto cfg = ladder_config(d);
        const auto m = polynomial_primitive(cfg).centered_at({0.0, 0.0}, 2.0);
        WeightSpec w(cfg);
        const double e1 = residual_norm(developing_map_field(make_grid(129), m), w);
        const double e2 = residual_norm(developing_map_field(make_grid(257), m), w);
        INFO("d = " << d);
        CHECK(e1 / e2 >= 3.5);
    }
}

TEST_CASE("developing map without poles is a translated bubble") {
    const auto m = polynomial_primitive(PoleConfig{}).centered_at({0.2, -0.1}, 7.0);
    CHECK(m.degree() == 1);
    const auto f = developing_map_form(m);
    const auto b = radial_bubble_form(0, 7.0);
    for (Vec2 x : {Vec2{0.0, 0.0}, Vec2{0.5, 0.3}, Vec2{-0.7, 0.1}})
        CHECK(f.value(x) == doctest::Approx(b.value(x - Vec2{0.2, -0.1})).epsilon(1e-12));
}

TEST_CASE("developing map plane mass follows the 8 pi d ladder") {
    const double R = 1e3;
    for (int d = 1; d <= 5; ++d) {
        const auto cfg = ladder_config(d);
        const auto m = polynomial_primitive(cfg).centered_at({0.0, 0.0}, 3.0);
        WeightSpec w(cfg, SmoothFactor::constant_one(), 1.0, R);
        const double mass = weighted_mass(developing_map_field(make_grid(33, R), m), w, R).value;
        INFO("d = " << d);
        CHECK(mass == doctest::Approx(8.0 * pi * d).epsilon(1e-5));
    }
    // independent check for the single pole at 0.3
    PoleConfig one({Vec2{0.3, 0.0}}, {1});
    const auto m = polynomial_primitive(one).centered_at({0.0, 0.0}, 1.0);
    const double oracle =
        oracles::polar_gauss([&](Vec2 x) { return oracles::developing_density(m, x); }, 1e3, 1e-3, 200, 4096);
    CHECK(oracle == doctest::Approx(16.0 * pi).epsilon(1e-5));
}

TEST_CASE("polynomial primitive") {
    auto f = polynomial_primitive(PoleConfig({Vec2{}}, {1})).primitive.coefficients();
    REQUIRE(f.size() == 3);
    CHECK(std::abs(f[0]) == 0.0);
    CHECK(std::abs(f[1]) == 0.0);
    CHECK(std::abs(f[2] - Complex{0.5, 0.0}) < 1e-15);

    // (z - e)(z + e) = z^2 - e^2, so F = z^3/3 - e^2 z
    const double e = 0.25;
    auto g = polynomial_primitive(PoleConfig({Vec2{e, 0.0}, Vec2{-e, 0.0}}, {1, 1}));
    CHECK(g.degree() == 3);
    const auto& c = g.primitive.coefficients();
    CHECK(std::abs(c[0]) < 1e-15);
    CHECK(std::abs(c[1] - Complex{-e * e, 0.0}) < 1e-15);
    CHECK(std::abs(c[2]) < 1e-15);
    CHECK(std::abs(c[3] - Complex{1.0 / 3.0, 0.0}) < 1e-15);
    CHECK_NOTHROW(g.validate());

    PoleConfig mixed({Vec2{0.1, 0.2}, Vec2{-0.3, 0.05}, Vec2{0.0, -0.4}}, {2, 1, 3});
    auto m = polynomial_primitive(mixed);
    CHECK(m.degree() == 7);
    CHECK_NOTHROW(m.validate());
    // derivative of the expansion against the product at a few points
    for (Complex z : {Complex{0.3, 0.1}, Complex{-1.2, 0.7}, Complex{2.0, -2.0}}) {
        Complex prod{1.0, 0.0};
        for (std::size_t j = 0; j < mixed.size(); ++j)
            for (int a = 0; a < mixed.multiplicities()[j]; ++a) prod *= z - to_complex(mixed.poles()[j]);
        CHECK(std::abs(m.primitive.derivative()(z) - prod) <= 1e-12 * std::abs(prod));
    }

    std::vector<Vec2> many;
    for (int j = 0; j < 65; ++j) many.push_back({std::cos(j * 0.1), std::sin(j * 0.1)});
    CHECK_THROWS_AS(polynomial_primitive(PoleConfig(many, std::vector<int>(65, 1))), ConfigError);

    auto broken = m;
    auto coeffs = broken.primitive.coefficients();
    coeffs[3] += Complex{1e-3, 0.0};
    broken.primitive = ComplexPolynomial(coeffs);
    CHECK_THROWS_AS(broken.validate(), ConfigError);
}

TEST_CASE("centered maps vanish at the anchor") {
    PoleConfig cfg({Vec2{0.2, 0.1}}, {2});
    const auto m = polynomial_primitive(cfg).centered_at({0.05, -0.02}, 100.0);
    CHECK(m.shifted_primitive()[0] == Complex{0.0, 0.0});
    CHECK(m.primitive(m.anchor) - m.shift == Complex{0.0, 0.0});
    // peak of the field sits at the anchor: xi(anchor) = ln(8 lambda^2)
    CHECK(developing_map_form(m).value({0.05, -0.02}) == doctest::Approx(std::log(8.0 * 1e4)).epsilon(1e-14));
}

TEST_CASE("collapsing families") {
    FamilyRule rule;
    rule.poles = {{{1.0, 0.0}, 2.0, 1.0, 1}, {{-1.0, 0.0}, 2.0, 1.0, 1}};
    rule.count = 6;
    auto fam = make_family(rule);
    REQUIRE(fam.members.size() == 6);
    for (const auto& m : fam.members) {
        CHECK(m.tau == doctest::Approx(std::pow(m.k, -2.0)).epsilon(1e-15));
        auto q = m.normalized_poles();
        REQUIRE(q.size() == 2);
        CHECK(std::abs(std::abs(q[0].x) - 1.0) < 1e-15);
        CHECK(q[0].x == doctest::Approx(-q[1].x));
    }

    // k^-2 x and k^-1 x coincide at k = 1
    rule.poles.push_back({{1.0, 0.0}, 1.0, 1.0, 1});
    CHECK_THROWS_AS(make_family(rule), ConfigError);
    rule.first_index = 2;
    fam = make_family(rule);
    for (const auto& m : fam.members) {
        const auto& p = m.poles.poles();
        for (std::size_t j = 1; j < p.size(); ++j) CHECK(p[j - 1].norm() <= p[j].norm());
        CHECK(m.tau == doctest::Approx(1.0 / m.k).epsilon(1e-15));
        auto q = m.normalized_poles();
        CHECK(q[2].x == doctest::Approx(1.0));
        CHECK(q[0].norm() == doctest::Approx(1.0 / m.k));
    }
    for (std::size_t i = 1; i < fam.members.size(); ++i) {
        CHECK(fam.members[i].tau < fam.members[i - 1].tau);
        CHECK(fam.members[i].lambda >= fam.members[i - 1].lambda);
    }

    // k^-1 x and 2 k^-2 x coincide at k = 2
    FamilyRule clash;
    clash.poles = {{{1.0, 0.0}, 1.0, 1.0, 1}, {{1.0, 0.0}, 2.0, 2.0, 1}};
    CHECK_THROWS_AS(make_family(clash), ConfigError);
    FamilyRule bad = rule;
    bad.count = 3;
    CHECK_THROWS_AS(make_family(bad), ConfigError);
    bad = rule;
    bad.poles[0].exponent = 0.0;
    CHECK_THROWS_AS(make_family(bad), ConfigError);
    bad = rule;
    bad.poles[0].direction = {1.0, 1.0};
    CHECK_THROWS_AS(make_family(bad), ConfigError);
}

TEST_CASE("rescaling") {
    auto g = make_grid(65);
    PoleConfig cfg({Vec2{0.02, 0.01}}, {1});
    const auto m = polynomial_primitive(cfg).centered_at({0.0, 0.0}, 1e3);
    auto f = developing_map_field(g, m);

    auto same = rescale(f, 1.0, 1);
    for (auto idx : g->inside_nodes()) CHECK(same[idx] == f[idx]);

    const double tau = 0.05;
    auto phi = rescale(f, tau, 1);
    CHECK(phi.grid().radius() == doctest::Approx(20.0));
    CHECK(phi.value_at({0.0, 0.0}) == f.value_at({0.0, 0.0}) + 4.0 * std::log(tau));

    // change of variables with the rescaled weight
    WeightSpec w(cfg);
    const double delta = 0.5;
    const double before = weighted_mass(f, w, delta).value;
    const double after = weighted_mass(phi, w.rescaled(tau), delta / tau).value;
    CHECK(after == doctest::Approx(before).epsilon(1e-6));

    // sampled fields keep the shift at nodes that map onto nodes
    auto s = ScalarField::sampled(g, [](Vec2 x) { return x.x * x.x - x.y; });
    auto rs = rescale(s, 0.5, 0);
    CHECK(rs.value_at({0.0, 0.0}) == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-14));

    CHECK_THROWS_AS(rescale(f, 0.0, 1), DomainError);
    CHECK_THROWS_AS(rescale(f, -1.0, 1), DomainError);
    // the enlarged radius is capped
    CHECK(rescale(f, 1e-6, 1).grid().radius() == doctest::Approx(1e3));
}

TEST_CASE("singular part reconstruction") {
    auto g = make_grid(65);
    auto f = ScalarField::sampled(g, [](Vec2 x) { return std::sin(x.x) + x.y; });
    auto same = singular_part_reconstruct(f, PoleConfig{});
    for (auto idx : g->inside_nodes()) CHECK(same.field[idx] == f[idx]);
    CHECK(same.excluded_nodes.empty());

    // two poles at unit distance from the origin node
    PoleConfig cfg({Vec2{0.6, 0.8}, Vec2{-1.0, 0.0}}, {1, 2});
    auto u = singular_part_reconstruct(f, cfg);
    CHECK(u.field[g->origin_index()] == doctest::Approx(f[g->origin_index()]).epsilon(1e-15));

    // a pole on a node is excluded and flagged
    const Vec2 node = g->point(g->index(40, 30));
    PoleConfig on({node}, {1});
    auto v = singular_part_reconstruct(f, on);
    REQUIRE(v.excluded_nodes.size() == 1);
    CHECK(v.excluded_nodes[0] == g->index(40, 30));

    PoleConfig at_origin({Vec2{}}, {1});
    CHECK(origin_node_off_poles(*g, at_origin) != g->origin_index());
    CHECK(origin_node_off_poles(*g, cfg) == g->origin_index());
}

TEST_CASE("half-mass radius of the bubble scales like 1/lambda") {
    auto g = make_grid(65);
    WeightSpec flat;
    double prev = 0.0;
    for (double lam : {10.0, 100.0, 1000.0}) {
        auto b = radial_bubble(g, 0, lam);
        const double total = weighted_mass(b, flat, 1.0).value;
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (weighted_mass(b, flat, mid).value < 0.5 * total ? lo : hi) = mid;
        }
        const double half = 0.5 * (lo + hi);
        // 8 pi L/(1+L) with L = lambda^2 rho^2: half of the B_1 mass at rho^2 = 1/(2 + lambda^2)
        CHECK(half * lam == doctest::Approx(lam / std::sqrt(2.0 + lam * lam)).epsilon(1e-7));
        if (prev > 0.0) CHECK(prev / half == doctest::Approx(10.0).epsilon(0.01));
        prev = half;
    }
}
