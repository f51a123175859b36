#pragma once

#include "liouville/field.hpp"
#include "liouville/polynomial.hpp"
#include "liouville/weight.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace liouville {

/// Closed form of ln(8(1+alpha)^2 lambda^2 / (1 + lambda^2 |x|^{2(1+alpha)})^2), which solves
/// -Delta u = |x|^{2 alpha} e^u on the whole plane.
ClosedForm radial_bubble_form(int alpha, double lambda);
ScalarField radial_bubble(std::shared_ptr<const DiskGrid> grid, int alpha, double lambda);

/// Polynomial developing map data: xi = ln(8 lambda^2 / (1 + |lambda (F(z) - c)|^2)^2) solves
/// -Delta xi = prod |z - p_j|^{2 alpha_j} e^xi when F' = prod (z - p_j)^{alpha_j}.
struct DevelopingMap {
    PoleConfig poles;
    ComplexPolynomial primitive;  // F, zero constant term
    double amplitude = 1.0;       // lambda
    Complex shift{};              // c
    Complex anchor{};             // expansion point; centered maps have F(anchor) = c
    bool centered = true;

    int degree() const { return primitive.degree(); }
    /// F(anchor + w) - c as a polynomial in w (exact zero constant term when centered).
    ComplexPolynomial shifted_primitive() const;
    /// Checks F' against the product form at 8 pseudo-random points and the centering rule.
    void validate() const;
    /// Same primitive, amplitude lambda, centered at the given anchor.
    DevelopingMap centered_at(Complex anchor, double lambda) const;
};

inline constexpr int max_developing_degree = 64;

/// Expands prod (z - p_j)^{alpha_j} and integrates termwise. Centered at the origin, lambda = 1.
DevelopingMap polynomial_primitive(const PoleConfig& cfg);

ClosedForm developing_map_form(const DevelopingMap& m);
ScalarField developing_map_field(std::shared_ptr<const DiskGrid> grid, const DevelopingMap& m);

/// Points where lambda |F - c| = 1 shrinks to a bubble: roots of F - c with their length scales.
std::vector<HotSpot> developing_map_hotspots(const DevelopingMap& m);

/// One collapsing pole: p_k = coefficient * k^{-exponent} * direction.
struct PoleRule {
    Vec2 direction{1.0, 0.0};
    double exponent = 1.0;
    double coefficient = 1.0;
    int multiplicity = 1;
};

/// lambda_k = lambda0 * k^gamma (power) or lambda0 * base^k (geometric).
struct LambdaSchedule {
    enum class Kind { Power, Geometric };
    Kind kind = Kind::Power;
    double lambda0 = 10.0;
    double gamma = 1.0;
    double base = 10.0;

    double at(int k) const;
};

struct FamilyRule {
    std::vector<PoleRule> poles;
    LambdaSchedule lambda;
    int count = 6;       // K
    int first_index = 1;
    Vec2 anchor{};       // blow-up anchor (collapsing point by default)
};

struct FamilyMember {
    int k = 0;
    PoleConfig poles;  // sorted by nondecreasing modulus
    double tau = 0.0;  // max_j |p_{j,k}|
    double lambda = 0.0;
    DevelopingMap map;

    /// q_{j,k} = p_{j,k} / tau_k
    std::vector<Vec2> normalized_poles() const;
};

struct CollapsingFamily {
    FamilyRule rule;
    std::vector<FamilyMember> members;
};

/// Validates the rule (positive exponents, unit directions, K >= 4) and builds every member.
/// Duplicate poles at any k are rejected with ConfigError.
CollapsingFamily make_family(const FamilyRule& rule);

/// phi(x) = f(tau x) + 2(alpha+1) ln tau on the disk of radius min(r/tau, 1000 r).
ScalarField rescale(const ScalarField& f, double tau, int alpha);

struct SingularReconstruction {
    ScalarField field;
    std::vector<std::size_t> excluded_nodes;  // nodes that coincide with a pole
};

/// u = f + sum_j 2 alpha_j ln|x - p_j|.
SingularReconstruction singular_part_reconstruct(const ScalarField& f, const PoleConfig& cfg);

/// Node nearest to the origin that is not a pole.
std::size_t origin_node_off_poles(const DiskGrid& grid, const PoleConfig& cfg);

} // namespace liouville
