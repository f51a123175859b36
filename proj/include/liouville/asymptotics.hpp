#pragma once

#include "liouville/exact_families.hpp"
#include "liouville/field.hpp"
#include "liouville/weight.hpp"

#include <optional>
#include <string>
#include <vector>

namespace liouville {

/// M_k(delta) = int_{B_delta} W_k e^{xi_k} on a decreasing delta grid.
struct MassProfile {
    std::vector<double> deltas;               // strictly decreasing
    std::vector<int> ks;
    std::vector<std::vector<double>> mass;    // [k][delta]
    std::vector<std::vector<double>> error;   // quadrature error estimates
    std::vector<std::vector<bool>> flagged;   // quadrature trouble at (k, delta)
    std::vector<double> local_mass;           // mu_k at L0 tau_k when requested, NaN otherwise
};

/// delta_i = r 2^{-i}, i = 0..levels-1.
std::vector<double> geometric_deltas(double r, int levels);

MassProfile mass_profile(const std::vector<ScalarField>& fields, const std::vector<WeightSpec>& weights,
                         const std::vector<double>& deltas, const std::vector<int>& ks = {},
                         const std::vector<double>& local_radii = {});

struct QuantizationVerdict {
    enum class Status { Quantized, NoBlowUp, Inconclusive };
    Status status = Status::Inconclusive;
    double sigma = 0.0;          // estimated blow-up mass
    int n = 0;                   // nearest ladder rung 8 pi n
    double residual = 0.0;       // |sigma - 8 pi n| / (8 pi)
    double plateau_slope = 0.0;  // largest |d ln M / d ln delta| inside the window
    int window_first = -1;       // delta indices spanned by the plateau
    int window_last = -1;
    std::string reason;
};

const char* to_string(QuantizationVerdict::Status s);

/// Plateau detection on the last k of the profile. Needs >= 4 delta levels and >= 4 k levels.
QuantizationVerdict estimate_sigma(const MassProfile& mp, double slope_threshold = 0.05);

struct PohozaevCheck {
    double r_in = 0.0, r_out = 0.0;
    double m_hat = 0.0;       // mass(B_{r_out}) / 2 pi
    double mu_hat = 0.0;      // mass(B_{r_in}) / 2 pi
    double algebraic_defect = 0.0;
    double lhs = 0.0;         // boundary functional at r_out minus at r_in
    double rhs = 0.0;         // int over the annulus of (2W + x . grad W) e^xi
    double identity_defect = 0.0;
    double tolerance = 0.0;   // combined quadrature error estimate of lhs and rhs
    bool radius_perturbed = false;
};

/// alpha is the total multiplicity entering m^2 - mu^2 = 4(1+alpha)(m - mu).
PohozaevCheck pohozaev_relation_check(const ScalarField& f, const WeightSpec& w, double r_in, double r_out,
                                      int alpha);

inline double pohozaev_algebraic_defect(double m, double mu, int alpha) {
    return m * m - mu * mu - 4.0 * (1.0 + alpha) * (m - mu);
}

struct FarFieldFit {
    double mu_hat = 0.0;   // best fit of grad xi = -mu x / |x|^2
    double defect = 0.0;   // max |grad xi + mu x/|x|^2| |x|^2 over the samples
};

FarFieldFit gradient_far_field_check(const ScalarField& f, const std::vector<double>& radii, int samples = 64);

/// Peak value at the node nearest the origin (off the poles), refined by a quadratic fit on
/// the 3x3 neighbourhood when the fitted maximum lies within one cell.
struct PeakValue {
    std::size_t node = 0;
    double node_value = 0.0;
    double value = 0.0;
    Vec2 location;
};
PeakValue peak_value(const ScalarField& f, const PoleConfig& poles = {});

/// Minimum of f over 256 samples of the circle |x| = rho (closed form when available).
double circle_min(const ScalarField& f, double rho);

struct EnergyCheck {
    bool applicable = true;
    double energy = 0.0;
    double peak = 0.0;
    double defect = 0.0;  // energy - 16 pi (xi(0) + ln W(0))
};
EnergyCheck energy_identity_check(const ScalarField& f, const WeightSpec& w, double r);

/// sup over B_r (minus 2h-discs around the poles) of |xi - ln(e^{xi0} / (1 + e^{xi0} W0 |x|^2 / 8)^2)|.
double profile_residual(const ScalarField& f, double w0, double r, const PoleConfig& exclude = {});

struct PointwiseBound {
    bool applicable = true;
    double c_upper = 0.0;       // max (xi - min_circle xi - (4 + eps) ln(1/|x|))
    double c_two_sided = 0.0;   // max |xi - min_circle xi - 4 ln(1/|x|)|
    std::size_t nodes = 0;
};
PointwiseBound pointwise_upper_bound_check(const ScalarField& f, double r, double eps, double inner_radius);

/// max - min of 256 samples on the circle |x| = rho.
double boundary_oscillation(const ScalarField& f, double rho);

struct PeakRelation {
    bool applicable = true;
    double defect = 0.0;  // xi(0) + min_circle xi + 2 ln W(0)
};
PeakRelation peak_boundary_relation(const ScalarField& f, const WeightSpec& w, double r);

struct CascadeReport {
    int s = 0;
    int s1 = 0;
    bool resolved = true;
    bool s1_below_two = false;   // the theorem expects at least two poles on the critical scale
    bool z_below_floor = false;
    std::vector<int> group;            // per pole (sorted by final modulus), 0 = innermost
    std::vector<bool> boundary_confident;  // per adjacent pair j, j+1
    std::vector<double> exponents;     // fitted e_j with |p_j| ~ k^{-e_j}
    std::vector<double> eps;           // eps_k = |p_{s1,k}|
    std::vector<Vec2> z;               // p_j / eps at the last k, j < s1
    std::vector<Vec2> q;               // p_j / |p_s| at the last k
    std::vector<bool> diverges;        // |p_j| / eps_k -> infinity (j >= s1)
};

/// trajectories[j][k]: pole j at the k-th family index; poles ordered by modulus at the last k.
CascadeReport detect_cascade(const std::vector<std::vector<Vec2>>& trajectories, const std::vector<int>& ks);
CascadeReport detect_cascade(const CollapsingFamily& family);

/// Pole paths of a family, one per rule, ordered by modulus at the last k.
std::vector<std::vector<Vec2>> pole_trajectories(const CollapsingFamily& family);

struct TrendFit {
    double slope = 0.0;
    double intercept = 0.0;
    bool monotone_increasing = false;
};
TrendFit fit_trend(const std::vector<double>& x, const std::vector<double>& y);

/// xi_k(0) + 2 ln|p_{s1,k}| + 2 sum_j alpha_j ln|p_{j,k}|, fitted against ln k.
struct DivergenceTrend {
    std::vector<double> values;
    TrendFit fit;
};
DivergenceTrend peak_scale_divergence_check(const std::vector<double>& peaks, const CollapsingFamily& family,
                                            const CascadeReport& cascade);

struct LadderVerdict {
    bool applicable = true;
    double total = 0.0;
    double outer_radius = 0.0;
    double sigma = 0.0;          // from total = 4 pi (sum beta + 1 + sigma)
    int n = 0;                   // nearest 8 pi n
    double residual = 0.0;       // |total - 8 pi n| / (8 pi)
    bool on_ladder = false;
    bool boundary_case = false;  // sigma == 1 within tolerance
    std::string reason;
};
/// f must carry a closed form valid on the whole plane.
LadderVerdict total_mass_ladder_check(const ScalarField& f, const WeightSpec& w, const std::vector<double>& betas,
                                      double tolerance = 1e-3);

} // namespace liouville
