#pragma once

#include "liouville/geometry.hpp"

#include <functional>
#include <vector>

namespace liouville {

/// Pole positions p_j with positive integer multiplicities alpha_j.
class PoleConfig {
public:
    PoleConfig() = default;
    /// Throws ConfigError on duplicate poles or multiplicities < 1.
    PoleConfig(std::vector<Vec2> poles, std::vector<int> multiplicities);

    const std::vector<Vec2>& poles() const { return poles_; }
    const std::vector<int>& multiplicities() const { return alphas_; }
    std::size_t size() const { return poles_.size(); }
    bool empty() const { return poles_.empty(); }
    int total_multiplicity() const;

    /// sum_j 2 alpha_j ln|x - p_j|; -inf at a pole.
    double log_modulus(Vec2 x) const;
    /// prod_j |x - p_j|^{2 alpha_j}
    double modulus(Vec2 x) const;
    /// Poles sorted by nondecreasing modulus (multiplicities follow).
    PoleConfig sorted_by_modulus() const;
    PoleConfig scaled(double factor) const;

private:
    std::vector<Vec2> poles_;
    std::vector<int> alphas_;
};

/// Smooth positive factor h with 0 < lower <= h <= upper and |grad h| <= grad_bound.
struct SmoothFactor {
    std::function<double(Vec2)> value;
    std::function<Vec2(Vec2)> gradient;
    double lower = 1.0;
    double upper = 1.0;
    double grad_bound = 0.0;

    static SmoothFactor constant_one();
};

/// W(x) = amplitude * prod_j |x - p_j|^{2 alpha_j} * h(x).
class WeightSpec {
public:
    WeightSpec() : WeightSpec(PoleConfig{}) {}
    explicit WeightSpec(PoleConfig poles, SmoothFactor h = SmoothFactor::constant_one(),
                        double amplitude = 1.0, double probe_radius = 1.0);

    const PoleConfig& poles() const { return poles_; }
    const SmoothFactor& smooth() const { return h_; }
    double amplitude() const { return amplitude_; }
    bool smooth_is_constant() const { return !h_.gradient; }

    double operator()(Vec2 x) const;
    double log_value(Vec2 x) const;
    /// x . grad W / W, the Pohozaev area weight minus 2.
    double radial_log_derivative(Vec2 x) const;

    /// Weight of the rescaled problem: prod |x - p_j/tau|^{2 alpha_j} h(tau x).
    WeightSpec rescaled(double tau) const;

private:
    PoleConfig poles_;
    SmoothFactor h_;
    double amplitude_;
};

} // namespace liouville
