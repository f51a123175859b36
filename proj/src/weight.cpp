#include "liouville/weight.hpp"
#include "liouville/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace liouville {

PoleConfig::PoleConfig(std::vector<Vec2> poles, std::vector<int> multiplicities)
    : poles_(std::move(poles)), alphas_(std::move(multiplicities)) {
    if (poles_.size() != alphas_.size())
        throw ConfigError("pole list and multiplicity list differ in length");
    for (std::size_t j = 0; j < poles_.size(); ++j) {
        if (alphas_[j] < 1)
            throw ConfigError("pole multiplicity must be a positive integer (pole " + std::to_string(j) + ")");
        if (!std::isfinite(poles_[j].x) || !std::isfinite(poles_[j].y))
            throw ConfigError("pole " + std::to_string(j) + " is not finite");
        for (std::size_t l = 0; l < j; ++l)
            if (poles_[j] == poles_[l])
                throw ConfigError("poles must be pairwise distinct (p_j != p_l for j != l): poles " +
                                  std::to_string(l) + " and " + std::to_string(j) + " coincide");
    }
}

int PoleConfig::total_multiplicity() const { return std::accumulate(alphas_.begin(), alphas_.end(), 0); }

double PoleConfig::log_modulus(Vec2 x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < poles_.size(); ++j) {
        const double d = (x - poles_[j]).norm();
        if (d == 0.0) return -std::numeric_limits<double>::infinity();
        s += 2.0 * alphas_[j] * std::log(d);
    }
    return s;
}

double PoleConfig::modulus(Vec2 x) const {
    double m = 1.0;
    for (std::size_t j = 0; j < poles_.size(); ++j) m *= std::pow((x - poles_[j]).norm2(), alphas_[j]);
    return m;
}

PoleConfig PoleConfig::sorted_by_modulus() const {
    std::vector<std::size_t> order(poles_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return poles_[a].norm() < poles_[b].norm(); });
    std::vector<Vec2> p;
    std::vector<int> a;
    for (auto k : order) {
        p.push_back(poles_[k]);
        a.push_back(alphas_[k]);
    }
    return PoleConfig(std::move(p), std::move(a));
}

PoleConfig PoleConfig::scaled(double factor) const {
    std::vector<Vec2> p;
    p.reserve(poles_.size());
    for (auto q : poles_) p.push_back(q * factor);
    return PoleConfig(std::move(p), alphas_);
}

SmoothFactor SmoothFactor::constant_one() {
    SmoothFactor h;
    h.value = [](Vec2) { return 1.0; };
    return h;
}

WeightSpec::WeightSpec(PoleConfig poles, SmoothFactor h, double amplitude, double probe_radius)
    : poles_(std::move(poles)), h_(std::move(h)), amplitude_(amplitude) {
    if (!h_.value) throw ConfigError("smooth factor h needs a value callback");
    if (!(amplitude_ > 0.0)) throw ConfigError("weight amplitude must be positive");
    if (!(h_.lower > 0.0 && h_.lower <= h_.upper)) throw ConfigError("smooth factor bounds need 0 < a <= b");
    constexpr int probes = 64;
    for (int j = 0; j < probes; ++j) {
        for (int i = 0; i < probes; ++i) {
            const Vec2 x{probe_radius * (-1.0 + 2.0 * i / (probes - 1)),
                         probe_radius * (-1.0 + 2.0 * j / (probes - 1))};
            const double v = h_.value(x);
            const double slack = 1e-12 * h_.upper;
            if (!(v >= h_.lower - slack && v <= h_.upper + slack))
                throw ConfigError("smooth factor h violates a <= h <= b on the probe grid");
        }
    }
}

double WeightSpec::operator()(Vec2 x) const { return amplitude_ * poles_.modulus(x) * h_.value(x); }

double WeightSpec::log_value(Vec2 x) const {
    return std::log(amplitude_) + poles_.log_modulus(x) + std::log(h_.value(x));
}

double WeightSpec::radial_log_derivative(Vec2 x) const {
    double s = 0.0;
    const auto& p = poles_.poles();
    const auto& a = poles_.multiplicities();
    for (std::size_t j = 0; j < p.size(); ++j) {
        const Vec2 d = x - p[j];
        const double d2 = d.norm2();
        if (d2 > 0.0) s += 2.0 * a[j] * dot(x, d) / d2;
    }
    if (h_.gradient) s += dot(x, h_.gradient(x)) / h_.value(x);
    return s;
}

WeightSpec WeightSpec::rescaled(double tau) const {
    if (!(tau > 0.0)) throw DomainError("rescale factor must be positive");
    SmoothFactor h = h_;
    const auto hv = h_.value;
    h.value = [hv, tau](Vec2 x) { return hv(x * tau); };
    if (h_.gradient) {
        const auto hg = h_.gradient;
        h.gradient = [hg, tau](Vec2 x) { return hg(x * tau) * tau; };
        h.grad_bound = h_.grad_bound * tau;
    }
    WeightSpec w;
    w.poles_ = poles_.scaled(1.0 / tau);
    w.h_ = std::move(h);
    w.amplitude_ = amplitude_;
    return w;
}

} // namespace liouville
