#include "liouville/polynomial.hpp"
#include "liouville/errors.hpp"

#include <algorithm>
#include <cmath>

namespace liouville {

ComplexPolynomial::ComplexPolynomial(std::vector<Complex> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.push_back({});
    trim();
}

void ComplexPolynomial::trim() {
    while (coeffs_.size() > 1 && coeffs_.back() == Complex{}) coeffs_.pop_back();
}

ComplexPolynomial ComplexPolynomial::monomial_root(Complex root) { return ComplexPolynomial({-root, Complex{1.0, 0.0}}); }

Complex ComplexPolynomial::operator()(Complex z) const {
    Complex acc{};
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * z + *it;
    return acc;
}

std::pair<Complex, Complex> ComplexPolynomial::eval_with_derivative(Complex z) const {
    Complex p{}, dp{};
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
        dp = dp * z + p;
        p = p * z + *it;
    }
    return {p, dp};
}

ComplexPolynomial ComplexPolynomial::operator*(const ComplexPolynomial& o) const {
    std::vector<Complex> out(coeffs_.size() + o.coeffs_.size() - 1);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        for (std::size_t j = 0; j < o.coeffs_.size(); ++j) out[i + j] += coeffs_[i] * o.coeffs_[j];
    return ComplexPolynomial(std::move(out));
}

ComplexPolynomial ComplexPolynomial::operator-(Complex c) const {
    auto out = coeffs_;
    out[0] -= c;
    return ComplexPolynomial(std::move(out));
}

ComplexPolynomial ComplexPolynomial::derivative() const {
    if (coeffs_.size() == 1) return ComplexPolynomial();
    std::vector<Complex> out(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k) out[k - 1] = coeffs_[k] * static_cast<double>(k);
    return ComplexPolynomial(std::move(out));
}

ComplexPolynomial ComplexPolynomial::primitive() const {
    std::vector<Complex> out(coeffs_.size() + 1);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) out[k + 1] = coeffs_[k] / static_cast<double>(k + 1);
    return ComplexPolynomial(std::move(out));
}

ComplexPolynomial ComplexPolynomial::taylor_shift(Complex a) const {
    // repeated synthetic division
    auto c = coeffs_;
    const std::size_t n = c.size();
    for (std::size_t k = 0; k + 1 < n; ++k)
        for (std::size_t j = n - 1; j > k; --j) c[j - 1] += a * c[j];
    return ComplexPolynomial(std::move(c));
}

ComplexPolynomial ComplexPolynomial::scaled_argument(double s) const {
    auto c = coeffs_;
    double f = 1.0;
    for (auto& v : c) {
        v *= f;
        f *= s;
    }
    return ComplexPolynomial(std::move(c));
}

std::vector<Complex> ComplexPolynomial::roots() const {
    const int n = degree();
    if (n < 1) return {};
    // leading zeros at the origin are exact
    std::size_t low = 0;
    while (low < coeffs_.size() && coeffs_[low] == Complex{}) ++low;
    std::vector<Complex> out(low, Complex{});
    if (static_cast<int>(low) == n) return out;
    ComplexPolynomial q(std::vector<Complex>(coeffs_.begin() + static_cast<std::ptrdiff_t>(low), coeffs_.end()));
    const int m = q.degree();
    // Cauchy bound for the initial circle
    double bound = 0.0;
    const double lead = std::abs(q.coeffs_.back());
    for (int k = 0; k < m; ++k) bound = std::max(bound, std::abs(q.coeffs_[k]) / lead);
    const double radius = std::max(1e-300, 0.5 * (1.0 + bound));
    std::vector<Complex> z(m);
    for (int k = 0; k < m; ++k) z[k] = std::polar(radius, 2.0 * pi * k / m + 0.4);
    for (int iter = 0; iter < 500; ++iter) {
        double change = 0.0;
        for (int k = 0; k < m; ++k) {
            auto [p, dp] = q.eval_with_derivative(z[k]);
            if (p == Complex{}) continue;
            const Complex ratio = p / dp;
            Complex sum{};
            for (int j = 0; j < m; ++j)
                if (j != k && z[k] != z[j]) sum += 1.0 / (z[k] - z[j]);
            const Complex step = ratio / (1.0 - ratio * sum);
            if (std::isfinite(step.real()) && std::isfinite(step.imag())) {
                z[k] -= step;
                change = std::max(change, std::abs(step) / std::max(1.0, std::abs(z[k])));
            }
        }
        if (change < 1e-15) break;
    }
    out.insert(out.end(), z.begin(), z.end());
    return out;
}

} // namespace liouville
