#pragma once

#include "liouville/geometry.hpp"

#include <vector>

namespace liouville {

/// Dense complex polynomial, coefficients in increasing degree.
class ComplexPolynomial {
public:
    ComplexPolynomial() : coeffs_{Complex{0.0, 0.0}} {}
    explicit ComplexPolynomial(std::vector<Complex> coeffs);

    static ComplexPolynomial monomial_root(Complex root);  // z - root

    const std::vector<Complex>& coefficients() const { return coeffs_; }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    Complex operator[](std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : Complex{}; }

    Complex operator()(Complex z) const;
    /// Value and first derivative in one Horner pass.
    std::pair<Complex, Complex> eval_with_derivative(Complex z) const;

    ComplexPolynomial operator*(const ComplexPolynomial& o) const;
    ComplexPolynomial operator-(Complex c) const;
    ComplexPolynomial derivative() const;
    /// Termwise primitive with zero constant term.
    ComplexPolynomial primitive() const;
    /// p(a + w) as a polynomial in w.
    ComplexPolynomial taylor_shift(Complex a) const;
    ComplexPolynomial scaled_argument(double s) const;  // p(s w)

    /// All roots (with multiplicity) by Aberth-Ehrlich iteration.
    std::vector<Complex> roots() const;

private:
    void trim();
    std::vector<Complex> coeffs_;
};

} // namespace liouville
