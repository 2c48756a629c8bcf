#pragma once

#include <cstddef>
#include <vector>

namespace aircross {

// Dense univariate polynomial with real coefficients in ascending power order:
// p(t) = c[0] + c[1] t + ... + c[n] t^n.  Always holds at least one
// coefficient; trailing zeros are trimmed on construction.
class Polynomial {
public:
    Polynomial() : coeffs_{0.0} {}
    explicit Polynomial(std::vector<double> coeffs);

    double operator()(double t) const;  // Horner evaluation

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<double>& coefficients() const { return coeffs_; }
    bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }

    Polynomial derivative(int order = 1) const;
    Polynomial antiderivative() const;  // integration constant 0
    double integrate(double lo, double hi) const;

    // q with q(t) = p(t + tau).
    Polynomial shifted(double tau) const;

    Polynomial operator+(const Polynomial& rhs) const;
    Polynomial operator-(const Polynomial& rhs) const;
    Polynomial operator*(const Polynomial& rhs) const;
    Polynomial operator*(double s) const;
    Polynomial operator-() const { return *this * -1.0; }

    // Real roots in [lo, hi], ascending, deduplicated.  Found by recursively
    // isolating monotone intervals with the derivative's roots, then
    // bisecting.  Exact for the zero polynomial: returns {} (would be the
    // whole interval).
    std::vector<double> roots_in(double lo, double hi) const;

    // Extremes over [lo, hi] (checks endpoints and interior stationary
    // points).  argbest, if non-null, receives the location.
    double min_on(double lo, double hi, double* argbest = nullptr) const;
    double max_on(double lo, double hi, double* argbest = nullptr) const;

private:
    std::vector<double> coeffs_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

// Integral of |p| over [lo, hi]: splits at sign changes and integrates each
// piece with the exact antiderivative.
double integrate_abs(const Polynomial& p, double lo, double hi);

}  // namespace aircross
