#include "aircross/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aircross {

namespace {

void trim(std::vector<double>& c) {
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    if (c.empty()) c.push_back(0.0);
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / i;
    return r;
}

}  // namespace

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    trim(coeffs_);
}

double Polynomial::operator()(double t) const {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * t + *it;
    return acc;
}

Polynomial Polynomial::derivative(int order) const {
    if (order < 0) throw std::invalid_argument("derivative order must be >= 0");
    std::vector<double> c = coeffs_;
    for (int pass = 0; pass < order; ++pass) {
        if (c.size() == 1) {
            c[0] = 0.0;
            break;
        }
        std::vector<double> d(c.size() - 1);
        for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * static_cast<double>(i);
        c = std::move(d);
    }
    return Polynomial(std::move(c));
}

Polynomial Polynomial::antiderivative() const {
    std::vector<double> c(coeffs_.size() + 1, 0.0);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        c[i + 1] = coeffs_[i] / static_cast<double>(i + 1);
    return Polynomial(std::move(c));
}

double Polynomial::integrate(double lo, double hi) const {
    const Polynomial F = antiderivative();
    return F(hi) - F(lo);
}

Polynomial Polynomial::shifted(double tau) const {
    const int n = degree();
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i <= n; ++i) {
        if (coeffs_[static_cast<std::size_t>(i)] == 0.0) continue;
        double power = 1.0;  // tau^(i-j) built from j = i downward
        for (int j = i; j >= 0; --j) {
            c[static_cast<std::size_t>(j)] +=
                coeffs_[static_cast<std::size_t>(i)] * binomial(i, j) * power;
            power *= tau;
        }
    }
    return Polynomial(std::move(c));
}

Polynomial Polynomial::operator+(const Polynomial& rhs) const {
    std::vector<double> c(std::max(coeffs_.size(), rhs.coeffs_.size()), 0.0);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) c[i] += coeffs_[i];
    for (std::size_t i = 0; i < rhs.coeffs_.size(); ++i) c[i] += rhs.coeffs_[i];
    return Polynomial(std::move(c));
}

Polynomial Polynomial::operator-(const Polynomial& rhs) const { return *this + rhs * -1.0; }

Polynomial Polynomial::operator*(const Polynomial& rhs) const {
    std::vector<double> c(coeffs_.size() + rhs.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        for (std::size_t j = 0; j < rhs.coeffs_.size(); ++j)
            c[i + j] += coeffs_[i] * rhs.coeffs_[j];
    return Polynomial(std::move(c));
}

Polynomial Polynomial::operator*(double s) const {
    std::vector<double> c = coeffs_;
    for (double& v : c) v *= s;
    return Polynomial(std::move(c));
}

namespace {

// Bisection on an interval where p is monotone and changes sign.
double bisect(const Polynomial& p, double lo, double hi) {
    double flo = p(lo);
    if (flo == 0.0) return lo;
    double fhi = p(hi);
    if (fhi == 0.0) return hi;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double fm = p(mid);
        if (fm == 0.0) return mid;
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> Polynomial::roots_in(double lo, double hi) const {
    std::vector<double> roots;
    if (lo > hi || is_zero()) return roots;
    if (degree() == 0) return roots;
    if (degree() == 1) {
        const double r = -coeffs_[0] / coeffs_[1];
        if (r >= lo && r <= hi) roots.push_back(r);
        return roots;
    }
    // Breakpoints = stationary points; p is monotone between consecutive ones.
    std::vector<double> brk = derivative().roots_in(lo, hi);
    brk.push_back(lo);
    brk.push_back(hi);
    std::sort(brk.begin(), brk.end());
    for (std::size_t i = 0; i + 1 < brk.size(); ++i) {
        const double a = brk[i], b = brk[i + 1];
        if (a >= b) continue;
        const double fa = (*this)(a), fb = (*this)(b);
        if (fa == 0.0) roots.push_back(a);
        if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) roots.push_back(bisect(*this, a, b));
    }
    if ((*this)(hi) == 0.0) roots.push_back(hi);
    std::sort(roots.begin(), roots.end());
    const double span = std::max(1.0, std::abs(hi - lo));
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [span](double a, double b) { return std::abs(a - b) < 1e-12 * span; }),
                roots.end());
    return roots;
}

double Polynomial::min_on(double lo, double hi, double* argbest) const {
    double best = (*this)(lo), at = lo;
    auto consider = [&](double t) {
        const double v = (*this)(t);
        if (v < best) {
            best = v;
            at = t;
        }
    };
    consider(hi);
    for (double t : derivative().roots_in(lo, hi)) consider(t);
    if (argbest) *argbest = at;
    return best;
}

double Polynomial::max_on(double lo, double hi, double* argbest) const {
    const Polynomial neg = -*this;
    double at = lo;
    const double m = neg.min_on(lo, hi, &at);
    if (argbest) *argbest = at;
    return -m;
}

double integrate_abs(const Polynomial& p, double lo, double hi) {
    if (lo > hi) return -integrate_abs(p, hi, lo);
    std::vector<double> cuts = p.roots_in(lo, hi);
    cuts.push_back(lo);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    const Polynomial F = p.antiderivative();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (a >= b) continue;
        total += std::abs(F(b) - F(a));
    }
    return total;
}

}  // namespace aircross
