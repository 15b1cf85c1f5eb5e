// Truncated Taylor-series arithmetic (value plus derivatives up to a fixed
// order). Used to differentiate composite coefficients such as
// sqrt(u(1-u)) and bump-function cutoffs without hand-derived formulas.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace she {

// Coefficients c[k] of f(x0 + h) = sum_k c[k] h^k, so f^{(k)}(x0) = k! c[k].
class Jet {
public:
    explicit Jet(int order) : c_(static_cast<std::size_t>(order) + 1, 0.0) {}

    static Jet constant(int order, double v) {
        Jet j(order);
        j.c_[0] = v;
        return j;
    }
    static Jet variable(int order, double x0) {
        Jet j(order);
        j.c_[0] = x0;
        if (order >= 1) j.c_[1] = 1.0;
        return j;
    }

    int order() const { return static_cast<int>(c_.size()) - 1; }
    double operator[](int k) const { return c_[static_cast<std::size_t>(k)]; }
    double& operator[](int k) { return c_[static_cast<std::size_t>(k)]; }

    double derivative(int k) const {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) f *= i;
        return c_[static_cast<std::size_t>(k)] * f;
    }

    friend Jet operator+(const Jet& a, const Jet& b) {
        Jet r(a.order());
        for (int k = 0; k <= a.order(); ++k) r[k] = a[k] + b[k];
        return r;
    }
    friend Jet operator-(const Jet& a, const Jet& b) {
        Jet r(a.order());
        for (int k = 0; k <= a.order(); ++k) r[k] = a[k] - b[k];
        return r;
    }
    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r(a.order());
        for (int k = 0; k <= a.order(); ++k) {
            double s = 0.0;
            for (int j = 0; j <= k; ++j) s += a[j] * b[k - j];
            r[k] = s;
        }
        return r;
    }
    friend Jet operator*(double s, const Jet& a) {
        Jet r(a.order());
        for (int k = 0; k <= a.order(); ++k) r[k] = s * a[k];
        return r;
    }
    friend Jet operator/(const Jet& a, const Jet& b) {
        if (b[0] == 0.0) throw std::domain_error("Jet division by zero leading coefficient");
        Jet r(a.order());
        for (int k = 0; k <= a.order(); ++k) {
            double s = a[k];
            for (int j = 0; j < k; ++j) s -= r[j] * b[k - j];
            r[k] = s / b[0];
        }
        return r;
    }

private:
    std::vector<double> c_;
};

inline Jet sqrt(const Jet& g) {
    if (g[0] <= 0.0) throw std::domain_error("Jet sqrt of non-positive value");
    Jet r(g.order());
    r[0] = std::sqrt(g[0]);
    for (int k = 1; k <= g.order(); ++k) {
        double s = g[k];
        for (int j = 1; j < k; ++j) s -= r[j] * r[k - j];
        r[k] = s / (2.0 * r[0]);
    }
    return r;
}

inline Jet exp(const Jet& g) {
    Jet r(g.order());
    r[0] = std::exp(g[0]);
    // r' = g' r  =>  k r_k = sum_{j=1}^{k} j g_j r_{k-j}
    for (int k = 1; k <= g.order(); ++k) {
        double s = 0.0;
        for (int j = 1; j <= k; ++j) s += j * g[j] * r[k - j];
        r[k] = s / k;
    }
    return r;
}

}  // namespace she
