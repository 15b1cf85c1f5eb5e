// Diffusion coefficients G with derivative stacks up to a declared order,
// the irregular prototypes, and the smooth extension used for local-in-time
// runs of equations with window-smooth G.
#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "she/jet.hpp"

namespace she {

enum class SmoothClass { globally_smooth, window_smooth };

inline constexpr int kMaxDerivativeOrder = 6;

class DiffusionCoefficient {
public:
    // evaluator fills out[0..upto] with G^{(l)}(u)
    using Evaluator = std::function<void(double u, int upto, double* out)>;

    DiffusionCoefficient() = default;
    DiffusionCoefficient(std::string name, SmoothClass cls, double domain_lo, double domain_hi,
                         Evaluator eval)
        : name_(std::move(name)), class_(cls), lo_(domain_lo), hi_(domain_hi),
          eval_(std::move(eval)) {}

    const std::string& name() const { return name_; }
    SmoothClass smoothness() const { return class_; }
    int max_order() const { return kMaxDerivativeOrder; }
    double domain_lower() const { return lo_; }
    double domain_upper() const { return hi_; }

    double operator()(double u) const {
        double out[1];
        eval_(u, 0, out);
        return out[0];
    }

    void derivatives(double u, int upto, double* out) const {
        if (upto > kMaxDerivativeOrder)
            throw std::invalid_argument("DiffusionCoefficient: derivative order exceeds max_order");
        eval_(u, upto, out);
    }

    double derivative(double u, int l) const {
        if (l > kMaxDerivativeOrder)
            throw std::invalid_argument("DiffusionCoefficient: derivative order exceeds max_order");
        std::vector<double> out(static_cast<std::size_t>(l) + 1);
        eval_(u, l, out.data());
        return out[static_cast<std::size_t>(l)];
    }

    // sup |G^{(l)}| over the smooth domain, by dense sampling of a bounded
    // window (the domain itself when finite).
    double derivative_bound(int l) const {
        double a = std::isfinite(lo_) ? lo_ : -10.0;
        double b = std::isfinite(hi_) ? hi_ : 10.0;
        if (std::isfinite(lo_)) a += 1e-9 * (b - a);
        if (std::isfinite(hi_)) b -= 1e-9 * (b - a);
        const int samples = 4000;
        std::vector<double> out(static_cast<std::size_t>(l) + 1);
        double best = 0.0;
        for (int i = 0; i <= samples; ++i) {
            const double u = a + (b - a) * i / samples;
            eval_(u, l, out.data());
            best = std::max(best, std::abs(out[static_cast<std::size_t>(l)]));
        }
        return best;
    }

private:
    std::string name_;
    SmoothClass class_ = SmoothClass::globally_smooth;
    double lo_ = -std::numeric_limits<double>::infinity();
    double hi_ = std::numeric_limits<double>::infinity();
    Evaluator eval_;
};

namespace detail {

inline void constant_eval(double c, int upto, double* out) {
    out[0] = c;
    for (int l = 1; l <= upto; ++l) out[l] = 0.0;
}

inline void cosine_eval(double u, int upto, double* out) {
    for (int l = 0; l <= upto; ++l) out[l] = std::cos(u + 0.5 * std::numbers::pi * l);
}

// 1/(1+u^2) = Im (u - i)^{-1}; the l-th derivative is (-1)^l l! Im (u-i)^{-(l+1)}.
inline void rational_eval(double u, int upto, double* out) {
    const std::complex<double> z(u, -1.0);
    std::complex<double> zpow = 1.0 / z;
    double fact = 1.0;
    double sign = 1.0;
    for (int l = 0; l <= upto; ++l) {
        out[l] = sign * fact * zpow.imag();
        zpow /= z;
        fact *= (l + 1);
        sign = -sign;
    }
}

inline void sqrt_eval(double u, int upto, double* out) {
    // G^{(l)}(u) = (1/2)(1/2 - 1)...(1/2 - l + 1) u^{1/2 - l}
    double coeff = 1.0;
    for (int l = 0; l <= upto; ++l) {
        out[l] = coeff * std::pow(u, 0.5 - l);
        coeff *= (0.5 - l);
    }
}

inline void logistic_sqrt_eval(double u, int upto, double* out) {
    Jet x = Jet::variable(upto, u);
    Jet g = she::sqrt(x * (Jet::constant(upto, 1.0) - x));
    for (int l = 0; l <= upto; ++l) out[l] = g.derivative(l);
}

// C-infinity step: 0 for s <= 0, 1 for s >= 1.
inline Jet smoothstep_jet(const Jet& s) {
    const int K = s.order();
    auto bump = [K](const Jet& t) {
        return she::exp(Jet::constant(K, -1.0) / t);  // exp(-1/t), valid for t0 > 0
    };
    return bump(s) / (bump(s) + bump(Jet::constant(K, 1.0) - s));
}

}  // namespace detail

// Globally smooth presets: "constant(c)", "cosine", "rational".
inline DiffusionCoefficient smooth_preset(const std::string& name) {
    const double inf = std::numeric_limits<double>::infinity();
    double c = 1.0;
    if (name == "constant" || std::sscanf(name.c_str(), "constant(%lf)", &c) == 1) {
        return DiffusionCoefficient(name, SmoothClass::globally_smooth, -inf, inf,
                                    [c](double, int upto, double* out) { detail::constant_eval(c, upto, out); });
    }
    if (name == "cosine")
        return DiffusionCoefficient(name, SmoothClass::globally_smooth, -inf, inf, detail::cosine_eval);
    if (name == "rational")
        return DiffusionCoefficient(name, SmoothClass::globally_smooth, -inf, inf, detail::rational_eval);
    throw std::invalid_argument("smooth_preset: unknown preset '" + name + "'");
}

// Window-smooth prototypes: "sqrt" on (0, inf), "logistic-sqrt" on (0, 1).
inline DiffusionCoefficient irregular_preset(const std::string& name) {
    const double inf = std::numeric_limits<double>::infinity();
    if (name == "sqrt")
        return DiffusionCoefficient(name, SmoothClass::window_smooth, 0.0, inf, detail::sqrt_eval);
    if (name == "logistic-sqrt")
        return DiffusionCoefficient(name, SmoothClass::window_smooth, 0.0, 1.0,
                                    detail::logistic_sqrt_eval);
    throw std::invalid_argument("irregular_preset: unknown preset '" + name + "'");
}

inline DiffusionCoefficient coefficient_preset(const std::string& name) {
    if (name == "sqrt" || name == "logistic-sqrt") return irregular_preset(name);
    return smooth_preset(name);
}

// G0: equal to g on [window_lo, window_hi], identically zero beyond the
// margin, C-infinity bump blend in between. The blend window must stay inside
// g's domain of smoothness.
inline DiffusionCoefficient smooth_extension(const DiffusionCoefficient& g, double window_lo,
                                             double window_hi, double margin) {
    if (!(margin > 0.0)) throw std::invalid_argument("smooth_extension: margin must be positive");
    if (!(window_lo < window_hi)) throw std::invalid_argument("smooth_extension: empty window");
    if (window_lo - margin <= g.domain_lower() || window_hi + margin >= g.domain_upper())
        throw std::invalid_argument("smooth_extension: window plus margin touches a singularity of G");
    auto inner = std::make_shared<DiffusionCoefficient>(g);
    auto eval = [inner, window_lo, window_hi, margin](double u, int upto, double* out) {
        if (u >= window_lo && u <= window_hi) {
            inner->derivatives(u, upto, out);
            return;
        }
        if (u <= window_lo - margin || u >= window_hi + margin) {
            for (int l = 0; l <= upto; ++l) out[l] = 0.0;
            return;
        }
        // transition region: G0 = G * psi(s), s in (0,1)
        const double s0 = (u > window_hi) ? (window_hi + margin - u) / margin
                                          : (u - (window_lo - margin)) / margin;
        Jet s(upto);
        s[0] = s0;
        if (upto >= 1) s[1] = (u > window_hi) ? -1.0 / margin : 1.0 / margin;
        Jet gj(upto);
        {
            std::vector<double> derivs(static_cast<std::size_t>(upto) + 1);
            inner->derivatives(u, upto, derivs.data());
            double fact = 1.0;
            for (int l = 0; l <= upto; ++l) {
                gj[l] = derivs[static_cast<std::size_t>(l)] / fact;
                fact *= (l + 1);
            }
        }
        Jet g0 = gj * detail::smoothstep_jet(s);
        for (int l = 0; l <= upto; ++l) out[l] = g0.derivative(l);
    };
    return DiffusionCoefficient("extended(" + g.name() + ")", SmoothClass::globally_smooth,
                                -std::numeric_limits<double>::infinity(),
                                std::numeric_limits<double>::infinity(), std::move(eval));
}

// |G(a) - G(b) - sum_{l=1}^{n-1} G^{(l)}(b) (a-b)^l / l!|
inline double taylor_remainder(const DiffusionCoefficient& g, double a, double b, int n) {
    if (n < 1 || n > g.max_order())
        throw std::invalid_argument("taylor_remainder: order out of range");
    std::vector<double> derivs(static_cast<std::size_t>(n));
    g.derivatives(b, n - 1, derivs.data());
    double acc = g(a) - derivs[0];
    double pow_term = 1.0;
    double fact = 1.0;
    for (int l = 1; l <= n - 1; ++l) {
        pow_term *= (a - b);
        fact *= l;
        acc -= derivs[static_cast<std::size_t>(l)] * pow_term / fact;
    }
    return std::abs(acc);
}

}  // namespace she
