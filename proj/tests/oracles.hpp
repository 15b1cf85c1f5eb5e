// Test-only numerical oracles, independent of the library's spectral path:
// closed-form resolvent kernel on the circle, image-sum heat kernel, and
// quadrature of the time-integrated covariance double integral.
#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

// 8-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 4> kGlx{0.1834346424956498, 0.5255324099163290,
                                            0.7966664774136267, 0.9602898564975363};
inline constexpr std::array<double, 4> kGlw{0.3626837833783620, 0.3137066458778873,
                                            0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss8(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 4; ++i)
        acc += kGlw[i] * (f(mid + half * kGlx[i]) + f(mid - half * kGlx[i]));
    return acc * half;
}

template <class F>
double gauss8_composite(F&& f, double a, double b, int panels) {
    double acc = 0.0;
    for (int j = 0; j < panels; ++j)
        acc += gauss8(f, a + (b - a) * j / panels, a + (b - a) * (j + 1) / panels);
    return acc;
}

inline double fold(double x) {
    x -= std::round(x);
    return x;
}

// Fundamental solution of (I - delta^2 Lap) on the unit circle:
// eta(x) = cosh((1/2 - |x|)/delta) / (2 delta sinh(1/(2 delta))).
inline double eta_delta(double x, double delta) {
    const double ax = std::abs(fold(x));
    return std::cosh((0.5 - ax) / delta) / (2.0 * delta * std::sinh(0.5 / delta));
}

// R(z) = int_T eta(z + w) eta(w) dw, integrating each smooth arc separately
// (eta has corners at the origin of each factor).
inline double covariance_r(double z, double delta) {
    const double split = fold(-z) < 0.0 ? fold(-z) + 1.0 : fold(-z);  // in [0,1)
    auto f = [&](double w) { return eta_delta(z + w, delta) * eta_delta(w, delta); };
    const int panels = 48;
    double acc = 0.0;
    if (split > 1e-15) acc += gauss8_composite(f, 0.0, split, panels);
    if (1.0 - split > 1e-15) acc += gauss8_composite(f, split, 1.0, panels);
    return acc;
}

// Heat kernel on the circle by the method of images.
inline double heat_kernel(double t, double x) {
    const double xf = fold(x);
    double acc = 0.0;
    for (int k = -12; k <= 12; ++k) {
        const double y = xf + k;
        acc += std::exp(-y * y / (4.0 * t));
    }
    return acc / std::sqrt(4.0 * std::numbers::pi * t);
}

// K(t) = int_0^t int_{T^2} p(u,y1) p(u,y2) R(y1-y2) dy1 dy2 du for d = 1,
// mollification order 1. The inner pair integral collapses through the heat
// kernel's own semigroup identity to int p(2u, z) R(z) dz; the time integral
// is taken over dyadic panels with a Gaussian substitution below the lattice
// resolution.
inline double quad_convolution_variance(double delta, double t) {
    const int M = 2048;
    const double h = 1.0 / M;
    std::vector<double> r_lat(M), z_lat(M);
    for (int j = 0; j < M; ++j) {
        z_lat[j] = j * h;
        r_lat[j] = covariance_r(z_lat[j], delta);
    }
    auto j_lattice = [&](double w) {
        double acc = 0.0;
        for (int j = 0; j < M; ++j) acc += heat_kernel(w, z_lat[j]) * r_lat[j];
        return acc * h;
    };
    auto j_small = [&](double w) {
        // z = sqrt(2w) s against the standard normal weight
        const double sd = std::sqrt(2.0 * w);
        auto f = [&](double s) {
            return std::exp(-0.5 * s * s) / std::sqrt(2.0 * std::numbers::pi) *
                   covariance_r(sd * s, delta);
        };
        return gauss8_composite(f, -8.0, 8.0, 16);
    };
    const double w_min = 1e-4;
    auto integrand = [&](double w) { return w < w_min ? j_small(w) : j_lattice(w); };
    const double upper = 2.0 * t;
    double acc = 0.0;
    double hi = upper;
    for (int j = 0; j < 46; ++j) {
        const double lo = hi * 0.5;
        acc += gauss8(integrand, lo, hi);
        hi = lo;
    }
    return 0.5 * acc;
}

}  // namespace oracle
