// Spatially mollified Wiener increments and their analytic characterization.
//
// The mollifier is the resolvent kernel (I - delta^2 Laplacian)^{-n_moll}
// applied to the Dirac delta; per mode it multiplies coefficients by
// m_delta(m) = (1 + delta^2 alpha(m))^{-n_moll}. Unmollified increments carry
// complex variance dt per mode, so that synthesized fields are white in space.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "she/field.hpp"
#include "she/rng.hpp"
#include "she/torus_grid.hpp"

namespace she {

struct SpectralMultiplier {
    std::shared_ptr<const TorusGrid> grid;
    double delta = 0.0;
    int order = 1;                    // mollification order n_moll
    std::vector<double> value;        // m_delta per flat mode index
};

inline SpectralMultiplier build_multiplier(std::shared_ptr<const TorusGrid> grid, double delta,
                                           std::optional<int> n_moll = std::nullopt) {
    if (delta < 0.0) throw std::invalid_argument("build_multiplier: delta must be >= 0");
    const int d = grid->dimension();
    const int order = n_moll.value_or(1);
    if (order < 1) throw std::invalid_argument("build_multiplier: mollification order must be positive");
    if (4 * order <= d - 2)
        throw std::invalid_argument("build_multiplier: order must exceed (d-2)/4");
    SpectralMultiplier m;
    m.delta = delta;
    m.order = order;
    m.value.resize(grid->num_points());
    const double d2 = delta * delta;
    for (std::size_t i = 0; i < grid->num_points(); ++i)
        m.value[i] = std::pow(1.0 + d2 * grid->eigenvalue(i), -order);
    m.grid = std::move(grid);
    return m;
}

// Seeded, replayable stream of per-step per-mode Gaussian increments of the
// (unmollified) cylindrical Wiener process; one scalar component per arity
// slot. Increments are generated lazily and are addressable by step index.
class NoisePath {
public:
    NoisePath(std::shared_ptr<const TorusGrid> grid, std::uint64_t seed, double dt, int steps,
              int arity = 1)
        : grid_(std::move(grid)), seed_(seed), dt_(dt), steps_(steps), arity_(arity) {
        if (dt <= 0.0) throw std::invalid_argument("NoisePath: dt must be positive");
        if (steps < 1) throw std::invalid_argument("NoisePath: steps must be positive");
        if (arity != 1 && arity != grid_->dimension())
            throw std::invalid_argument("NoisePath: arity must be 1 or d");
        canonical_.reserve(grid_->num_points());
        for (std::size_t i = 0; i < grid_->num_points(); ++i) {
            const std::size_t conj = grid_->conjugate_index(i);
            if (conj == i)
                canonical_.push_back(kSelf);
            else
                canonical_.push_back(i < conj ? kDraw : kMirror);
        }
    }

    const std::shared_ptr<const TorusGrid>& grid() const { return grid_; }
    std::uint64_t seed() const { return seed_; }
    double dt() const { return dt_; }
    int steps() const { return steps_; }
    int arity() const { return arity_; }

    // Conjugate-symmetric spectral increment of one component, complex
    // variance dt per mode, independent across steps / modes / components.
    void raw_increment(int step, int component, std::complex<double>* out) const {
        if (step < 0 || step >= steps_) throw std::out_of_range("NoisePath: step index out of range");
        if (component < 0 || component >= arity_)
            throw std::out_of_range("NoisePath: component out of range");
        GaussianStream g(mix_seed(mix_seed(seed_, static_cast<std::uint64_t>(step)),
                                  static_cast<std::uint64_t>(component)));
        const double s_full = std::sqrt(dt_);
        const double s_half = std::sqrt(0.5 * dt_);
        const std::size_t pts = grid_->num_points();
        for (std::size_t i = 0; i < pts; ++i) {
            switch (canonical_[i]) {
                case kSelf:
                    out[i] = {s_full * g.next(), 0.0};
                    break;
                case kDraw:
                    out[i] = {s_half * g.next(), s_half * g.next()};
                    break;
                case kMirror:
                    out[i] = {0.0, 0.0};
                    break;
            }
        }
        for (std::size_t i = 0; i < pts; ++i)
            if (canonical_[i] == kMirror) out[i] = std::conj(out[grid_->conjugate_index(i)]);
    }

private:
    enum Kind : unsigned char { kSelf, kDraw, kMirror };
    std::shared_ptr<const TorusGrid> grid_;
    std::uint64_t seed_;
    double dt_;
    int steps_;
    int arity_;
    std::vector<unsigned char> canonical_;
};

// Mollified increment as a spectral Field (per-mode law N(0, dt m_delta^2)).
inline Field sample_increment(const NoisePath& path, int step, const SpectralMultiplier& mult) {
    if (mult.grid.get() != path.grid().get())
        throw std::invalid_argument("sample_increment: grid mismatch");
    Field out = Field::zeros(path.grid(), Representation::spectral, path.arity());
    for (int c = 0; c < path.arity(); ++c) {
        auto coeffs = out.spectral(c);
        path.raw_increment(step, c, coeffs.data());
        for (std::size_t i = 0; i < path.grid()->num_points(); ++i) coeffs[i] *= mult.value[i];
    }
    return out;
}

// <f,g>_delta = sum_m m_delta(m)^2 fhat(m) conj(ghat(m)); the covariance
// semi-inner-product of the mollified noise.
inline double weighted_inner(const Field& f, const Field& g, const SpectralMultiplier& mult) {
    if (f.grid().get() != g.grid().get() || f.grid().get() != mult.grid.get())
        throw std::invalid_argument("weighted_inner: grid mismatch");
    if (f.arity() != 1 || g.arity() != 1)
        throw std::invalid_argument("weighted_inner: scalar fields only");
    const Field fs = transform(f, Representation::spectral);
    const Field gs = transform(g, Representation::spectral);
    double acc = 0.0;
    auto a = fs.spectral(0);
    auto b = gs.spectral(0);
    for (std::size_t i = 0; i < mult.value.size(); ++i)
        acc += mult.value[i] * mult.value[i] * (a[i] * std::conj(b[i])).real();
    return acc;
}

// R_delta(z) = sum_m m_delta(m)^2 exp(i 2 pi m.z), the spatial covariance kernel.
inline double covariance_kernel(const SpectralMultiplier& mult, std::span<const double> z) {
    const auto& grid = *mult.grid;
    if (static_cast<int>(z.size()) != grid.dimension())
        throw std::invalid_argument("covariance_kernel: point dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.num_points(); ++i) {
        double phase = 0.0;
        for (int ax = 0; ax < grid.dimension(); ++ax)
            phase += static_cast<double>(grid.wavevector(i, ax)) * z[ax];
        acc += mult.value[i] * mult.value[i] * std::cos(2.0 * std::numbers::pi * phase);
    }
    return acc;
}

// Reference blow-up rate K_i(delta, d); i=1 non-conservative, i=2 conservative.
// The abstract constant for (i=1, d=1) is fixed to 1.
inline double k_reference(int icase, int d, double delta) {
    if (icase != 1 && icase != 2) throw std::invalid_argument("k_reference: case must be 1 or 2");
    if (d < 1) throw std::invalid_argument("k_reference: dimension must be positive");
    const bool singular = (icase == 2) || d >= 2;
    if (singular && !(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("k_reference: delta must lie in (0, 1/2)");
    if (icase == 2) return std::pow(delta, -static_cast<double>(d));
    if (d == 1) return 1.0;
    if (d == 2) return std::log(1.0 / delta);
    return std::pow(delta, -static_cast<double>(d) + 2.0);
}

// K_delta(t) on the resolved grid: t + sum_{m != 0} (1 - e^{-2 alpha t}) /
// (2 alpha) * m_delta(m)^2. Equals the time-integrated squared heat-kernel
// mollification by Parseval, and the pointwise variance of the order-1
// expansion coefficient when G == 1.
inline double convolution_variance(const SpectralMultiplier& mult, double t) {
    if (t < 0.0) throw std::invalid_argument("convolution_variance: negative time");
    const auto& grid = *mult.grid;
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.num_points(); ++i) {
        const double a = grid.eigenvalue(i);
        const double m2 = mult.value[i] * mult.value[i];
        if (a == 0.0)
            acc += t * m2;
        else
            acc += m2 * (1.0 - std::exp(-2.0 * a * t)) / (2.0 * a);
    }
    return acc;
}

}  // namespace she
