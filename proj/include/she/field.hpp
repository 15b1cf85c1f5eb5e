// Scalar or vector fields on a TorusGrid, carried either as real values on
// the physical lattice or as conjugate-symmetric Fourier coefficients.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "she/torus_grid.hpp"

namespace she {

enum class Representation { physical, spectral };

class Field {
public:
    Field() = default;

    static Field zeros(std::shared_ptr<const TorusGrid> grid, Representation rep, int arity = 1) {
        Field f;
        f.grid_ = std::move(grid);
        f.rep_ = rep;
        f.arity_ = check_arity(*f.grid_, arity);
        const std::size_t total = f.grid_->num_points() * static_cast<std::size_t>(arity);
        if (rep == Representation::physical)
            f.phys_.assign(total, 0.0);
        else
            f.spec_.assign(total, {0.0, 0.0});
        return f;
    }

    static Field from_physical(std::shared_ptr<const TorusGrid> grid, std::vector<double> values,
                               int arity = 1) {
        if (values.size() != grid->num_points() * static_cast<std::size_t>(arity))
            throw std::invalid_argument("Field: physical size mismatch");
        Field f;
        f.grid_ = std::move(grid);
        f.rep_ = Representation::physical;
        f.arity_ = check_arity(*f.grid_, arity);
        f.phys_ = std::move(values);
        return f;
    }

    static Field from_spectral(std::shared_ptr<const TorusGrid> grid,
                               std::vector<std::complex<double>> coeffs, int arity = 1) {
        if (coeffs.size() != grid->num_points() * static_cast<std::size_t>(arity))
            throw std::invalid_argument("Field: spectral size mismatch");
        Field f;
        f.grid_ = std::move(grid);
        f.rep_ = Representation::spectral;
        f.arity_ = check_arity(*f.grid_, arity);
        f.spec_ = std::move(coeffs);
        return f;
    }

    static Field constant(std::shared_ptr<const TorusGrid> grid, double value) {
        Field f = zeros(std::move(grid), Representation::physical);
        for (double& v : f.phys_) v = value;
        return f;
    }

    const std::shared_ptr<const TorusGrid>& grid() const { return grid_; }
    Representation representation() const { return rep_; }
    int arity() const { return arity_; }
    bool empty() const { return !grid_; }

    std::span<double> physical() { return phys_; }
    std::span<const double> physical() const { return phys_; }
    std::span<std::complex<double>> spectral() { return spec_; }
    std::span<const std::complex<double>> spectral() const { return spec_; }

    std::span<double> physical(int component) {
        return std::span<double>(phys_).subspan(component * grid_->num_points(), grid_->num_points());
    }
    std::span<const double> physical(int component) const {
        return std::span<const double>(phys_).subspan(component * grid_->num_points(), grid_->num_points());
    }
    std::span<std::complex<double>> spectral(int component) {
        return std::span<std::complex<double>>(spec_).subspan(component * grid_->num_points(),
                                                              grid_->num_points());
    }
    std::span<const std::complex<double>> spectral(int component) const {
        return std::span<const std::complex<double>>(spec_).subspan(component * grid_->num_points(),
                                                                    grid_->num_points());
    }

private:
    static int check_arity(const TorusGrid& g, int arity) {
        if (arity != 1 && arity != g.dimension())
            throw std::invalid_argument("Field: arity must be 1 or the grid dimension");
        return arity;
    }

    std::shared_ptr<const TorusGrid> grid_;
    Representation rep_ = Representation::physical;
    int arity_ = 1;
    std::vector<double> phys_;
    std::vector<std::complex<double>> spec_;
};

inline Field transform(const Field& f, Representation target) {
    if (f.empty()) throw std::invalid_argument("transform: empty field");
    if (f.representation() == target) return f;
    const auto& grid = *f.grid();
    const std::size_t pts = grid.num_points();
    if (target == Representation::spectral) {
        Field out = Field::zeros(f.grid(), Representation::spectral, f.arity());
        for (int c = 0; c < f.arity(); ++c)
            grid.forward(f.physical(c).data(), out.spectral(c).data());
        return out;
    }
    Field out = Field::zeros(f.grid(), Representation::physical, f.arity());
    for (int c = 0; c < f.arity(); ++c)
        grid.backward(f.spectral(c).data(), out.physical(c).data());
    (void)pts;
    return out;
}

// Exact heat semigroup S(t): multiply mode m by exp(-alpha(m) t).
inline Field heat_propagate(const Field& f, double t) {
    if (f.representation() != Representation::spectral)
        throw std::invalid_argument("heat_propagate: field must be spectral");
    if (t < 0.0) throw std::invalid_argument("heat_propagate: negative time");
    const auto& grid = *f.grid();
    Field out = f;
    for (int c = 0; c < f.arity(); ++c) {
        auto coeffs = out.spectral(c);
        for (std::size_t i = 0; i < grid.num_points(); ++i)
            coeffs[i] *= std::exp(-grid.eigenvalue(i) * t);
    }
    return out;
}

namespace detail {

// i*2*pi*m_axis, with the unpaired Nyquist component zeroed so derivatives of
// real fields stay real.
inline std::complex<double> deriv_multiplier(const TorusGrid& grid, std::size_t idx, int axis) {
    const int m = grid.wavevector(idx, axis);
    if (m == grid.modes_per_axis() / 2) return {0.0, 0.0};
    return {0.0, 2.0 * std::numbers::pi * static_cast<double>(m)};
}

}  // namespace detail

inline Field gradient(const Field& f) {
    if (f.representation() != Representation::spectral)
        throw std::invalid_argument("gradient: field must be spectral");
    if (f.arity() != 1) throw std::invalid_argument("gradient: expects a scalar field");
    const auto& grid = *f.grid();
    Field out = Field::zeros(f.grid(), Representation::spectral, grid.dimension());
    for (int ax = 0; ax < grid.dimension(); ++ax) {
        auto dst = out.spectral(ax);
        auto src = f.spectral(0);
        for (std::size_t i = 0; i < grid.num_points(); ++i)
            dst[i] = detail::deriv_multiplier(grid, i, ax) * src[i];
    }
    return out;
}

inline Field divergence(const Field& f) {
    if (f.representation() != Representation::spectral)
        throw std::invalid_argument("divergence: field must be spectral");
    const auto& grid = *f.grid();
    if (f.arity() != grid.dimension())
        throw std::invalid_argument("divergence: expects a vector field of arity d");
    Field out = Field::zeros(f.grid(), Representation::spectral, 1);
    auto dst = out.spectral(0);
    for (int ax = 0; ax < grid.dimension(); ++ax) {
        auto src = f.spectral(ax);
        for (std::size_t i = 0; i < grid.num_points(); ++i)
            dst[i] += detail::deriv_multiplier(grid, i, ax) * src[i];
    }
    return out;
}

inline double spatial_mean(const Field& f) {
    if (f.arity() != 1) throw std::invalid_argument("spatial_mean: scalar fields only");
    if (f.representation() == Representation::spectral) return f.spectral(0)[0].real();
    double s = 0.0;
    for (double v : f.physical(0)) s += v;
    return s / static_cast<double>(f.grid()->num_points());
}

// L^2(T^d) norm with unit volume: equals the l2 norm of the coefficients.
inline double l2_norm(const Field& f) {
    double s = 0.0;
    if (f.representation() == Representation::spectral) {
        for (const auto& c : f.spectral()) s += std::norm(c);
    } else {
        for (double v : f.physical()) s += v * v;
        s /= static_cast<double>(f.grid()->num_points());
    }
    return std::sqrt(s);
}

}  // namespace she
