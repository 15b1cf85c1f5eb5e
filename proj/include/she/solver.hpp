// Time-stepping mild solvers for the non-conservative and conservative
// stochastic heat equations, with stopping-time monitoring and post-stopping
// freezing for window-smooth coefficients.
//
// Scheme: exponential (semigroup) Euler with left-point noise evaluation,
//   u+ = S(dt) [ u + eps^{1/2} G(u) dW ]          (non-conservative)
//   u+ = S(dt) [ u + eps^{1/2} div(G(u) dW) ]     (conservative)
// mirroring the mild form one step at a time. The expansion engine advances
// its coefficient equations with the same kernel and the same increments.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "she/coefficients.hpp"
#include "she/field.hpp"
#include "she/noise.hpp"
#include "she/torus_grid.hpp"

namespace she {

struct SolverConfig {
    double epsilon = 0.0;
    double delta = 0.0;
    int mollifier_order = 1;
    double dt = 1e-3;
    int steps = 1;
    bool conservative = false;
    std::optional<double> stop_gamma;     // stopping margin, window-smooth G only
    std::optional<double> stop_margin;    // extension margin gamma'; default gamma/2
    std::uint64_t seed = 0;
    bool dealias = false;
};

class BlowupError : public std::runtime_error {
public:
    BlowupError(int step, double value)
        : std::runtime_error("solver blow-up at step " + std::to_string(step) +
                             " (max |u| = " + std::to_string(value) + ")"),
          step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

struct Trajectory {
    std::shared_ptr<const TorusGrid> grid;
    double dt = 0.0;
    std::uint64_t seed = 0;
    bool conservative = false;
    std::vector<Field> states;            // physical, states[j] = u(j dt)
    std::optional<int> stopping_index;    // first index outside the gamma-enlarged range
};

inline bool stopping_monitor(std::span<const double> u, double sup_u0, double inf_u0, double gamma) {
    for (double v : u)
        if (v > sup_u0 + gamma || v < inf_u0 - gamma) return true;
    return false;
}

inline bool stopping_monitor(const Field& u, double sup_u0, double inf_u0, double gamma) {
    if (u.representation() != Representation::physical)
        throw std::invalid_argument("stopping_monitor: physical field expected");
    return stopping_monitor(u.physical(0), sup_u0, inf_u0, gamma);
}

// Rejects invalid configurations, returns non-fatal warnings (notably the
// conservative smallness threshold eps_0 = 2 delta^d / ||G'||_inf^2).
inline std::vector<std::string> validate_config(const SolverConfig& cfg, const TorusGrid& grid,
                                                const DiffusionCoefficient& g) {
    if (cfg.dt <= 0.0) throw std::invalid_argument("SolverConfig: dt must be positive");
    if (cfg.steps < 1) throw std::invalid_argument("SolverConfig: steps must be positive");
    if (cfg.epsilon < 0.0) throw std::invalid_argument("SolverConfig: epsilon must be >= 0");
    if (cfg.delta == 0.0 && (cfg.conservative || grid.dimension() >= 2))
        throw std::invalid_argument(
            "SolverConfig: delta = 0 (white noise) is supercritical except for the "
            "non-conservative case in d = 1");
    if (g.smoothness() == SmoothClass::window_smooth && !cfg.stop_gamma)
        throw std::invalid_argument("SolverConfig: window-smooth G requires a stopping margin gamma");
    std::vector<std::string> warnings;
    if (cfg.conservative && cfg.epsilon > 0.0) {
        const double gbound = g.derivative_bound(1);
        if (gbound > 0.0) {
            const double eps0 = 2.0 * std::pow(cfg.delta, grid.dimension()) / (gbound * gbound);
            if (cfg.epsilon >= eps0)
                warnings.push_back("epsilon = " + std::to_string(cfg.epsilon) +
                                   " is not below the smallness threshold eps0 = " +
                                   std::to_string(eps0) + " (sufficient condition only)");
        }
    }
    return warnings;
}

namespace detail {

struct StepWorkspace {
    std::vector<std::complex<double>> cbuf;
    std::vector<std::complex<double>> acc;
    std::vector<double> prod;
    std::vector<std::vector<double>> dw_phys;  // one block per noise component

    void resize(const TorusGrid& grid, int arity) {
        cbuf.resize(grid.num_points());
        acc.resize(grid.num_points());
        prod.resize(grid.num_points());
        dw_phys.assign(static_cast<std::size_t>(arity),
                       std::vector<double>(grid.num_points()));
    }
};

// Synthesize the mollified physical-space increments for one step.
inline void synth_increment(const TorusGrid& grid, const NoisePath& path,
                            const SpectralMultiplier& mult, int step, StepWorkspace& ws) {
    for (int c = 0; c < path.arity(); ++c) {
        path.raw_increment(step, c, ws.cbuf.data());
        for (std::size_t i = 0; i < grid.num_points(); ++i) ws.cbuf[i] *= mult.value[i];
        grid.backward(ws.cbuf.data(), ws.dw_phys[static_cast<std::size_t>(c)].data());
    }
}

inline void dealias_truncate(const TorusGrid& grid, std::span<std::complex<double>> spec) {
    const int cutoff = grid.modes_per_axis() / 3;
    for (std::size_t i = 0; i < grid.num_points(); ++i)
        for (int ax = 0; ax < grid.dimension(); ++ax)
            if (std::abs(grid.wavevector(i, ax)) > cutoff) {
                spec[i] = {0.0, 0.0};
                break;
            }
}

// u_spec <- exp(-alpha dt) (u_spec + T(coeff dW)), T = identity or divergence;
// refreshes u_phys. coeff carries any eps^{1/2} factor.
inline void exp_euler_step(const TorusGrid& grid, double dt, std::span<const double> coeff_phys,
                           const StepWorkspace& dw, bool conservative, bool dealias,
                           std::span<std::complex<double>> u_spec, std::span<double> u_phys,
                           StepWorkspace& ws) {
    const std::size_t pts = grid.num_points();
    if (!conservative) {
        for (std::size_t i = 0; i < pts; ++i) ws.prod[i] = coeff_phys[i] * dw.dw_phys[0][i];
        grid.forward(ws.prod.data(), ws.acc.data());
    } else {
        std::fill(ws.acc.begin(), ws.acc.end(), std::complex<double>{0.0, 0.0});
        for (int ax = 0; ax < grid.dimension(); ++ax) {
            for (std::size_t i = 0; i < pts; ++i)
                ws.prod[i] = coeff_phys[i] * dw.dw_phys[static_cast<std::size_t>(ax)][i];
            grid.forward(ws.prod.data(), ws.cbuf.data());
            for (std::size_t i = 0; i < pts; ++i)
                ws.acc[i] += deriv_multiplier(grid, i, ax) * ws.cbuf[i];
        }
    }
    if (dealias) dealias_truncate(grid, ws.acc);
    for (std::size_t i = 0; i < pts; ++i)
        u_spec[i] = std::exp(-grid.eigenvalue(i) * dt) * (u_spec[i] + ws.acc[i]);
    grid.backward(u_spec.data(), u_phys.data());
}

inline void check_finite(std::span<const double> u, int step) {
    double amax = 0.0;
    for (double v : u) amax = std::max(amax, std::abs(v));
    if (!std::isfinite(amax) || amax > 1e12) throw BlowupError(step, amax);
}

// Effective coefficient for the stepping: window-smooth G is replaced by its
// smooth extension on the gamma-enlarged range of u0.
inline DiffusionCoefficient effective_coefficient(const DiffusionCoefficient& g,
                                                  const SolverConfig& cfg,
                                                  double sup_u0, double inf_u0) {
    if (g.smoothness() != SmoothClass::window_smooth) return g;
    const double gamma = cfg.stop_gamma.value();
    const double margin = cfg.stop_margin.value_or(0.5 * gamma);
    return smooth_extension(g, inf_u0 - gamma, sup_u0 + gamma, margin);
}

}  // namespace detail

// One exponential-Euler update of the non-conservative equation. dw is a
// mollified scalar spectral increment; u is spectral.
inline Field step_nonconservative(const Field& u, const Field& dw, const DiffusionCoefficient& g,
                                  double eps, double dt) {
    if (u.representation() != Representation::spectral ||
        dw.representation() != Representation::spectral)
        throw std::invalid_argument("step_nonconservative: spectral fields expected");
    if (dw.arity() != 1) throw std::invalid_argument("step_nonconservative: scalar noise expected");
    const auto& grid = *u.grid();
    detail::StepWorkspace ws;
    ws.resize(grid, 1);
    grid.backward(dw.spectral(0).data(), ws.dw_phys[0].data());
    detail::StepWorkspace scratch;
    scratch.resize(grid, 1);
    std::vector<double> u_phys(grid.num_points());
    grid.backward(u.spectral(0).data(), u_phys.data());
    std::vector<double> coeff(grid.num_points());
    const double root_eps = std::sqrt(eps);
    for (std::size_t i = 0; i < grid.num_points(); ++i) coeff[i] = root_eps * g(u_phys[i]);
    Field out = u;
    detail::exp_euler_step(grid, dt, coeff, ws, /*conservative=*/false, /*dealias=*/false,
                           out.spectral(0), u_phys, scratch);
    return out;
}

// Conservative analogue; dw is a mollified vector spectral increment.
inline Field step_conservative(const Field& u, const Field& dw, const DiffusionCoefficient& g,
                               double eps, double dt) {
    if (u.representation() != Representation::spectral ||
        dw.representation() != Representation::spectral)
        throw std::invalid_argument("step_conservative: spectral fields expected");
    const auto& grid = *u.grid();
    if (dw.arity() != grid.dimension())
        throw std::invalid_argument("step_conservative: vector noise of arity d expected");
    detail::StepWorkspace ws;
    ws.resize(grid, grid.dimension());
    for (int c = 0; c < grid.dimension(); ++c)
        grid.backward(dw.spectral(c).data(), ws.dw_phys[static_cast<std::size_t>(c)].data());
    detail::StepWorkspace scratch;
    scratch.resize(grid, grid.dimension());
    std::vector<double> u_phys(grid.num_points());
    grid.backward(u.spectral(0).data(), u_phys.data());
    std::vector<double> coeff(grid.num_points());
    const double root_eps = std::sqrt(eps);
    for (std::size_t i = 0; i < grid.num_points(); ++i) coeff[i] = root_eps * g(u_phys[i]);
    Field out = u;
    detail::exp_euler_step(grid, dt, coeff, ws, /*conservative=*/true, /*dealias=*/false,
                           out.spectral(0), u_phys, scratch);
    return out;
}

// Full trajectory with the declared stepping rule. For window-smooth G the
// stopping monitor runs every step and the state is frozen afterwards.
inline Trajectory simulate(const SolverConfig& cfg, const DiffusionCoefficient& g, const Field& u0,
                           const NoisePath& path) {
    const auto grid_ptr = path.grid();
    const auto& grid = *grid_ptr;
    validate_config(cfg, grid, g);
    if (path.steps() < cfg.steps) throw std::invalid_argument("simulate: noise path too short");
    const int expected_arity = cfg.conservative ? grid.dimension() : 1;
    if (path.arity() != expected_arity)
        throw std::invalid_argument("simulate: noise path arity does not match the equation");

    Field u_phys0 = transform(u0, Representation::physical);
    double sup0 = u_phys0.physical(0)[0], inf0 = sup0;
    for (double v : u_phys0.physical(0)) {
        sup0 = std::max(sup0, v);
        inf0 = std::min(inf0, v);
    }
    const bool monitored = g.smoothness() == SmoothClass::window_smooth;
    const DiffusionCoefficient geff = detail::effective_coefficient(g, cfg, sup0, inf0);

    const SpectralMultiplier mult = build_multiplier(grid_ptr, cfg.delta, cfg.mollifier_order);
    detail::StepWorkspace dw, scratch;
    dw.resize(grid, path.arity());
    scratch.resize(grid, path.arity());

    Trajectory traj;
    traj.grid = grid_ptr;
    traj.dt = cfg.dt;
    traj.seed = path.seed();
    traj.conservative = cfg.conservative;
    traj.states.reserve(static_cast<std::size_t>(cfg.steps) + 1);
    traj.states.push_back(u_phys0);

    Field u_spec = transform(u0, Representation::spectral);
    std::vector<double> u_phys(u_phys0.physical(0).begin(), u_phys0.physical(0).end());
    std::vector<double> coeff(grid.num_points());
    const double root_eps = std::sqrt(cfg.epsilon);
    bool frozen = false;

    for (int step = 0; step < cfg.steps; ++step) {
        if (!frozen) {
            detail::synth_increment(grid, path, mult, step, dw);
            for (std::size_t i = 0; i < grid.num_points(); ++i)
                coeff[i] = root_eps * geff(u_phys[i]);
            detail::exp_euler_step(grid, cfg.dt, coeff, dw, cfg.conservative, cfg.dealias,
                                   u_spec.spectral(0), u_phys, scratch);
            detail::check_finite(u_phys, step + 1);
            if (monitored && stopping_monitor(u_phys, sup0, inf0, cfg.stop_gamma.value())) {
                traj.stopping_index = step + 1;
                frozen = true;
            }
        }
        traj.states.push_back(Field::from_physical(grid_ptr, u_phys));
    }
    return traj;
}

}  // namespace she
