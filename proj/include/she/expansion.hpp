// Recursive computation of the small-noise expansion coefficients
// ubar^0..ubar^n coupled to one noise path, pathwise remainder assembly, and
// the sigma diagnostic of the remainder's own linear equation.
//
// Coefficient equations (k >= 1), advanced by the same exponential-Euler
// kernel and the same increments as the solution trajectory:
//   dubar^k = Lap ubar^k dt + c_k dW,            c_k = sum_{l<k} G^{(l)}(ubar^0) J(k,l) / l!
// (conservative case: the noise term is div(c_k dW)). ubar^0 is propagated
// exactly; it enters only through pointwise evaluation of G^{(l)}.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "she/partitions.hpp"
#include "she/solver.hpp"

namespace she {

struct ExpansionStack {
    std::shared_ptr<const TorusGrid> grid;
    int order = 0;
    bool conservative = false;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::vector<Field> ubar0;               // physical, per step
    std::vector<std::vector<Field>> ubar;   // ubar[k-1][step], physical, k = 1..order
};

struct Remainder {
    int order = 0;
    double epsilon = 0.0;
    double dt = 0.0;
    std::vector<Field> w;  // physical, per step
};

// Exact spectral heat flow of u0 at the requested times.
inline std::vector<Field> solve_heat_coefficient(const Field& u0, std::span<const double> times) {
    const Field u0s = transform(u0, Representation::spectral);
    std::vector<Field> out;
    out.reserve(times.size());
    for (double t : times)
        out.push_back(transform(heat_propagate(u0s, t), Representation::physical));
    return out;
}

// Advances the solution u and the coefficients ubar^1..ubar^n as one coupled
// system sharing each step's increments. The harness drives replicas through
// this without storing snapshots; simulate()/solve_coefficients() wrap it.
class CoupledDriver {
public:
    CoupledDriver(const DiffusionCoefficient& g, const Field& u0, const NoisePath& path,
                  const SolverConfig& cfg, int order, bool with_solution = true)
        : grid_(path.grid()), path_(path), cfg_(cfg), order_(order), with_solution_(with_solution) {
        const auto& grid = *grid_;
        validate_config(cfg, grid, g);
        if (path.steps() < cfg.steps) throw std::invalid_argument("CoupledDriver: noise path too short");
        const int expected_arity = cfg.conservative ? grid.dimension() : 1;
        if (path.arity() != expected_arity)
            throw std::invalid_argument("CoupledDriver: noise path arity mismatch");
        if (order < 0 || (order >= 1 && order - 1 > g.max_order()))
            throw std::invalid_argument("CoupledDriver: expansion order needs derivatives beyond max_order");

        Field u0p = transform(u0, Representation::physical);
        sup0_ = inf0_ = u0p.physical(0)[0];
        for (double v : u0p.physical(0)) {
            sup0_ = std::max(sup0_, v);
            inf0_ = std::min(inf0_, v);
        }
        monitored_ = g.smoothness() == SmoothClass::window_smooth;
        geff_ = detail::effective_coefficient(g, cfg, sup0_, inf0_);
        if (monitored_) {
            // ubar^0 stays in [inf u0, sup u0], so derivatives through the
            // extension coincide with those of G on the window.
            const double gamma = cfg.stop_gamma.value();
            if (inf0_ - gamma <= g.domain_lower() || sup0_ + gamma >= g.domain_upper())
                throw std::invalid_argument("CoupledDriver: gamma window leaves the smooth domain of G");
        }

        mult_ = build_multiplier(grid_, cfg.delta, cfg.mollifier_order);
        dw_.resize(grid, path.arity());
        scratch_.resize(grid, path.arity());

        const std::size_t pts = grid.num_points();
        ubar0_spec_.assign(pts, {0.0, 0.0});
        ubar0_phys_.resize(pts);
        {
            ubar0_const_ = true;
            const double first = u0p.physical(0)[0];
            for (double v : u0p.physical(0))
                if (v != first) ubar0_const_ = false;
            if (ubar0_const_) {
                ubar0_spec_[0] = {first, 0.0};
                std::fill(ubar0_phys_.begin(), ubar0_phys_.end(), first);
            } else {
                Field u0s = transform(u0, Representation::spectral);
                std::copy(u0s.spectral(0).begin(), u0s.spectral(0).end(), ubar0_spec_.begin());
                std::copy(u0p.physical(0).begin(), u0p.physical(0).end(), ubar0_phys_.begin());
            }
        }
        if (with_solution_) {
            u_spec_.assign(ubar0_spec_.begin(), ubar0_spec_.end());
            u_phys_.assign(ubar0_phys_.begin(), ubar0_phys_.end());
        }
        ubar_spec_.assign(static_cast<std::size_t>(order),
                          std::vector<std::complex<double>>(pts, {0.0, 0.0}));
        ubar_phys_.assign(static_cast<std::size_t>(order), std::vector<double>(pts, 0.0));

        lam_.resize(static_cast<std::size_t>(order) + 1);
        for (int k = 1; k <= order; ++k) {
            lam_[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(k));
            for (int l = 0; l < k; ++l)
                lam_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = lambda(k, l);
        }
        inv_fact_.resize(static_cast<std::size_t>(std::max(order, 1)));
        double f = 1.0;
        for (int l = 0; l < std::max(order, 1); ++l) {
            if (l > 0) f *= l;
            inv_fact_[static_cast<std::size_t>(l)] = 1.0 / f;
        }
        gder_.assign(static_cast<std::size_t>(std::max(order, 1)), std::vector<double>(pts, 0.0));
        drift_.assign(static_cast<std::size_t>(order), std::vector<double>(pts, 0.0));
        coeff_.resize(pts);
        eps_half_pow_.resize(static_cast<std::size_t>(order) + 2);
        const double root_eps = std::sqrt(cfg.epsilon);
        eps_half_pow_[0] = 1.0;
        for (std::size_t i = 1; i < eps_half_pow_.size(); ++i)
            eps_half_pow_[i] = eps_half_pow_[i - 1] * root_eps;
    }

    const std::shared_ptr<const TorusGrid>& grid() const { return grid_; }
    const SolverConfig& config() const { return cfg_; }
    const DiffusionCoefficient& effective_coefficient() const { return geff_; }
    int order() const { return order_; }
    int step() const { return step_; }
    double time() const { return step_ * cfg_.dt; }
    const std::optional<int>& stopping_index() const { return stop_index_; }

    std::span<const double> u_phys() const { return u_phys_; }
    std::span<const double> ubar0_phys() const { return ubar0_phys_; }
    std::span<const double> ubar_phys(int k) const { return ubar_phys_[static_cast<std::size_t>(k - 1)]; }
    std::span<const std::complex<double>> u_spec() const { return u_spec_; }

    // u - sum_{i=0}^n eps^{i/2} ubar^i at lattice site p (theorem left side).
    double raw_remainder(std::size_t p, int n) const {
        double acc = u_phys_[p] - ubar0_phys_[p];
        for (int i = 1; i <= n; ++i)
            acc -= eps_half_pow_[static_cast<std::size_t>(i)] * ubar_phys_[static_cast<std::size_t>(i - 1)][p];
        return acc;
    }

    void advance() {
        const auto& grid = *grid_;
        const std::size_t pts = grid.num_points();
        if (step_ >= cfg_.steps) throw std::out_of_range("CoupledDriver: past final step");
        detail::synth_increment(grid, path_, mult_, step_, dw_);

        if (order_ >= 1) {
            if (ubar0_const_) {
                std::vector<double> buf(static_cast<std::size_t>(order_));
                geff_.derivatives(ubar0_phys_[0], order_ - 1, buf.data());
                for (int l = 0; l < order_; ++l)
                    std::fill(gder_[static_cast<std::size_t>(l)].begin(),
                              gder_[static_cast<std::size_t>(l)].end(), buf[static_cast<std::size_t>(l)]);
            } else {
                std::vector<double> buf(static_cast<std::size_t>(order_));
                for (std::size_t p = 0; p < pts; ++p) {
                    geff_.derivatives(ubar0_phys_[p], order_ - 1, buf.data());
                    for (int l = 0; l < order_; ++l) gder_[static_cast<std::size_t>(l)][p] = buf[static_cast<std::size_t>(l)];
                }
            }
        }

        // coefficient drifts at the left point, lowest order first
        for (auto& d : drift_) std::fill(d.begin(), d.end(), 0.0);
        for (int k = 1; k <= order_; ++k) {
            auto& ck = drift_[static_cast<std::size_t>(k - 1)];
            for (int l = 0; l < k; ++l) {
                const auto& sols = lam_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
                if (sols.empty()) continue;
                const auto& gl = gder_[static_cast<std::size_t>(l)];
                const double invf = inv_fact_[static_cast<std::size_t>(l)];
                for (std::size_t p = 0; p < pts; ++p) {
                    double jval = 0.0;
                    for (const auto& s : sols) {
                        double prod = static_cast<double>(s.weight);
                        for (std::size_t i = 0; i < s.q.size(); ++i) {
                            const int qi = s.q[i];
                            if (qi == 0) continue;
                            const double v = ubar_phys_[i][p];
                            for (int rep = 0; rep < qi; ++rep) prod *= v;
                        }
                        jval += prod;
                    }
                    ck[p] += invf * gl[p] * jval;
                }
            }
        }

        if (with_solution_ && !frozen_) {
            const double root_eps = eps_half_pow_[1];
            for (std::size_t p = 0; p < pts; ++p) coeff_[p] = root_eps * geff_(u_phys_[p]);
            detail::exp_euler_step(grid, cfg_.dt, coeff_, dw_, cfg_.conservative, cfg_.dealias,
                                   u_spec_, u_phys_, scratch_);
            detail::check_finite(u_phys_, step_ + 1);
            if (monitored_ && stopping_monitor(std::span<const double>(u_phys_), sup0_, inf0_,
                                               cfg_.stop_gamma.value())) {
                stop_index_ = step_ + 1;
                frozen_ = true;
            }
        }
        for (int k = 1; k <= order_; ++k) {
            detail::exp_euler_step(grid, cfg_.dt, drift_[static_cast<std::size_t>(k - 1)], dw_,
                                   cfg_.conservative, cfg_.dealias, ubar_spec_[static_cast<std::size_t>(k - 1)],
                                   ubar_phys_[static_cast<std::size_t>(k - 1)], scratch_);
            detail::check_finite(ubar_phys_[static_cast<std::size_t>(k - 1)], step_ + 1);
        }
        for (std::size_t i = 0; i < pts; ++i)
            ubar0_spec_[i] *= std::exp(-grid.eigenvalue(i) * cfg_.dt);
        grid.backward(ubar0_spec_.data(), ubar0_phys_.data());
        ++step_;
    }

private:
    std::shared_ptr<const TorusGrid> grid_;
    NoisePath path_;
    SolverConfig cfg_;
    int order_;
    bool with_solution_;
    bool monitored_ = false;
    bool frozen_ = false;
    bool ubar0_const_ = false;
    double sup0_ = 0.0, inf0_ = 0.0;
    DiffusionCoefficient geff_;
    SpectralMultiplier mult_;
    detail::StepWorkspace dw_, scratch_;
    int step_ = 0;
    std::optional<int> stop_index_;

    std::vector<std::complex<double>> u_spec_, ubar0_spec_;
    std::vector<double> u_phys_, ubar0_phys_;
    std::vector<std::vector<std::complex<double>>> ubar_spec_;
    std::vector<std::vector<double>> ubar_phys_;
    std::vector<std::vector<double>> gder_;
    std::vector<std::vector<double>> drift_;
    std::vector<double> coeff_;
    std::vector<double> inv_fact_;
    std::vector<double> eps_half_pow_;
    std::vector<std::vector<std::vector<PartitionSolution>>> lam_;
};

// ubar^1..ubar^n driven by the given path, snapshots at every step.
inline ExpansionStack solve_coefficients(int n, const DiffusionCoefficient& g, const Field& u0,
                                         const NoisePath& path, const SolverConfig& cfg) {
    CoupledDriver drv(g, u0, path, cfg, n, /*with_solution=*/false);
    const auto grid = path.grid();
    ExpansionStack stack;
    stack.grid = grid;
    stack.order = n;
    stack.conservative = cfg.conservative;
    stack.dt = cfg.dt;
    stack.seed = path.seed();
    stack.ubar0.reserve(static_cast<std::size_t>(cfg.steps) + 1);
    stack.ubar.assign(static_cast<std::size_t>(n), {});
    auto snapshot = [&] {
        stack.ubar0.push_back(Field::from_physical(
            grid, std::vector<double>(drv.ubar0_phys().begin(), drv.ubar0_phys().end())));
        for (int k = 1; k <= n; ++k)
            stack.ubar[static_cast<std::size_t>(k - 1)].push_back(Field::from_physical(
                grid, std::vector<double>(drv.ubar_phys(k).begin(), drv.ubar_phys(k).end())));
    };
    snapshot();
    for (int s = 0; s < cfg.steps; ++s) {
        drv.advance();
        snapshot();
    }
    return stack;
}

// w_n = eps^{-n/2} (u - sum_{i=0}^n eps^{i/2} ubar^i), assembled pointwise at
// every stored time. The trajectory and stack must share one seed.
inline Remainder assemble_remainder(const Trajectory& traj, const ExpansionStack& stack, double eps,
                                    int n) {
    if (traj.seed != stack.seed)
        throw std::invalid_argument("assemble_remainder: decoupled paths (seed mismatch)");
    if (n > stack.order) throw std::invalid_argument("assemble_remainder: stack order too small");
    if (traj.states.size() != stack.ubar0.size() || traj.dt != stack.dt)
        throw std::invalid_argument("assemble_remainder: time grids differ");
    const std::size_t pts = traj.grid->num_points();
    Remainder rem;
    rem.order = n;
    rem.epsilon = eps;
    rem.dt = traj.dt;
    std::vector<double> eps_half_pow(static_cast<std::size_t>(n) + 1, 1.0);
    for (std::size_t i = 1; i <= static_cast<std::size_t>(n); ++i)
        eps_half_pow[i] = eps_half_pow[i - 1] * std::sqrt(eps);
    const double scale = (n == 0) ? 1.0 : 1.0 / eps_half_pow[static_cast<std::size_t>(n)];
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
        std::vector<double> w(pts);
        auto u = traj.states[j].physical(0);
        auto u0 = stack.ubar0[j].physical(0);
        for (std::size_t p = 0; p < pts; ++p) {
            double acc = u[p] - u0[p];
            for (int i = 1; i <= n; ++i)
                acc -= eps_half_pow[static_cast<std::size_t>(i)] *
                       stack.ubar[static_cast<std::size_t>(i - 1)][j].physical(0)[p];
            w[p] = scale * acc;
        }
        rem.w.push_back(Field::from_physical(traj.grid, std::move(w)));
    }
    return rem;
}

// sigma_n(t) = eps^{-(n-1)/2} (G(u) - sum_{m=1}^n eps^{(m-1)/2}
//              sum_{l<m} G^{(l)}(ubar^0) J(m,l) / l!), per stored time.
// One exponential-Euler step of dw_n = Lap w_n dt + sigma_n dW (conservative:
// div(sigma_n dW)) reproduces the stored remainder pathwise.
inline std::vector<Field> sigma_diagnostic(const Trajectory& traj, const ExpansionStack& stack,
                                           const DiffusionCoefficient& g, double eps, int n) {
    if (traj.seed != stack.seed)
        throw std::invalid_argument("sigma_diagnostic: decoupled paths (seed mismatch)");
    if (n < 0 || n - 1 > stack.order)
        throw std::invalid_argument("sigma_diagnostic: order out of range");
    const auto grid = traj.grid;
    const std::size_t pts = grid->num_points();
    const double root_eps = std::sqrt(eps);
    std::vector<Field> out;
    out.reserve(traj.states.size());
    std::vector<double> derivs(static_cast<std::size_t>(std::max(n, 1)));
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
        std::vector<Field> slice;
        for (int i = 1; i <= stack.order; ++i)
            slice.push_back(stack.ubar[static_cast<std::size_t>(i - 1)][j]);
        // J(m,l) for all m <= n at this time
        std::vector<std::vector<Field>> jml(static_cast<std::size_t>(n) + 1);
        for (int m = 1; m <= n; ++m)
            for (int l = 0; l < m; ++l)
                jml[static_cast<std::size_t>(m)].push_back(evaluate_j(m, l, slice, grid));
        std::vector<double> sig(pts);
        auto u = traj.states[j].physical(0);
        auto u0 = stack.ubar0[j].physical(0);
        for (std::size_t p = 0; p < pts; ++p) {
            double acc = g(u[p]);
            if (n >= 1) g.derivatives(u0[p], n - 1, derivs.data());
            double eps_pow = 1.0;
            double fact = 1.0;
            for (int m = 1; m <= n; ++m) {
                double inner = 0.0;
                fact = 1.0;
                for (int l = 0; l < m; ++l) {
                    if (l > 0) fact *= l;
                    inner += derivs[static_cast<std::size_t>(l)] / fact *
                             jml[static_cast<std::size_t>(m)][static_cast<std::size_t>(l)].physical(0)[p];
                }
                acc -= eps_pow * inner;
                eps_pow *= root_eps;
            }
            sig[p] = std::pow(root_eps, -(n - 1)) * acc;
        }
        out.push_back(Field::from_physical(grid, std::move(sig)));
    }
    return out;
}

}  // namespace she
