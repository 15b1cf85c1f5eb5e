// Monte Carlo experiment driver: replica fan-out, moment estimators over a
// stored (t,x) lattice or in space-time L^p, scaling-regime schedules with
// symbolically derived rate predictions, divergence sweeps, survival curves,
// and the application presets.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "she/expansion.hpp"
#include "she/stats.hpp"

namespace she {

// ---------------------------------------------------------------------------
// scenario description

struct InitialSpec {
    std::string kind = "constant";  // "constant" | "cosine"
    double value = 0.5;             // constant level / mean
    double amplitude = 0.0;         // cosine amplitude
    std::array<int, 3> mode{1, 0, 0};
};

inline Field build_initial(const std::shared_ptr<const TorusGrid>& grid, const InitialSpec& spec) {
    if (spec.kind == "constant") return Field::constant(grid, spec.value);
    if (spec.kind == "cosine") {
        Field f = Field::zeros(grid, Representation::physical);
        auto v = f.physical(0);
        for (std::size_t p = 0; p < grid->num_points(); ++p) {
            double prod = 1.0;
            for (int ax = 0; ax < grid->dimension(); ++ax)
                if (spec.mode[static_cast<std::size_t>(ax)] != 0)
                    prod *= std::cos(2.0 * std::numbers::pi *
                                     spec.mode[static_cast<std::size_t>(ax)] *
                                     grid->coordinate(p, ax));
            v[p] = spec.value + spec.amplitude * prod;
        }
        return f;
    }
    throw std::invalid_argument("build_initial: unknown kind '" + spec.kind + "'");
}

enum class EstimatorMode { pointwise_sup, space_time_lp };
enum class EstimatorTarget { remainder, coefficient };

struct EstimatorSpec {
    EstimatorMode mode = EstimatorMode::pointwise_sup;
    EstimatorTarget target = EstimatorTarget::remainder;
    double p = 2.0;
    int stored_times = 8;
    bool normalized = false;  // remainder only: multiply by eps^{-n/2}
};

struct Scenario {
    int dimension = 1;
    int modes = 128;
    double dt = 1e-3;
    int steps = 250;
    double delta = 0.0;
    int mollifier_order = 1;
    bool dealias = false;
    bool conservative = false;
    double epsilon = 0.0;
    int order = 0;  // expansion order n
    std::string coefficient = "constant(1)";
    std::optional<double> stop_gamma;
    std::optional<double> stop_margin;
    InitialSpec initial;
    EstimatorSpec estimator;
    int replicas = 2000;
    std::uint64_t seed = 20260810;
    int workers = 0;  // 0 = auto
};

inline SolverConfig solver_config(const Scenario& sc) {
    SolverConfig cfg;
    cfg.epsilon = sc.epsilon;
    cfg.delta = sc.delta;
    cfg.mollifier_order = sc.mollifier_order;
    cfg.dt = sc.dt;
    cfg.steps = sc.steps;
    cfg.conservative = sc.conservative;
    cfg.stop_gamma = sc.stop_gamma;
    cfg.stop_margin = sc.stop_margin;
    cfg.dealias = sc.dealias;
    cfg.seed = sc.seed;
    return cfg;
}

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SHE_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// ---------------------------------------------------------------------------
// scaling regimes

struct RegimeSchedule {
    enum class Kind { fixed, power } kind = Kind::fixed;
    double delta = 0.1;      // fixed-delta value
    double coeff = 1.0;      // power law delta(eps) = coeff * eps^exponent
    double exponent = 0.25;

    double delta_for(double eps) const {
        return kind == Kind::fixed ? delta : coeff * std::pow(eps, exponent);
    }
};

struct ExponentPrediction {
    double exponent = 0.0;       // slope of log(bound) vs log(eps)
    bool log_correction = false; // d = 2 non-conservative power schedules
};

// Slope of the theorem bound eps^{np/2} (eps K_i(delta(eps), d)^{n+1})^{p/2}
// in log(eps), derived from the K_i(delta, d) table and the schedule.
inline ExponentPrediction predicted_exponent(const RegimeSchedule& sched, int icase, int d, int n,
                                             double p) {
    if (icase != 1 && icase != 2) throw std::invalid_argument("predicted_exponent: case must be 1 or 2");
    ExponentPrediction out;
    if (sched.kind == RegimeSchedule::Kind::fixed) {
        out.exponent = 0.5 * p * (n + 1);
        return out;
    }
    const double a = sched.exponent;
    double kappa = 0.0;  // K_i ~ delta^{-kappa}
    if (icase == 1) {
        if (d == 1) kappa = 0.0;
        else if (d == 2) { kappa = 0.0; out.log_correction = true; }
        else kappa = static_cast<double>(d) - 2.0;
    } else {
        kappa = static_cast<double>(d);
    }
    out.exponent = 0.5 * p * n + 0.5 * p * (1.0 - a * kappa * (n + 1));
    return out;
}

// eps K_i(delta(eps),d)^{n+1} -> 0, plus the irregular-coefficient extras
// eps delta^{-d} (non-conservative) / eps delta^{-d-2} (conservative).
inline bool schedule_admissible(const RegimeSchedule& sched, int icase, int d, int n,
                                bool irregular) {
    if (sched.kind == RegimeSchedule::Kind::fixed) return true;
    const double a = sched.exponent;
    if (a <= 0.0) return false;
    bool ok = true;
    if (icase == 1 && d >= 3) ok = ok && a * (d - 2) * (n + 1) < 1.0;
    if (icase == 2) ok = ok && a * d * (n + 1) < 1.0;
    if (irregular) {
        if (icase == 1) ok = ok && a * d < 1.0;
        else ok = ok && a * (d + 2) < 1.0;
    }
    return ok;
}

// ---------------------------------------------------------------------------
// replica execution and reduction

struct MomentEstimate {
    EstimatorMode mode = EstimatorMode::pointwise_sup;
    double p = 2.0;
    std::size_t samples = 0;
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t blowups = 0;
    std::size_t stopped = 0;
    // pointwise mode: per (stored time, point) moment estimates
    std::vector<int> stored_steps;
    std::vector<double> point_mean;
    std::vector<double> point_stderr;
};

namespace detail {

inline double pow_p(double v, double p) {
    const double a = std::abs(v);
    if (p == 2.0) return a * a;
    if (p == 1.0) return a;
    return std::pow(a, p);
}

struct ReplicaAccumulator {
    std::vector<KahanSum> sum;    // pointwise
    std::vector<KahanSum> sumsq;  // pointwise
    KahanSum lp_sum, lp_sumsq;
    std::size_t count = 0;
    std::size_t blowups = 0;
    std::size_t stopped = 0;

    void merge(const ReplicaAccumulator& o) {
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i].merge(o.sum[i]);
            sumsq[i].merge(o.sumsq[i]);
        }
        lp_sum.merge(o.lp_sum);
        lp_sumsq.merge(o.lp_sumsq);
        count += o.count;
        blowups += o.blowups;
        stopped += o.stopped;
    }
};

inline std::vector<int> stored_step_lattice(int steps, int wanted) {
    std::vector<int> out;
    const int S = std::max(1, std::min(wanted, steps));
    for (int j = 1; j <= S; ++j) {
        const int idx = static_cast<int>(std::llround(static_cast<double>(j) * steps / S));
        if (out.empty() || out.back() != idx) out.push_back(idx);
    }
    return out;
}

// Runs replicas [begin, end) of the scenario and accumulates the estimator.
inline void run_replica_block(const Scenario& sc, const std::shared_ptr<const TorusGrid>& grid,
                              const Field& u0, const DiffusionCoefficient& g,
                              std::uint64_t master_seed, int begin, int end,
                              const std::vector<int>& stored, ReplicaAccumulator& acc) {
    const std::size_t pts = grid->num_points();
    const bool pointwise = sc.estimator.mode == EstimatorMode::pointwise_sup;
    const bool remainder = sc.estimator.target == EstimatorTarget::remainder;
    const int n = sc.order;
    const bool with_solution = remainder;
    const double cell = sc.dt / static_cast<double>(pts);  // dt * h^d
    const double norm_scale =
        (remainder && sc.estimator.normalized && n > 0) ? std::pow(sc.epsilon, -0.5 * n) : 1.0;
    const int arity = sc.conservative ? grid->dimension() : 1;

    for (int r = begin; r < end; ++r) {
        NoisePath path(grid, replica_seed(master_seed, static_cast<std::uint64_t>(r)), sc.dt,
                       sc.steps, arity);
        try {
            CoupledDriver drv(g, u0, path, solver_config(sc), n, with_solution);
            KahanSum lp_local;
            std::size_t next_store = 0;
            for (int s = 1; s <= sc.steps; ++s) {
                drv.advance();
                const bool store_now =
                    pointwise && next_store < stored.size() && stored[next_store] == s;
                if (pointwise && !store_now) continue;
                for (std::size_t ptidx = 0; ptidx < pts; ++ptidx) {
                    const double v = norm_scale * (remainder ? drv.raw_remainder(ptidx, n)
                                                             : drv.ubar_phys(n)[ptidx]);
                    const double vp = pow_p(v, sc.estimator.p);
                    if (pointwise) {
                        const std::size_t slot = next_store * pts + ptidx;
                        acc.sum[slot].add(vp);
                        acc.sumsq[slot].add(vp * vp);
                    } else {
                        lp_local.add(cell * vp);
                    }
                }
                if (store_now) ++next_store;
            }
            if (!pointwise) {
                const double lp = lp_local.value();
                acc.lp_sum.add(lp);
                acc.lp_sumsq.add(lp * lp);
            }
            if (drv.stopping_index()) ++acc.stopped;
            ++acc.count;
        } catch (const BlowupError&) {
            ++acc.blowups;
            ++acc.count;
        }
    }
}

}  // namespace detail

inline MomentEstimate run_moment_estimate(const Scenario& sc, int replicas,
                                          std::uint64_t master_seed) {
    const auto grid = build_grid(sc.dimension, sc.modes);
    const Field u0 = build_initial(grid, sc.initial);
    const DiffusionCoefficient g = coefficient_preset(sc.coefficient);
    const std::size_t pts = grid->num_points();
    const bool pointwise = sc.estimator.mode == EstimatorMode::pointwise_sup;
    const std::vector<int> stored = detail::stored_step_lattice(sc.steps, sc.estimator.stored_times);

    const int workers = std::max(1, std::min(resolve_workers(sc.workers), replicas));
    std::vector<detail::ReplicaAccumulator> accs(static_cast<std::size_t>(workers));
    for (auto& a : accs) {
        if (pointwise) {
            a.sum.resize(stored.size() * pts);
            a.sumsq.resize(stored.size() * pts);
        }
    }
    {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            const int begin = static_cast<int>(static_cast<long long>(replicas) * w / workers);
            const int end = static_cast<int>(static_cast<long long>(replicas) * (w + 1) / workers);
            pool.emplace_back([&, w, begin, end] {
                try {
                    detail::run_replica_block(sc, grid, u0, g, master_seed, begin, end, stored,
                                              accs[static_cast<std::size_t>(w)]);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    for (int w = 1; w < workers; ++w) accs[0].merge(accs[static_cast<std::size_t>(w)]);
    const auto& acc = accs[0];

    MomentEstimate est;
    est.mode = sc.estimator.mode;
    est.p = sc.estimator.p;
    est.samples = acc.count - acc.blowups;
    est.blowups = acc.blowups;
    est.stopped = acc.stopped;
    if (acc.blowups * 100 > acc.count)
        throw std::runtime_error("run_moment_estimate: more than 1% of replicas blew up (" +
                                 std::to_string(acc.blowups) + "/" + std::to_string(acc.count) + ")");
    if (est.samples == 0) throw std::runtime_error("run_moment_estimate: no usable replicas");
    if (pointwise) {
        est.stored_steps = stored;
        est.point_mean.resize(stored.size() * pts);
        est.point_stderr.resize(stored.size() * pts);
        double best = -1.0;
        std::size_t best_slot = 0;
        for (std::size_t i = 0; i < est.point_mean.size(); ++i) {
            const auto ms = mean_stderr(acc.sum[i].value(), acc.sumsq[i].value(), est.samples);
            est.point_mean[i] = ms.mean;
            est.point_stderr[i] = ms.stderr_;
            if (ms.mean > best) {
                best = ms.mean;
                best_slot = i;
            }
        }
        est.value = est.point_mean[best_slot];
        est.stderr_ = est.point_stderr[best_slot];
    } else {
        const auto ms = mean_stderr(acc.lp_sum.value(), acc.lp_sumsq.value(), est.samples);
        est.value = ms.mean;
        est.stderr_ = ms.stderr_;
    }
    return est;
}

// ---------------------------------------------------------------------------
// sweeps

struct SweepRow {
    double epsilon = 0.0;
    double delta = 0.0;
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t samples = 0;
};

struct RateReport {
    std::vector<SweepRow> rows;
    LinearFit fit;                 // log(estimate) vs log(eps), filtered rows
    ExponentPrediction predicted;
    std::size_t used_points = 0;
    int order = 0;
    double p = 2.0;
};

inline RateReport rate_sweep(Scenario base, std::span<const double> epsilons,
                             const RegimeSchedule& sched, int n, double p, int replicas) {
    if (epsilons.size() < 4) throw std::invalid_argument("rate_sweep: need at least 4 sweep points");
    base.order = n;
    base.estimator.target = EstimatorTarget::remainder;
    base.estimator.normalized = false;  // theorem left side
    base.estimator.p = p;
    RateReport report;
    report.order = n;
    report.p = p;
    const DiffusionCoefficient g = coefficient_preset(base.coefficient);
    const bool irregular = g.smoothness() == SmoothClass::window_smooth;
    const int icase = base.conservative ? 2 : 1;
    if (!schedule_admissible(sched, icase, base.dimension, n, irregular))
        throw std::invalid_argument("rate_sweep: schedule violates the theorem's scaling regime");
    report.predicted = predicted_exponent(sched, icase, base.dimension, n, p);
    for (double eps : epsilons) {
        Scenario sc = base;
        sc.epsilon = eps;
        sc.delta = sched.delta_for(eps);
        const MomentEstimate est = run_moment_estimate(sc, replicas, base.seed);
        report.rows.push_back({eps, sc.delta, est.value, est.stderr_, est.samples});
    }
    std::vector<double> lx, ly;
    for (const auto& row : report.rows) {
        if (row.estimate > 0.0 && row.stderr_ / row.estimate < 0.2) {
            lx.push_back(std::log(row.epsilon));
            ly.push_back(std::log(row.estimate));
        }
    }
    if (lx.size() < 4) throw std::runtime_error("rate_sweep: fewer than 4 usable sweep points");
    report.fit = least_squares(lx, ly);
    report.used_points = lx.size();
    return report;
}

struct DivergenceReport {
    std::vector<SweepRow> rows;     // epsilon column reused for K_i(delta,d)
    double ratio_min = 0.0;         // estimate / K_i^{pn/2}
    double ratio_max = 0.0;
    LinearFit affine_fit;           // estimate vs K_i(delta,d)
    int order = 0;
    double p = 2.0;
};

// Moments of the expansion coefficient ubar^n across a delta sweep, compared
// against the reference blow-up rate K_i(delta,d)^{pn/2}.
inline DivergenceReport divergence_sweep(Scenario base, std::span<const double> deltas, int n,
                                         double p, int replicas) {
    if (deltas.empty()) throw std::invalid_argument("divergence_sweep: empty delta list");
    base.order = n;
    base.estimator.target = EstimatorTarget::coefficient;
    base.estimator.p = p;
    const int icase = base.conservative ? 2 : 1;
    DivergenceReport report;
    report.order = n;
    report.p = p;
    for (double delta : deltas) {
        Scenario sc = base;
        sc.delta = delta;
        const MomentEstimate est = run_moment_estimate(sc, replicas, base.seed);
        const double kref = k_reference(icase, base.dimension, delta);
        report.rows.push_back({kref, delta, est.value, est.stderr_, est.samples});
    }
    bool first = true;
    std::vector<double> ks, es;
    for (const auto& row : report.rows) {
        const double ratio = row.estimate / std::pow(row.epsilon, 0.5 * p * n);
        if (first || ratio < report.ratio_min) report.ratio_min = ratio;
        if (first || ratio > report.ratio_max) report.ratio_max = ratio;
        first = false;
        ks.push_back(row.epsilon);
        es.push_back(row.estimate);
    }
    if (ks.size() >= 2) report.affine_fit = least_squares(ks, es);
    return report;
}

struct SurvivalRow {
    double epsilon = 0.0;
    double delta = 0.0;
    std::size_t survived = 0;
    std::size_t samples = 0;
    BinomialInterval interval;
};

inline std::vector<SurvivalRow> survival_curve(Scenario base, double gamma,
                                               std::span<const double> epsilons,
                                               const RegimeSchedule& sched, int replicas) {
    base.stop_gamma = gamma;
    base.order = 0;
    base.estimator.mode = EstimatorMode::pointwise_sup;
    base.estimator.target = EstimatorTarget::remainder;
    base.estimator.stored_times = 1;
    std::vector<SurvivalRow> rows;
    for (double eps : epsilons) {
        Scenario sc = base;
        sc.epsilon = eps;
        sc.delta = sched.delta_for(eps);
        const MomentEstimate est = run_moment_estimate(sc, replicas, base.seed);
        SurvivalRow row;
        row.epsilon = eps;
        row.delta = sc.delta;
        row.samples = est.samples + est.blowups;
        row.survived = row.samples >= est.stopped + est.blowups
                           ? row.samples - est.stopped - est.blowups
                           : 0;
        row.interval = wilson_interval(row.survived, row.samples);
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// application presets

inline Scenario preset(const std::string& name) {
    Scenario sc;
    sc.dimension = 1;
    sc.modes = 128;
    sc.dt = 1e-3;
    sc.steps = 250;
    sc.delta = 0.1;
    sc.replicas = 2000;
    if (name == "dawson-watanabe") {
        sc.conservative = false;
        sc.coefficient = "sqrt";
        sc.initial = {"constant", 1.0, 0.0, {1, 0, 0}};
        sc.stop_gamma = 0.5;
    } else if (name == "fleming-viot") {
        sc.conservative = false;
        sc.coefficient = "logistic-sqrt";
        sc.initial = {"constant", 0.5, 0.0, {1, 0, 0}};
        sc.stop_gamma = 0.25;
    } else if (name == "ssep") {
        sc.conservative = true;
        sc.coefficient = "logistic-sqrt";
        sc.initial = {"constant", 0.5, 0.0, {1, 0, 0}};
        sc.stop_gamma = 0.25;
    } else if (name == "dean-kawasaki") {
        sc.conservative = true;
        sc.coefficient = "sqrt";
        sc.initial = {"constant", 1.0, 0.0, {1, 0, 0}};
        sc.stop_gamma = 0.5;
    } else {
        throw std::invalid_argument("preset: unknown preset '" + name + "'");
    }
    return sc;
}

inline std::vector<std::string> preset_names() {
    return {"dawson-watanabe", "fleming-viot", "ssep", "dean-kawasaki"};
}

// ---------------------------------------------------------------------------
// noise self-test

struct CovarianceCheck {
    std::size_t modes = 0;
    std::size_t failures = 0;   // modes outside 3 standard errors
    std::size_t allowed = 0;    // binomial multiplicity allowance
    double max_z = 0.0;
    bool pass = false;
};

// Empirical per-mode variance of mollified increments vs dt m_delta(m)^2.
inline CovarianceCheck covariance_check(const std::shared_ptr<const TorusGrid>& grid, double delta,
                                        int n_moll, int draws, std::uint64_t seed, double dt = 1e-3) {
    const SpectralMultiplier mult = build_multiplier(grid, delta, n_moll);
    NoisePath path(grid, seed, dt, draws, 1);
    const std::size_t pts = grid->num_points();
    std::vector<KahanSum> sum(pts);
    std::vector<std::complex<double>> buf(pts);
    for (int s = 0; s < draws; ++s) {
        path.raw_increment(s, 0, buf.data());
        for (std::size_t i = 0; i < pts; ++i) {
            const std::complex<double> z = buf[i] * mult.value[i];
            sum[i].add(std::norm(z));
        }
    }
    CovarianceCheck out;
    out.modes = pts;
    for (std::size_t i = 0; i < pts; ++i) {
        const double target = dt * mult.value[i] * mult.value[i];
        // complex-mode |Z|^2 has variance target^2; self-conjugate (real) modes 2 target^2
        const double var = (grid->self_conjugate(i) ? 2.0 : 1.0) * target * target;
        const double se = std::sqrt(var / draws);
        const double z = std::abs(sum[i].value() / draws - target) / se;
        out.max_z = std::max(out.max_z, z);
        if (z > 3.0) ++out.failures;
    }
    const double rate = 0.0027;  // two-sided 3 sigma
    out.allowed = static_cast<std::size_t>(
        std::ceil(rate * static_cast<double>(pts) +
                  3.0 * std::sqrt(rate * (1.0 - rate) * static_cast<double>(pts))));
    out.pass = out.failures <= out.allowed;
    return out;
}

}  // namespace she
