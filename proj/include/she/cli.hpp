// Command-line front end. Subcommands: simulate, expand, remainder, rates,
// divergence, survival, covariance-check, presets. Each reads a JSON scenario
// (schema 1), writes CSV tables plus a JSON run manifest, and exits nonzero
// on schema violations, blow-up thresholds, or failed --check assertions.
#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "she/io.hpp"

namespace she {
namespace cli_detail {

struct CommonArgs {
    std::string config;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> replicas;
    std::optional<int> workers;
    bool check = false;
};

inline void add_common(CLI::App* cmd, CommonArgs& args, bool with_check = true) {
    cmd->add_option("config", args.config, "scenario JSON file")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "master seed override");
    cmd->add_option("--replicas", args.replicas, "replica count override");
    cmd->add_option("--workers", args.workers, "worker thread count override");
    if (with_check) cmd->add_flag("--check", args.check, "apply the scenario's check block");
}

inline ScenarioFile load(const CommonArgs& args) {
    ScenarioFile file = load_scenario(args.config);
    if (args.seed) file.scenario.seed = *args.seed;
    if (args.replicas) file.scenario.replicas = *args.replicas;
    if (args.workers) file.scenario.workers = *args.workers;
    std::filesystem::create_directories(args.out_dir);
    return file;
}

class WallClock {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::vector<double> snapshot_times(double dt, int steps) {
    std::vector<double> t;
    for (int j = 0; j <= steps; ++j) t.push_back(j * dt);
    return t;
}

inline void print_warnings(const Scenario& sc) {
    const auto grid = build_grid(sc.dimension, sc.modes);
    const DiffusionCoefficient g = coefficient_preset(sc.coefficient);
    Field u0 = build_initial(grid, sc.initial);
    double sup0 = u0.physical(0)[0], inf0 = sup0;
    for (double v : u0.physical(0)) {
        sup0 = std::max(sup0, v);
        inf0 = std::min(inf0, v);
    }
    const DiffusionCoefficient geff = detail::effective_coefficient(g, solver_config(sc), sup0, inf0);
    for (const auto& w : validate_config(solver_config(sc), *grid, geff))
        std::cerr << "warning: " << w << "\n";
}

inline int cmd_simulate(const CommonArgs& args) {
    const ScenarioFile file = load(args);
    const Scenario& sc = file.scenario;
    print_warnings(sc);
    WallClock clock;
    const auto grid = build_grid(sc.dimension, sc.modes);
    const DiffusionCoefficient g = coefficient_preset(sc.coefficient);
    const Field u0 = build_initial(grid, sc.initial);
    NoisePath path(grid, sc.seed, sc.dt, sc.steps, sc.conservative ? sc.dimension : 1);
    const Trajectory traj = simulate(solver_config(sc), g, u0, path);
    const std::filesystem::path base = std::filesystem::path(args.out_dir) / "trajectory";
    write_field_series(base, traj.states, snapshot_times(sc.dt, sc.steps), sc.seed, file.echo);
    write_manifest(std::filesystem::path(args.out_dir) / "manifest.json", "simulate", file.echo,
                   sc.seed, 1, 1, clock.seconds(), {"trajectory.bin", "trajectory.json"},
                   json{{"stopping_index",
                         traj.stopping_index ? json(*traj.stopping_index) : json(nullptr)}});
    std::cout << "simulate: " << sc.steps << " steps, "
              << (traj.stopping_index ? "stopped at index " + std::to_string(*traj.stopping_index)
                                      : std::string("no stopping"))
              << "\n";
    return 0;
}

inline int cmd_expand(const CommonArgs& args) {
    const ScenarioFile file = load(args);
    const Scenario& sc = file.scenario;
    WallClock clock;
    const auto grid = build_grid(sc.dimension, sc.modes);
    const DiffusionCoefficient g = coefficient_preset(sc.coefficient);
    const Field u0 = build_initial(grid, sc.initial);
    NoisePath path(grid, sc.seed, sc.dt, sc.steps, sc.conservative ? sc.dimension : 1);
    const ExpansionStack stack = solve_coefficients(sc.order, g, u0, path, solver_config(sc));
    std::vector<std::string> outputs;
    const auto times = snapshot_times(sc.dt, sc.steps);
    write_field_series(std::filesystem::path(args.out_dir) / "ubar0", stack.ubar0, times, sc.seed,
                       file.echo);
    outputs.push_back("ubar0.bin");
    for (int k = 1; k <= sc.order; ++k) {
        const std::string name = "ubar" + std::to_string(k);
        write_field_series(std::filesystem::path(args.out_dir) / name,
                           stack.ubar[static_cast<std::size_t>(k - 1)], times, sc.seed, file.echo);
        outputs.push_back(name + ".bin");
    }
    write_manifest(std::filesystem::path(args.out_dir) / "manifest.json", "expand", file.echo,
                   sc.seed, 1, 1, clock.seconds(), outputs);
    std::cout << "expand: order " << sc.order << ", " << sc.steps << " steps\n";
    return 0;
}

inline int cmd_remainder(const CommonArgs& args) {
    const ScenarioFile file = load(args);
    const Scenario& sc = file.scenario;
    WallClock clock;
    const auto grid = build_grid(sc.dimension, sc.modes);
    const DiffusionCoefficient g = coefficient_preset(sc.coefficient);
    const Field u0 = build_initial(grid, sc.initial);
    NoisePath path(grid, sc.seed, sc.dt, sc.steps, sc.conservative ? sc.dimension : 1);
    const Trajectory traj = simulate(solver_config(sc), g, u0, path);
    const ExpansionStack stack = solve_coefficients(sc.order, g, u0, path, solver_config(sc));
    const Remainder rem = assemble_remainder(traj, stack, sc.epsilon, sc.order);
    const auto times = snapshot_times(sc.dt, sc.steps);
    write_field_series(std::filesystem::path(args.out_dir) / "remainder", rem.w, times, sc.seed,
                       file.echo);
    double wmax = 0.0;
    for (const auto& f : rem.w)
        for (double v : f.physical()) wmax = std::max(wmax, std::abs(v));
    write_csv(std::filesystem::path(args.out_dir) / "remainder.csv",
              {"epsilon", "delta", "estimate", "stderr", "M"},
              {{sc.epsilon, sc.delta, wmax, 0.0, 1.0}});
    write_manifest(std::filesystem::path(args.out_dir) / "manifest.json", "remainder", file.echo,
                   sc.seed, 1, 1, clock.seconds(),
                   {"remainder.bin", "remainder.json", "remainder.csv"},
                   json{{"max_abs_w", wmax}, {"order", sc.order}});
    std::cout << "remainder: order " << sc.order << ", max |w_n| = " << format_full(wmax) << "\n";
    return 0;
}

inline int cmd_rates(const CommonArgs& args) {
    const ScenarioFile file = load(args);
    const Scenario& sc = file.scenario;
    if (file.epsilons.size() < 4) {
        std::cerr << "/sweep/epsilons: rates needs at least 4 sweep points\n";
        return 2;
    }
    print_warnings(sc);
    WallClock clock;
    const RateReport report =
        rate_sweep(sc, file.epsilons, file.schedule, sc.order, sc.estimator.p, sc.replicas);
    std::vector<std::vector<double>> rows;
    for (const auto& r : report.rows)
        rows.push_back({r.epsilon, r.delta, r.estimate, r.stderr_, static_cast<double>(r.samples)});
    const auto csv = std::filesystem::path(args.out_dir) / "rates.csv";
    write_csv(csv, {"epsilon", "delta", "estimate", "stderr", "M"}, rows);
    json results{{"fitted_slope", report.fit.slope},
                 {"slope_stderr", report.fit.slope_stderr},
                 {"predicted_exponent", report.predicted.exponent},
                 {"log_correction", report.predicted.log_correction},
                 {"used_points", report.used_points}};
    write_manifest(std::filesystem::path(args.out_dir) / "manifest.json", "rates", file.echo,
                   sc.seed, sc.replicas, resolve_workers(sc.workers), clock.seconds(),
                   {"rates.csv"}, results);
    std::printf("rates: fitted slope %.3f +- %.3f, predicted %.3f%s\n", report.fit.slope,
                report.fit.slope_stderr, report.predicted.exponent,
                report.predicted.log_correction ? " (log-corrected)" : "");
    if (args.check) {
        const double tol = file.check.slope_tolerance.value_or(0.1);
        if (std::abs(report.fit.slope - report.predicted.exponent) > tol) {
            std::cerr << "check failed: |fitted - predicted| > " << tol << "\n";
            return 1;
        }
    }
    return 0;
}

inline int cmd_divergence(const CommonArgs& args) {
    const ScenarioFile file = load(args);
    const Scenario& sc = file.scenario;
    if (file.deltas.empty()) {
        std::cerr << "/sweep/deltas: divergence needs a delta list\n";
        return 2;
    }
    WallClock clock;
    const DivergenceReport report =
        divergence_sweep(sc, file.deltas, sc.order, sc.estimator.p, sc.replicas);
    std::vector<std::vector<double>> rows;
    for (const auto& r : report.rows)
        rows.push_back({sc.epsilon, r.delta, r.estimate, r.stderr_, static_cast<double>(r.samples)});
    const auto csv = std::filesystem::path(args.out_dir) / "divergence.csv";
    write_csv(csv, {"epsilon", "delta", "estimate", "stderr", "M"}, rows);
    json results{{"ratio_min", report.ratio_min},
                 {"ratio_max", report.ratio_max},
                 {"affine_r2", report.affine_fit.r2},
                 {"affine_slope", report.affine_fit.slope}};
    write_manifest(std::filesystem::path(args.out_dir) / "manifest.json", "divergence", file.echo,
                   sc.seed, sc.replicas, resolve_workers(sc.workers), clock.seconds(),
                   {"divergence.csv"}, results);
    std::printf("divergence: ratio range [%.4g, %.4g], affine fit R^2 = %.4f\n", report.ratio_min,
                report.ratio_max, report.affine_fit.r2);
    if (args.check) {
        bool ok = true;
        if (file.check.ratio_bound && report.ratio_min > 0.0 &&
            report.ratio_max / report.ratio_min > *file.check.ratio_bound) {
            std::cerr << "check failed: ratio spread exceeds " << *file.check.ratio_bound << "\n";
            ok = false;
        }
        if (file.check.r2_min && report.affine_fit.r2 < *file.check.r2_min) {
            std::cerr << "check failed: affine fit R^2 below " << *file.check.r2_min << "\n";
            ok = false;
        }
        if (!ok) return 1;
    }
    return 0;
}

inline int cmd_survival(const CommonArgs& args) {
    const ScenarioFile file = load(args);
    const Scenario& sc = file.scenario;
    if (file.epsilons.empty()) {
        std::cerr << "/sweep/epsilons: survival needs an epsilon list\n";
        return 2;
    }
    if (!sc.stop_gamma) {
        std::cerr << "/stopping/gamma: survival needs a stopping margin\n";
        return 2;
    }
    WallClock clock;
    const auto rows = survival_curve(sc, *sc.stop_gamma, file.epsilons, file.schedule, sc.replicas);
    std::vector<std::vector<double>> csv_rows;
    for (const auto& r : rows) {
        const double p = r.interval.fraction;
        const double se = r.samples ? std::sqrt(std::max(0.0, p * (1.0 - p)) / r.samples) : 0.0;
        csv_rows.push_back({r.epsilon, r.delta, p, se, static_cast<double>(r.samples)});
    }
    const auto csv = std::filesystem::path(args.out_dir) / "survival.csv";
    write_csv(csv, {"epsilon", "delta", "estimate", "stderr", "M"}, csv_rows);
    json jr = json::array();
    for (const auto& r : rows)
        jr.push_back({{"epsilon", r.epsilon},
                      {"delta", r.delta},
                      {"fraction", r.interval.fraction},
                      {"ci_low", r.interval.low},
                      {"ci_high", r.interval.high}});
    write_manifest(std::filesystem::path(args.out_dir) / "manifest.json", "survival", file.echo,
                   sc.seed, sc.replicas, resolve_workers(sc.workers), clock.seconds(),
                   {"survival.csv"}, json{{"curve", jr}});
    for (const auto& r : rows)
        std::printf("survival: eps=%.6g delta=%.6g P(tau>T)=%.4f [%.4f, %.4f]\n", r.epsilon,
                    r.delta, r.interval.fraction, r.interval.low, r.interval.high);
    if (args.check) {
        // epsilons are swept in the given (decreasing) order; the curve must be
        // nondecreasing within the binomial confidence bands
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].interval.high < rows[i - 1].interval.low) {
                std::cerr << "check failed: survival decreases beyond CI between points " << i - 1
                          << " and " << i << "\n";
                return 1;
            }
        }
        const double target = file.check.survival_min.value_or(0.99);
        if (rows.back().interval.fraction < target) {
            std::cerr << "check failed: final survival below " << target << "\n";
            return 1;
        }
    }
    return 0;
}

inline int cmd_covariance(const CommonArgs& args) {
    const ScenarioFile file = load(args);
    const Scenario& sc = file.scenario;
    WallClock clock;
    const auto grid = build_grid(sc.dimension, sc.modes);
    const int draws = sc.replicas;
    const CovarianceCheck chk =
        covariance_check(grid, sc.delta, sc.mollifier_order, draws, sc.seed, sc.dt);
    write_csv(std::filesystem::path(args.out_dir) / "covariance.csv",
              {"epsilon", "delta", "estimate", "stderr", "M"},
              {{0.0, sc.delta, chk.max_z, 0.0, static_cast<double>(draws)}});
    write_manifest(std::filesystem::path(args.out_dir) / "manifest.json", "covariance-check",
                   file.echo, sc.seed, draws, 1, clock.seconds(), {"covariance.csv"},
                   json{{"modes", chk.modes},
                        {"failures", chk.failures},
                        {"allowed", chk.allowed},
                        {"max_z", chk.max_z},
                        {"pass", chk.pass}});
    std::printf("covariance-check: %zu modes, %zu beyond 3 sigma (allowance %zu), max z = %.3f\n",
                chk.modes, chk.failures, chk.allowed, chk.max_z);
    return chk.pass ? 0 : 1;
}

inline int cmd_presets() {
    for (const auto& name : preset_names()) {
        const Scenario sc = preset(name);
        std::printf("%-16s %s, G = %s, u0 = %g, gamma = %g\n", name.c_str(),
                    sc.conservative ? "conservative" : "non-conservative", sc.coefficient.c_str(),
                    sc.initial.value, sc.stop_gamma.value_or(0.0));
    }
    return 0;
}

}  // namespace cli_detail

inline int run_cli(std::vector<std::string> args) {
    CLI::App app{"pseudo-spectral simulator and statistical verifier for stochastic heat "
                 "equations on the torus"};
    app.require_subcommand(1);

    cli_detail::CommonArgs sim, exp, rem, rates, div, surv, cov;
    auto* c_sim = app.add_subcommand("simulate", "run one trajectory and export it");
    cli_detail::add_common(c_sim, sim, false);
    auto* c_exp = app.add_subcommand("expand", "run the expansion stack and export it");
    cli_detail::add_common(c_exp, exp, false);
    auto* c_rem = app.add_subcommand("remainder", "coupled trajectory + stack, export w_n");
    cli_detail::add_common(c_rem, rem, false);
    auto* c_rates = app.add_subcommand("rates", "Monte Carlo rate sweep over epsilon");
    cli_detail::add_common(c_rates, rates);
    auto* c_div = app.add_subcommand("divergence", "coefficient moments across a delta sweep");
    cli_detail::add_common(c_div, div);
    auto* c_surv = app.add_subcommand("survival", "empirical survival of the stopping time");
    cli_detail::add_common(c_surv, surv);
    auto* c_cov = app.add_subcommand("covariance-check", "per-mode noise variance self-test");
    cli_detail::add_common(c_cov, cov, false);
    auto* c_pre = app.add_subcommand("presets", "list application presets");

    std::vector<char*> argv;
    std::string prog = "she";
    argv.push_back(prog.data());
    for (auto& a : args) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (c_sim->parsed()) return cli_detail::cmd_simulate(sim);
        if (c_exp->parsed()) return cli_detail::cmd_expand(exp);
        if (c_rem->parsed()) return cli_detail::cmd_remainder(rem);
        if (c_rates->parsed()) return cli_detail::cmd_rates(rates);
        if (c_div->parsed()) return cli_detail::cmd_divergence(div);
        if (c_surv->parsed()) return cli_detail::cmd_survival(surv);
        if (c_cov->parsed()) return cli_detail::cmd_covariance(cov);
        if (c_pre->parsed()) return cli_detail::cmd_presets();
    } catch (const SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const BlowupError& e) {
        std::cerr << "solver blow-up: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace she
