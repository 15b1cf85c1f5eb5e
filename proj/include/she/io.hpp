// Scenario JSON (schema 1) parsing and validation, CSV result tables, binary
// field dumps with JSON sidecars, and the run manifest.
#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "she/harness.hpp"

namespace she {

using nlohmann::json;

class SchemaError : public std::runtime_error {
public:
    SchemaError(const std::string& pointer, const std::string& message)
        : std::runtime_error(pointer + ": " + message), pointer_(pointer) {}
    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

namespace detail {

inline const json* maybe(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline double get_number(const json& j, const std::string& ptr, const char* key, double fallback,
                         bool required = false) {
    const json* v = maybe(j, key);
    if (!v) {
        if (required) throw SchemaError(ptr + "/" + key, "missing required number");
        return fallback;
    }
    if (!v->is_number()) throw SchemaError(ptr + "/" + key, "expected a number");
    return v->get<double>();
}

inline int get_int(const json& j, const std::string& ptr, const char* key, int fallback,
                   bool required = false) {
    const json* v = maybe(j, key);
    if (!v) {
        if (required) throw SchemaError(ptr + "/" + key, "missing required integer");
        return fallback;
    }
    if (!v->is_number_integer()) throw SchemaError(ptr + "/" + key, "expected an integer");
    return v->get<int>();
}

inline bool get_bool(const json& j, const std::string& ptr, const char* key, bool fallback) {
    const json* v = maybe(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw SchemaError(ptr + "/" + key, "expected a boolean");
    return v->get<bool>();
}

inline std::string get_string(const json& j, const std::string& ptr, const char* key,
                              const std::string& fallback, bool required = false) {
    const json* v = maybe(j, key);
    if (!v) {
        if (required) throw SchemaError(ptr + "/" + key, "missing required string");
        return fallback;
    }
    if (!v->is_string()) throw SchemaError(ptr + "/" + key, "expected a string");
    return v->get<std::string>();
}

}  // namespace detail

struct CheckSpec {
    std::optional<double> slope_tolerance;
    std::optional<double> r2_min;
    std::optional<double> ratio_bound;
    std::optional<double> survival_min;
};

struct ScenarioFile {
    Scenario scenario;
    std::vector<double> epsilons;
    std::vector<double> deltas;
    RegimeSchedule schedule;
    CheckSpec check;
    json echo;  // parsed document, for the manifest
};

inline ScenarioFile parse_scenario(const json& j) {
    if (!j.is_object()) throw SchemaError("", "scenario must be a JSON object");
    const int schema = detail::get_int(j, "", "schema", 0, true);
    if (schema != 1) throw SchemaError("/schema", "unsupported schema version (expected 1)");

    ScenarioFile out;
    out.echo = j;
    if (const json* p = detail::maybe(j, "preset")) {
        if (!p->is_string()) throw SchemaError("/preset", "expected a string");
        out.scenario = preset(p->get<std::string>());
    }
    Scenario& sc = out.scenario;

    if (const json* g = detail::maybe(j, "grid")) {
        sc.dimension = detail::get_int(*g, "/grid", "dimension", sc.dimension);
        sc.modes = detail::get_int(*g, "/grid", "modes_per_axis", sc.modes);
        if (sc.dimension < 1 || sc.dimension > 3)
            throw SchemaError("/grid/dimension", "must be 1, 2 or 3");
        if (sc.modes < 4 || sc.modes % 2 != 0)
            throw SchemaError("/grid/modes_per_axis", "must be an even integer >= 4");
    }
    if (const json* t = detail::maybe(j, "time")) {
        sc.dt = detail::get_number(*t, "/time", "dt", sc.dt);
        sc.steps = detail::get_int(*t, "/time", "steps", sc.steps);
        if (sc.dt <= 0.0) throw SchemaError("/time/dt", "must be positive");
        if (sc.steps < 1) throw SchemaError("/time/steps", "must be a positive integer");
    }
    if (const json* n = detail::maybe(j, "noise")) {
        sc.delta = detail::get_number(*n, "/noise", "delta", sc.delta);
        sc.mollifier_order = detail::get_int(*n, "/noise", "mollifier_order", sc.mollifier_order);
        if (sc.delta < 0.0) throw SchemaError("/noise/delta", "must be >= 0");
        if (sc.mollifier_order < 1) throw SchemaError("/noise/mollifier_order", "must be >= 1");
    }
    if (const json* e = detail::maybe(j, "equation")) {
        sc.conservative = detail::get_bool(*e, "/equation", "conservative", sc.conservative);
        sc.epsilon = detail::get_number(*e, "/equation", "epsilon", sc.epsilon);
        sc.order = detail::get_int(*e, "/equation", "order", sc.order);
        sc.coefficient = detail::get_string(*e, "/equation", "coefficient", sc.coefficient);
        sc.dealias = detail::get_bool(*e, "/equation", "dealias", sc.dealias);
        if (sc.epsilon < 0.0) throw SchemaError("/equation/epsilon", "must be >= 0");
        if (sc.order < 0 || sc.order > 5) throw SchemaError("/equation/order", "must lie in 0..5");
        try {
            coefficient_preset(sc.coefficient);
        } catch (const std::exception&) {
            throw SchemaError("/equation/coefficient", "unknown preset '" + sc.coefficient + "'");
        }
    }
    if (const json* i = detail::maybe(j, "initial")) {
        sc.initial.kind = detail::get_string(*i, "/initial", "kind", sc.initial.kind);
        if (sc.initial.kind != "constant" && sc.initial.kind != "cosine")
            throw SchemaError("/initial/kind", "must be 'constant' or 'cosine'");
        sc.initial.value = detail::get_number(*i, "/initial", "value", sc.initial.value);
        sc.initial.amplitude = detail::get_number(*i, "/initial", "amplitude", sc.initial.amplitude);
        if (const json* m = detail::maybe(*i, "mode")) {
            if (!m->is_array() || m->empty() || m->size() > 3)
                throw SchemaError("/initial/mode", "expected an array of 1..3 integers");
            sc.initial.mode = {0, 0, 0};
            for (std::size_t ax = 0; ax < m->size(); ++ax) {
                if (!(*m)[ax].is_number_integer())
                    throw SchemaError("/initial/mode", "expected integer entries");
                sc.initial.mode[ax] = (*m)[ax].get<int>();
            }
        }
    }
    if (const json* s = detail::maybe(j, "stopping")) {
        sc.stop_gamma = detail::get_number(*s, "/stopping", "gamma", 0.0, true);
        if (*sc.stop_gamma <= 0.0) throw SchemaError("/stopping/gamma", "must be positive");
        const double margin = detail::get_number(*s, "/stopping", "margin", -1.0);
        if (margin > 0.0) sc.stop_margin = margin;
    }
    if (const json* e = detail::maybe(j, "estimator")) {
        const std::string mode = detail::get_string(*e, "/estimator", "mode", "pointwise-sup");
        if (mode == "pointwise-sup")
            sc.estimator.mode = EstimatorMode::pointwise_sup;
        else if (mode == "space-time-lp")
            sc.estimator.mode = EstimatorMode::space_time_lp;
        else
            throw SchemaError("/estimator/mode", "must be 'pointwise-sup' or 'space-time-lp'");
        const std::string target = detail::get_string(*e, "/estimator", "target", "remainder");
        if (target == "remainder")
            sc.estimator.target = EstimatorTarget::remainder;
        else if (target == "coefficient")
            sc.estimator.target = EstimatorTarget::coefficient;
        else
            throw SchemaError("/estimator/target", "must be 'remainder' or 'coefficient'");
        sc.estimator.p = detail::get_number(*e, "/estimator", "p", sc.estimator.p);
        if (sc.estimator.p < 1.0) throw SchemaError("/estimator/p", "must be >= 1");
        sc.estimator.stored_times = detail::get_int(*e, "/estimator", "stored_times", sc.estimator.stored_times);
        if (sc.estimator.stored_times < 1)
            throw SchemaError("/estimator/stored_times", "must be >= 1");
        sc.estimator.normalized = detail::get_bool(*e, "/estimator", "normalized", sc.estimator.normalized);
    }
    if (const json* s = detail::maybe(j, "sweep")) {
        if (const json* eps = detail::maybe(*s, "epsilons")) {
            if (!eps->is_array()) throw SchemaError("/sweep/epsilons", "expected an array");
            for (const auto& v : *eps) {
                if (!v.is_number() || v.get<double>() <= 0.0)
                    throw SchemaError("/sweep/epsilons", "entries must be positive numbers");
                out.epsilons.push_back(v.get<double>());
            }
        }
        if (const json* ds = detail::maybe(*s, "deltas")) {
            if (!ds->is_array()) throw SchemaError("/sweep/deltas", "expected an array");
            for (const auto& v : *ds) {
                if (!v.is_number() || v.get<double>() <= 0.0)
                    throw SchemaError("/sweep/deltas", "entries must be positive numbers");
                out.deltas.push_back(v.get<double>());
            }
        }
        if (const json* sch = detail::maybe(*s, "schedule")) {
            const std::string kind = detail::get_string(*sch, "/sweep/schedule", "kind", "fixed");
            if (kind == "fixed") {
                out.schedule.kind = RegimeSchedule::Kind::fixed;
                out.schedule.delta = detail::get_number(*sch, "/sweep/schedule", "delta", sc.delta);
            } else if (kind == "power") {
                out.schedule.kind = RegimeSchedule::Kind::power;
                out.schedule.coeff = detail::get_number(*sch, "/sweep/schedule", "coeff", 1.0);
                out.schedule.exponent = detail::get_number(*sch, "/sweep/schedule", "exponent", 0.25, true);
                if (out.schedule.exponent <= 0.0)
                    throw SchemaError("/sweep/schedule/exponent", "must be positive");
            } else {
                throw SchemaError("/sweep/schedule/kind", "must be 'fixed' or 'power'");
            }
        } else {
            out.schedule.kind = RegimeSchedule::Kind::fixed;
            out.schedule.delta = sc.delta;
        }
    } else {
        out.schedule.kind = RegimeSchedule::Kind::fixed;
        out.schedule.delta = sc.delta;
    }
    if (const json* c = detail::maybe(j, "check")) {
        if (detail::maybe(*c, "slope_tolerance"))
            out.check.slope_tolerance = detail::get_number(*c, "/check", "slope_tolerance", 0.0);
        if (detail::maybe(*c, "r2_min")) out.check.r2_min = detail::get_number(*c, "/check", "r2_min", 0.0);
        if (detail::maybe(*c, "ratio_bound"))
            out.check.ratio_bound = detail::get_number(*c, "/check", "ratio_bound", 0.0);
        if (detail::maybe(*c, "survival_min"))
            out.check.survival_min = detail::get_number(*c, "/check", "survival_min", 0.0);
    }
    sc.replicas = detail::get_int(j, "", "replicas", sc.replicas);
    if (sc.replicas < 1) throw SchemaError("/replicas", "must be a positive integer");
    if (const json* s = detail::maybe(j, "seed")) {
        if (!s->is_number_unsigned() && !s->is_number_integer())
            throw SchemaError("/seed", "expected an integer");
        sc.seed = s->get<std::uint64_t>();
    }
    sc.workers = detail::get_int(j, "", "workers", sc.workers);
    if (sc.workers < 0) throw SchemaError("/workers", "must be >= 0");
    return out;
}

inline ScenarioFile load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    return parse_scenario(j);
}

// ---------------------------------------------------------------------------
// output files

inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_full(row[i]);
        out << "\n";
    }
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string content_hash(const json& j) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

inline void write_manifest(const std::filesystem::path& path, const std::string& command,
                           const json& config_echo, std::uint64_t seed, int replicas, int workers,
                           double wall_seconds, const std::vector<std::string>& outputs,
                           const json& results = json::object()) {
    json m;
    m["schema"] = 1;
    m["command"] = command;
    m["config"] = config_echo;
    m["config_hash"] = content_hash(config_echo);
    m["seed"] = seed;
    m["replicas"] = replicas;
    m["workers"] = workers;
    m["wall_seconds"] = wall_seconds;
    m["outputs"] = outputs;
    if (!results.empty()) m["results"] = results;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << m.dump(2) << "\n";
}

// Raw little-endian doubles, one stored time after another, plus a JSON
// sidecar with grid metadata, times, seed and config echo.
inline void write_field_series(const std::filesystem::path& base, const std::vector<Field>& series,
                               const std::vector<double>& times, std::uint64_t seed,
                               const json& config_echo) {
    if (series.empty()) throw std::invalid_argument("write_field_series: empty series");
    const auto grid = series.front().grid();
    std::filesystem::path bin = base;
    bin += ".bin";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + bin.string() + "'");
    for (const auto& f : series) {
        auto v = f.physical();
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    json side;
    side["schema"] = 1;
    side["grid"] = {{"dimension", grid->dimension()}, {"modes_per_axis", grid->modes_per_axis()}};
    side["representation"] = "physical";
    side["arity"] = series.front().arity();
    side["snapshots"] = series.size();
    side["times"] = times;
    side["seed"] = seed;
    side["config"] = config_echo;
    std::filesystem::path sj = base;
    sj += ".json";
    std::ofstream outj(sj, std::ios::binary);
    if (!outj) throw std::runtime_error("cannot write '" + sj.string() + "'");
    outj << side.dump(2) << "\n";
}

}  // namespace she
