#pragma once

#include <array>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>

#include <json.hpp>

#include "monodyn/core.hpp"
#include "monodyn/dynamics.hpp"
#include "monodyn/error.hpp"
#include "monodyn/stationary.hpp"

namespace monodyn {

/// Configuration problems map to exit code 1 in the CLI, everything else
/// physics/numerics-related to exit code 2.
class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::invalid_argument, what) {}
};

enum class OutputFormat { csv, json };

struct OutputConfig {
    OutputFormat format = OutputFormat::csv;
    std::string path;  // empty: stdout
    long stride = 1;
};

struct InitialStateConfig {
    enum class Moments { zero, saturated, explicit_values };

    Means6 mean{};
    Moments kind = Moments::zero;
    std::array<double, kNumMoments> values{};

    /// Materialize the configured state; "saturated" uses the corrected mode.
    MomentState build(const Params& params) const {
        switch (kind) {
            case Moments::saturated:
                return saturate(mean, params, SaturationMode::corrected);
            case Moments::explicit_values:
                return MomentState::checked(mean, values);
            case Moments::zero:
            default:
                return MomentState::checked(mean, {});
        }
    }
};

struct RunConfig {
    Params params;
    std::optional<InitialStateConfig> initial_state;
    std::optional<IntegratorConfig> integrator;
    OutputConfig output;
};

namespace cfg_detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
    throw ConfigError("config error at " + path + ": " + msg);
}

inline void check_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) ok = true;
        if (!ok) fail(path, "unknown key \"" + item.key() + "\"");
    }
}

inline const json& require(const json& obj, const std::string& path, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path, std::string("missing required key \"") + key + "\"");
    return *it;
}

inline double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

inline double get_positive(const json& j, const std::string& path) {
    const double v = get_number(j, path);
    if (!(v > 0.0)) fail(path, "must be > 0");
    return v;
}

inline double get_nonnegative(const json& j, const std::string& path) {
    const double v = get_number(j, path);
    if (!(v >= 0.0)) fail(path, "must be >= 0");
    return v;
}

inline std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

inline FieldModel parse_field(const json& j, const std::string& path) {
    check_object(j, path);
    const std::string type = get_string(require(j, path, "type"), path + "/type");
    if (type == "linear") {
        check_keys(j, path, {"type", "mu"});
        return LinearZ{get_number(require(j, path, "mu"), path + "/mu")};
    }
    if (type == "constant") {
        check_keys(j, path, {"type", "b0"});
        return ConstantZ{get_number(require(j, path, "b0"), path + "/b0")};
    }
    fail(path + "/type", "expected \"linear\" or \"constant\"");
}

inline InitialStateConfig parse_initial_state(const json& j, const std::string& path) {
    check_object(j, path);
    check_keys(j, path, {"mean", "moments"});
    InitialStateConfig out;

    const json& mean = require(j, path, "mean");
    check_object(mean, path + "/mean");
    check_keys(mean, path + "/mean", {"x", "y", "z", "px", "py", "pz"});
    constexpr std::array<const char*, 6> names = {"x", "y", "z", "px", "py", "pz"};
    for (int i = 0; i < kNumVars; ++i)
        out.mean[i] = get_number(require(mean, path + "/mean", names[i]),
                                 path + "/mean/" + names[i]);

    if (const auto it = j.find("moments"); it != j.end()) {
        if (it->is_string()) {
            const std::string s = it->get<std::string>();
            if (s == "zero")
                out.kind = InitialStateConfig::Moments::zero;
            else if (s == "saturated")
                out.kind = InitialStateConfig::Moments::saturated;
            else
                fail(path + "/moments", "expected \"zero\", \"saturated\" or an array of 21 numbers");
        } else if (it->is_array()) {
            if (it->size() != kNumMoments)
                fail(path + "/moments", "explicit moments need exactly 21 entries");
            out.kind = InitialStateConfig::Moments::explicit_values;
            for (int i = 0; i < kNumMoments; ++i)
                out.values[i] = get_number((*it)[static_cast<std::size_t>(i)],
                                           path + "/moments[" + std::to_string(i) + "]");
            for (int i = 0; i < kNumVars; ++i)
                if (out.values[moment_offset(i, i)] < 0.0)
                    fail(path + "/moments", "diagonal moments must be non-negative");
        } else {
            fail(path + "/moments", "expected \"zero\", \"saturated\" or an array of 21 numbers");
        }
    }
    return out;
}

inline IntegratorConfig parse_integrator(const json& j, const std::string& path) {
    check_object(j, path);
    IntegratorConfig out;
    const std::string method = get_string(require(j, path, "method"), path + "/method");
    if (method == "rk4_fixed") {
        check_keys(j, path, {"method", "dt", "t_end"});
        out.method = IntegratorConfig::Method::rk4_fixed;
        out.dt = get_positive(require(j, path, "dt"), path + "/dt");
    } else if (method == "rk45_adaptive") {
        check_keys(j, path, {"method", "rel_tol", "abs_tol", "dt_min", "dt_max", "t_end"});
        out.method = IntegratorConfig::Method::rk45_adaptive;
        if (const auto it = j.find("rel_tol"); it != j.end())
            out.rel_tol = get_positive(*it, path + "/rel_tol");
        if (const auto it = j.find("abs_tol"); it != j.end())
            out.abs_tol = get_positive(*it, path + "/abs_tol");
        if (const auto it = j.find("dt_min"); it != j.end())
            out.dt_min = get_positive(*it, path + "/dt_min");
        if (const auto it = j.find("dt_max"); it != j.end())
            out.dt_max = get_positive(*it, path + "/dt_max");
        if (out.dt_min > 0.0 && out.dt_max > 0.0 && out.dt_min > out.dt_max)
            fail(path, "dt_min must not exceed dt_max");
    } else {
        fail(path + "/method", "expected \"rk4_fixed\" or \"rk45_adaptive\"");
    }
    out.t_end = get_nonnegative(require(j, path, "t_end"), path + "/t_end");
    return out;
}

inline OutputConfig parse_output(const json& j, const std::string& path) {
    check_object(j, path);
    check_keys(j, path, {"format", "path", "stride"});
    OutputConfig out;
    if (const auto it = j.find("format"); it != j.end()) {
        const std::string f = get_string(*it, path + "/format");
        if (f == "csv")
            out.format = OutputFormat::csv;
        else if (f == "json")
            out.format = OutputFormat::json;
        else
            fail(path + "/format", "expected \"csv\" or \"json\"");
    }
    if (const auto it = j.find("path"); it != j.end())
        out.path = get_string(*it, path + "/path");
    if (const auto it = j.find("stride"); it != j.end()) {
        if (!it->is_number_integer()) fail(path + "/stride", "expected an integer");
        out.stride = it->get<long>();
        if (out.stride < 1) fail(path + "/stride", "must be >= 1");
    }
    return out;
}

}  // namespace cfg_detail

/// Strict parse of the configuration document: unknown keys are rejected and
/// numeric constraints are enforced here, with JSON-pointer-style locations in
/// every message.
inline RunConfig parse_run_config(const nlohmann::json& root) {
    using namespace cfg_detail;
    check_object(root, "/");
    check_keys(root, "/",
               {"particle", "trap", "field", "hbar", "initial_state", "integrator", "output"});

    const json& particle = require(root, "/", "particle");
    check_object(particle, "/particle");
    check_keys(particle, "/particle", {"mass", "charge"});
    const double mass = get_positive(require(particle, "/particle", "mass"), "/particle/mass");
    const double charge =
        get_number(require(particle, "/particle", "charge"), "/particle/charge");

    const json& trap = require(root, "/", "trap");
    check_object(trap, "/trap");
    check_keys(trap, "/trap", {"omega"});
    const double omega = get_nonnegative(require(trap, "/trap", "omega"), "/trap/omega");

    const FieldModel field = parse_field(require(root, "/", "field"), "/field");
    const double hbar = get_positive(require(root, "/", "hbar"), "/hbar");

    RunConfig cfg{Params(mass, charge, omega, hbar, field), {}, {}, {}};
    if (const auto it = root.find("initial_state"); it != root.end())
        cfg.initial_state = parse_initial_state(*it, "/initial_state");
    if (const auto it = root.find("integrator"); it != root.end()) {
        cfg.integrator = parse_integrator(*it, "/integrator");
        cfg.integrator->validate();
    }
    if (const auto it = root.find("output"); it != root.end())
        cfg.output = parse_output(*it, "/output");
    return cfg;
}

/// Load and parse a configuration file. Syntax errors carry the line and
/// column reported by the JSON parser.
inline RunConfig load_run_config(const std::string& file_path) {
    std::ifstream in(file_path);
    if (!in) throw ConfigError("cannot open config file: " + file_path);
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(file_path + ": " + e.what());
    }
    return parse_run_config(root);
}

}  // namespace monodyn
