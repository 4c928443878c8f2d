#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "monodyn/config.hpp"
#include "monodyn/io.hpp"
#include "monodyn/monodyn.hpp"

namespace {

using monodyn::ConfigError;
using monodyn::MomentState;
using monodyn::OutputFormat;
using monodyn::Params;
using monodyn::RunConfig;
using monodyn::SaturationMode;
using ordered_json = nlohmann::ordered_json;

void write_output(const std::string& path, const std::string& data) {
    if (path.empty()) {
        std::fwrite(data.data(), 1, data.size(), stdout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    line += '\n';
    return line;
}

ordered_json moments_object(const MomentState& s) {
    ordered_json m;
    for (int i = 0; i < monodyn::kNumMoments; ++i)
        m[monodyn::io::kMomentColumns[static_cast<std::size_t>(i)]] = s.moments[i];
    return m;
}

ordered_json mean_object(const MomentState& s) {
    constexpr std::array<const char*, 6> names = {"x", "y", "z", "px", "py", "pz"};
    ordered_json m;
    for (int i = 0; i < monodyn::kNumVars; ++i) m[names[static_cast<std::size_t>(i)]] = s.mean[i];
    return m;
}

int run_stationary(const RunConfig& cfg, OutputFormat format, const std::string& out_path) {
    if (!cfg.initial_state)
        throw ConfigError("stationary requires an initial_state section (the mean values)");
    const MomentState st = monodyn::saturate(cfg.initial_state->mean, cfg.params);
    const double res = monodyn::residual(st, cfg.params);

    std::string data;
    if (format == OutputFormat::csv) {
        std::vector<std::string> header, row;
        for (const char* c : monodyn::io::kMeanColumns) header.emplace_back(c);
        for (const char* c : monodyn::io::kMomentColumns) header.emplace_back(c);
        header.emplace_back("residual");
        for (double v : st.mean) row.push_back(monodyn::io::format_double(v));
        for (double v : st.moments) row.push_back(monodyn::io::format_double(v));
        row.push_back(monodyn::io::format_double(res));
        data = csv_row(header) + csv_row(row);
    } else {
        ordered_json doc;
        doc["mean"] = mean_object(st);
        doc["moments"] = moments_object(st);
        doc["residual"] = res;
        data = doc.dump() + "\n";
    }
    write_output(out_path, data);
    return 0;
}

std::string trajectory_csv(const monodyn::Trajectory& traj, long stride) {
    std::vector<std::string> header;
    header.emplace_back("t");
    for (const char* c : monodyn::io::kMeanColumns) header.emplace_back(c);
    for (const char* c : monodyn::io::kMomentColumns) header.emplace_back(c);
    header.emplace_back("energy");
    header.emplace_back("zpz_uncertainty");
    header.emplace_back("pxpy_uncertainty");
    std::string data = csv_row(header);

    const std::size_t last = traj.size() - 1;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (i % static_cast<std::size_t>(stride) != 0 && i != last) continue;
        std::vector<std::string> row;
        row.push_back(monodyn::io::format_double(traj.times[i]));
        for (double v : traj.states[i].mean) row.push_back(monodyn::io::format_double(v));
        for (double v : traj.states[i].moments) row.push_back(monodyn::io::format_double(v));
        row.push_back(monodyn::io::format_double(traj.monitors[i].energy));
        row.push_back(monodyn::io::format_double(traj.monitors[i].zpz_uncertainty));
        row.push_back(monodyn::io::format_double(traj.monitors[i].pxpy_uncertainty));
        data += csv_row(row);
    }
    return data;
}

ordered_json trajectory_json(const monodyn::Trajectory& traj, long stride) {
    ordered_json doc;
    ordered_json columns = ordered_json::array();
    columns.push_back("t");
    for (const char* c : monodyn::io::kMeanColumns) columns.push_back(c);
    for (const char* c : monodyn::io::kMomentColumns) columns.push_back(c);
    columns.push_back("energy");
    columns.push_back("zpz_uncertainty");
    columns.push_back("pxpy_uncertainty");
    doc["columns"] = columns;

    ordered_json rows = ordered_json::array();
    const std::size_t last = traj.size() - 1;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (i % static_cast<std::size_t>(stride) != 0 && i != last) continue;
        ordered_json row = ordered_json::array();
        row.push_back(traj.times[i]);
        for (double v : traj.states[i].mean) row.push_back(v);
        for (double v : traj.states[i].moments) row.push_back(v);
        row.push_back(traj.monitors[i].energy);
        row.push_back(traj.monitors[i].zpz_uncertainty);
        row.push_back(traj.monitors[i].pxpy_uncertainty);
        rows.push_back(row);
    }
    doc["rows"] = rows;
    return doc;
}

int run_evolve(const RunConfig& cfg, OutputFormat format, const std::string& out_path) {
    if (!cfg.initial_state) throw ConfigError("evolve requires an initial_state section");
    if (!cfg.integrator) throw ConfigError("evolve requires an integrator section");
    const MomentState initial = cfg.initial_state->build(cfg.params);
    const long stride = cfg.output.stride;

    try {
        const monodyn::Trajectory traj = monodyn::evolve(initial, cfg.params, *cfg.integrator);
        if (format == OutputFormat::csv) {
            write_output(out_path, trajectory_csv(traj, stride));
        } else {
            write_output(out_path, trajectory_json(traj, stride).dump() + "\n");
        }
        return 0;
    } catch (const monodyn::IntegrationError& e) {
        // flush whatever was integrated, marked as aborted
        const double t_last = e.partial().times.back();
        if (format == OutputFormat::csv) {
            std::string data = trajectory_csv(e.partial(), stride);
            data += "# ABORTED t=" + monodyn::io::format_double(t_last) + "\n";
            write_output(out_path, data);
        } else {
            ordered_json doc = trajectory_json(e.partial(), stride);
            doc["aborted_t"] = t_last;
            write_output(out_path, doc.dump() + "\n");
        }
        std::cerr << "error: " << e.what() << " (t=" << monodyn::io::format_double(t_last)
                  << ")\n";
        return 2;
    }
}

ordered_json veff_report_json(const monodyn::VeffReport& report) {
    ordered_json r;
    r["mode"] = monodyn::to_string(report.mode);
    r["minimum_z"] = report.minimum.z_star;
    r["minimum_V"] = report.minimum.v_star;
    if (report.kink) {
        r["kink"] = ordered_json{{"location", report.kink->location},
                                 {"derivative_jump", report.kink->derivative_jump}};
    }
    if (report.force_const) r["force_const"] = *report.force_const;
    if (report.shift_delta_z) r["shift_delta_z"] = *report.shift_delta_z;
    return r;
}

int run_veff(const RunConfig& cfg, OutputFormat format, const std::string& out_path, double z_min,
             double z_max, long n, SaturationMode mode) {
    if (!(z_min < z_max)) throw ConfigError("require --z-min < --z-max");
    if (n < 2) throw ConfigError("require --n >= 2");
    const auto scan = monodyn::veff_scan(cfg.params, mode, z_min, z_max, n);
    const auto report = monodyn::veff_report(cfg.params, mode);
    const ordered_json report_doc = veff_report_json(report);

    if (format == OutputFormat::csv) {
        std::string data = "z,veff\n";
        for (const auto& s : scan)
            data += monodyn::io::format_double(s.z) + "," + monodyn::io::format_double(s.v) + "\n";
        if (out_path.empty()) {
            data += "# report " + report_doc.dump() + "\n";
            write_output(out_path, data);
        } else {
            write_output(out_path, data);
            write_output(out_path + ".report.json", report_doc.dump() + "\n");
        }
    } else {
        ordered_json doc;
        ordered_json samples = ordered_json::array();
        for (const auto& s : scan) samples.push_back(ordered_json::array({s.z, s.v}));
        doc["samples"] = samples;
        doc["report"] = report_doc;
        write_output(out_path, doc.dump() + "\n");
    }
    return 0;
}

int run_oracle_check(const RunConfig& cfg, const std::string& out_path) {
    if (monodyn::is_linear(cfg.params.field))
        throw ConfigError(
            "oracle-check requires a constant field: the linear-field flow is bilinear and has "
            "no matrix propagator");
    if (!cfg.initial_state) throw ConfigError("oracle-check requires an initial_state section");
    if (!cfg.integrator) throw ConfigError("oracle-check requires an integrator section");

    const MomentState initial = cfg.initial_state->build(cfg.params);
    const auto system = monodyn::oracle::build_linear_system(cfg.params);
    const monodyn::Trajectory traj = monodyn::evolve(initial, cfg.params, *cfg.integrator);

    const monodyn::State27 y0 = monodyn::to_flat(initial);
    const std::size_t count = traj.size();
    const std::size_t step = count > 64 ? (count - 1) / 63 : 1;
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < count; i += step) indices.push_back(i);
    if (indices.back() != count - 1) indices.push_back(count - 1);

    const std::vector<double> x0(y0.begin(), y0.end());
    double max_rel = 0.0;
    for (const std::size_t k : indices) {
        const auto exact_mat = monodyn::oracle::matrix_exponential(system.a, traj.times[k]);
        const std::vector<double> exact = exact_mat.apply(x0);
        const monodyn::State27 got = monodyn::to_flat(traj.states[k]);
        double scale = 1.0, diff = 0.0;
        for (int c = 0; c < 27; ++c) {
            scale = std::max(scale, std::abs(exact[static_cast<std::size_t>(c)]));
            diff = std::max(diff, std::abs(got[c] - exact[static_cast<std::size_t>(c)]));
        }
        max_rel = std::max(max_rel, diff / scale);
    }
    const std::size_t samples = indices.size();

    constexpr double tolerance = 1e-8;
    std::string data;
    data += "samples=" + std::to_string(samples) + "\n";
    data += "max_rel_error=" + monodyn::io::format_double(max_rel) + "\n";
    data += "tolerance=" + monodyn::io::format_double(tolerance) + "\n";
    data += (max_rel < tolerance) ? "PASS\n" : "FAIL\n";
    write_output(out_path, data);
    return (max_rel < tolerance) ? 0 : 2;
}

int run_jacobiator(const RunConfig& cfg, const std::string& out_path) {
    write_output(out_path, monodyn::io::format_g17(monodyn::jacobiator(cfg.params)) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semiclassical moment dynamics of a charged particle in a magnetic "
                 "monopole density"};
    app.require_subcommand(1);

    std::string config_path, output_path, format_flag;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--output", output_path,
                        "output file (default: output.path from the config, else stdout)");
        sub->add_option("--format", format_flag, "override the output format")
            ->check(CLI::IsMember({"csv", "json"}));
    };

    auto* cmd_stationary = app.add_subcommand(
        "stationary", "solve the saturated stationary moments and report the residual");
    add_common(cmd_stationary);

    auto* cmd_evolve =
        app.add_subcommand("evolve", "integrate the coupled mean+moment equations of motion");
    add_common(cmd_evolve);

    auto* cmd_veff = app.add_subcommand("veff", "scan the quantum-corrected effective potential");
    add_common(cmd_veff);
    double z_min = -1.0, z_max = 1.0;
    long n_samples = 101;
    std::string mode_flag = "corrected";
    cmd_veff->add_option("--z-min", z_min, "scan start")->capture_default_str();
    cmd_veff->add_option("--z-max", z_max, "scan end")->capture_default_str();
    cmd_veff->add_option("--n", n_samples, "number of samples")->capture_default_str();
    cmd_veff->add_option("--mode", mode_flag, "potential variant")
        ->check(CLI::IsMember({"corrected", "original"}))
        ->capture_default_str();

    auto* cmd_oracle = app.add_subcommand(
        "oracle-check", "compare the integrator against the matrix-exponential propagator");
    add_common(cmd_oracle);

    auto* cmd_jac =
        app.add_subcommand("jacobiator", "print the associativity defect -e hbar^2 div B");
    add_common(cmd_jac);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        const RunConfig cfg = monodyn::load_run_config(config_path);
        const OutputFormat format =
            format_flag.empty()
                ? cfg.output.format
                : (format_flag == "json" ? OutputFormat::json : OutputFormat::csv);
        const std::string out_path = output_path.empty() ? cfg.output.path : output_path;

        if (cmd_stationary->parsed()) return run_stationary(cfg, format, out_path);
        if (cmd_evolve->parsed()) return run_evolve(cfg, format, out_path);
        if (cmd_veff->parsed()) {
            const SaturationMode mode = (mode_flag == "original") ? SaturationMode::original
                                                                  : SaturationMode::corrected;
            return run_veff(cfg, format, out_path, z_min, z_max, n_samples, mode);
        }
        if (cmd_oracle->parsed()) return run_oracle_check(cfg, out_path);
        if (cmd_jac->parsed()) return run_jacobiator(cfg, out_path);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const monodyn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
