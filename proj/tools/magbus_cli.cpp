// Command-line front end: frequency sweeps, phase maps, ringdowns,
// eigenfrequency scans, microstrip geometry, and resonator fitting.
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "magbus/config.hpp"
#include "magbus/dynamics.hpp"
#include "magbus/fit.hpp"
#include "magbus/io.hpp"
#include "magbus/phase.hpp"
#include "magbus/spectral.hpp"
#include "magbus/units.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numeric = 3;
constexpr int exit_io = 4;

struct SweepAxis {
    double start = 0.0;
    double stop = 0.0;
    std::size_t count = 1;

    std::vector<double> values() const {
        return magbus::linspace(start, stop, count);
    }
};

// "axis=start:stop:count" -> (axis, SweepAxis)
std::pair<std::string, SweepAxis> parse_sweep(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos)
        throw magbus::ConfigError("--sweep expects axis=start:stop:count");
    SweepAxis ax;
    const std::string rest = text.substr(eq + 1);
    const auto c1 = rest.find(':');
    const auto c2 = rest.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw magbus::ConfigError("--sweep expects axis=start:stop:count");
    try {
        ax.start = std::stod(rest.substr(0, c1));
        ax.stop = std::stod(rest.substr(c1 + 1, c2 - c1 - 1));
        const long long cnt = std::stoll(rest.substr(c2 + 1));
        if (cnt < 1) throw magbus::ConfigError("--sweep count must be >= 1");
        ax.count = static_cast<std::size_t>(cnt);
    } catch (const magbus::ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw magbus::ConfigError("--sweep: cannot parse '" + text + "'");
    }
    if (ax.start > ax.stop)
        throw magbus::ConfigError("--sweep: start must be <= stop");
    return {text.substr(0, eq), ax};
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> sweeps;
    std::string frame = "rot";
    double dt_ps = 10.0;
    double db_min = -30.0;
    double db_max = 0.0;
    unsigned jobs = 1;

    std::map<std::string, SweepAxis> parsed_sweeps() const {
        std::map<std::string, SweepAxis> m;
        for (const auto& s : sweeps) m.insert(parse_sweep(s));
        return m;
    }
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_config = true) {
    auto* c = cmd->add_option("--config", o.config_path, "config JSON path");
    if (needs_config) c->required();
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--sweep", o.sweeps,
                    "sweep axis as axis=start:stop:count (repeatable)");
    cmd->add_option("--frame", o.frame, "integration frame: lab|rot");
    cmd->add_option("--dt-ps", o.dt_ps, "integrator step in ps");
    cmd->add_option("--db-min", o.db_min, "heatmap window lower bound, dB");
    cmd->add_option("--db-max", o.db_max, "heatmap window upper bound, dB");
    cmd->add_option("--jobs", o.jobs, "parallelism hint");
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw std::runtime_error("cannot write output directory " + dir);
}

json manifest_base(const std::string& command, const CommonOpts& o,
                   const magbus::SystemConfig* cfg) {
    json m;
    m["command"] = command;
    m["out_dir"] = o.out_dir;
    m["jobs"] = o.jobs;
    if (cfg) m["config"] = magbus::config_to_json(*cfg);
    json axes = json::object();
    for (const auto& [name, ax] : o.parsed_sweeps())
        axes[name] = {{"start", ax.start}, {"stop", ax.stop}, {"count", ax.count}};
    m["sweeps"] = axes;
    return m;
}

SweepAxis require_axis(const std::map<std::string, SweepAxis>& axes,
                       const std::string& name, SweepAxis fallback) {
    const auto it = axes.find(name);
    return it == axes.end() ? fallback : it->second;
}

void emit_grid(const magbus::SpectrumGrid& grid, const CommonOpts& o,
               const std::string& stem) {
    magbus::write_grid_csv(grid, o.out_dir + "/" + stem + ".csv");
    std::vector<double> db(grid.values.size());
    for (std::size_t i = 0; i < grid.values.size(); ++i)
        db[i] = magbus::db_of(grid.values[i]);
    magbus::write_pgm16(db, grid.sweep.size(), grid.probe.size(), o.db_min,
                        o.db_max, o.out_dir + "/" + stem + ".pgm");
    json sidecar;
    sidecar["rows_axis"] = grid.axis_name;
    sidecar["rows"] = {{"start", grid.sweep.front()},
                       {"stop", grid.sweep.back()},
                       {"count", grid.sweep.size()}};
    sidecar["cols_axis"] = "probe_f_mhz";
    sidecar["cols"] = {{"start", magbus::radns_to_mhz(grid.probe.front())},
                       {"stop", magbus::radns_to_mhz(grid.probe.back())},
                       {"count", grid.probe.size()}};
    sidecar["db_window"] = {o.db_min, o.db_max};
    magbus::write_json_file(sidecar, o.out_dir + "/" + stem + "_axes.json");
}

int run_spectrum(const CommonOpts& o) {
    const magbus::SystemConfig cfg = magbus::load_config(o.config_path);
    const auto axes = o.parsed_sweeps();
    const double fc = magbus::radns_to_mhz(cfg.cavity.omega);
    const SweepAxis fm = require_axis(axes, "fm", {fc - 25.0, fc + 25.0, 201});
    const SweepAxis probe =
        require_axis(axes, "probe", {fc - 40.0, fc + 40.0, 201});

    std::vector<double> probe_omega;
    for (double f : probe.values())
        probe_omega.push_back(magbus::mhz_to_radns(f));
    auto config_at = [&cfg](double f_magnon_mhz) {
        magbus::SystemConfig c = cfg;
        c.magnon.omega = magbus::mhz_to_radns(f_magnon_mhz);
        return c;
    };
    const auto grid = magbus::sweep_spectrum(config_at, fm.values(), probe_omega,
                                             "f_magnon_mhz", o.jobs);
    ensure_out_dir(o.out_dir);
    emit_grid(grid, o, "spectrum");
    json m = manifest_base("spectrum", o, &cfg);
    m["heatmap_db_window"] = {o.db_min, o.db_max};
    magbus::write_json_file(m, o.out_dir + "/manifest.json");
    return 0;
}

int run_phasemap(const CommonOpts& o) {
    const json j = magbus::load_json_file(o.config_path);
    const magbus::SystemConfig base = magbus::config_from_json(j);
    magbus::validate(base);
    if (!j.contains("phase_model"))
        throw magbus::ConfigError("phasemap: config lacks a phase_model block");
    const magbus::PhaseModel model =
        magbus::phase_model_from_json(j.at("phase_model"));

    const auto axes = o.parsed_sweeps();
    const double fc = magbus::radns_to_mhz(base.cavity.omega);
    const SweepAxis phi = require_axis(axes, "phi", {0.0, 180.0, 181});
    const SweepAxis probe =
        require_axis(axes, "probe", {fc - 60.0, fc + 60.0, 241});

    std::vector<double> probe_omega;
    for (double f : probe.values())
        probe_omega.push_back(magbus::mhz_to_radns(f));
    auto config_at = [&](double phi_deg) {
        return magbus::build_config_at_phase(base, model, phi_deg);
    };
    const auto grid = magbus::sweep_spectrum(config_at, phi.values(),
                                             probe_omega, "phi_deg", o.jobs);
    ensure_out_dir(o.out_dir);
    emit_grid(grid, o, "phasemap");
    json m = manifest_base("phasemap", o, &base);
    m["phase_model"] = j.at("phase_model");
    magbus::write_json_file(m, o.out_dir + "/manifest.json");
    return 0;
}

int run_ringdown(const CommonOpts& o, double pulse_ns, double carrier_mhz,
                 double t_end_ns, double out_dt_ns) {
    const magbus::SystemConfig cfg = magbus::load_config(o.config_path);
    const auto axes = o.parsed_sweeps();
    const double fc = magbus::radns_to_mhz(cfg.cavity.omega);
    const SweepAxis fm = require_axis(axes, "fm", {fc - 25.0, fc + 25.0, 51});
    const magbus::Frame frame =
        o.frame == "lab" ? magbus::Frame::lab : magbus::Frame::rotating;
    if (o.frame != "lab" && o.frame != "rot")
        throw magbus::ConfigError("--frame must be lab or rot");

    magbus::PulseSpec pulse;
    pulse.t_start = 0.0;
    pulse.duration = pulse_ns;
    pulse.carrier_mhz = carrier_mhz > 0.0 ? carrier_mhz : fc;
    pulse.amplitude = 1.0;

    const std::vector<double> fm_values = fm.values();
    std::vector<std::vector<double>> db_rows(fm_values.size());
    std::vector<magbus::ComplexAmplitudeTrace> traces(fm_values.size());
    for (std::size_t i = 0; i < fm_values.size(); ++i) {
        magbus::SystemConfig c = cfg;
        c.magnon.omega = magbus::mhz_to_radns(fm_values[i]);
        traces[i] = magbus::integrate(c, pulse, t_end_ns, o.dt_ps * 1e-3, frame,
                                      out_dt_ns);
        db_rows[i] = magbus::to_db(traces[i], pulse.amplitude);
    }

    ensure_out_dir(o.out_dir);
    {
        std::ofstream out(o.out_dir + "/ringdown.csv", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write ringdown.csv");
        out << "# axis=f_magnon_mhz\n";
        out << "sweep_value,t_ns,aout_db\n";
        for (std::size_t i = 0; i < fm_values.size(); ++i)
            for (std::size_t k = 0; k < traces[i].size(); ++k)
                out << magbus::fmt_double(fm_values[i]) << ','
                    << magbus::fmt_double(traces[i].time[k]) << ','
                    << magbus::fmt_double(db_rows[i][k]) << '\n';
    }
    const std::size_t cols = traces.front().size();
    std::vector<double> flat;
    flat.reserve(fm_values.size() * cols);
    for (const auto& row : db_rows) flat.insert(flat.end(), row.begin(), row.end());
    magbus::write_pgm16(flat, fm_values.size(), cols, o.db_min, o.db_max,
                        o.out_dir + "/ringdown.pgm");
    json sidecar;
    sidecar["rows_axis"] = "f_magnon_mhz";
    sidecar["rows"] = {{"start", fm_values.front()},
                       {"stop", fm_values.back()},
                       {"count", fm_values.size()}};
    sidecar["cols_axis"] = "t_ns";
    sidecar["cols"] = {{"start", 0.0},
                       {"stop", traces.front().time.back()},
                       {"count", cols}};
    sidecar["db_window"] = {o.db_min, o.db_max};
    magbus::write_json_file(sidecar, o.out_dir + "/ringdown_axes.json");

    json m = manifest_base("ringdown", o, &cfg);
    m["pulse"] = {{"t_start_ns", pulse.t_start},
                  {"duration_ns", pulse.duration},
                  {"carrier_mhz", pulse.carrier_mhz},
                  {"amplitude", 1.0}};
    m["t_end_ns"] = t_end_ns;
    m["dt_ps"] = o.dt_ps;
    m["out_dt_ns"] = out_dt_ns;
    m["frame"] = o.frame;
    magbus::write_json_file(m, o.out_dir + "/manifest.json");
    return 0;
}

int run_eigen(const CommonOpts& o) {
    const magbus::SystemConfig cfg = magbus::load_config(o.config_path);
    const auto axes = o.parsed_sweeps();
    const double fc = magbus::radns_to_mhz(cfg.cavity.omega);
    const SweepAxis fm = require_axis(axes, "fm", {fc - 25.0, fc + 25.0, 201});

    ensure_out_dir(o.out_dir);
    std::ofstream out(o.out_dir + "/eigen.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write eigen.csv");
    out << "f_magnon_mhz,wplus_re_mhz,wplus_im_mhz,wminus_re_mhz,"
           "wminus_im_mhz,numeric_re_mhz,numeric_im_mhz\n";
    for (double f : fm.values()) {
        magbus::SystemConfig c = cfg;
        c.magnon.omega = magbus::mhz_to_radns(f);
        std::optional<magbus::HybridEigenpair> h;
        if (c.buses.size() == 1) h = magbus::hybrid_eigenfrequencies(c);
        const auto numeric = magbus::full_numeric_eigenvalues(c);
        for (const auto& ev : numeric) {
            out << magbus::fmt_double(f) << ',';
            if (h) {
                out << magbus::fmt_double(magbus::radns_to_mhz(h->omega_plus.real()))
                    << ','
                    << magbus::fmt_double(magbus::radns_to_mhz(h->omega_plus.imag()))
                    << ','
                    << magbus::fmt_double(magbus::radns_to_mhz(h->omega_minus.real()))
                    << ','
                    << magbus::fmt_double(
                           magbus::radns_to_mhz(h->omega_minus.imag()))
                    << ',';
            } else {
                out << ",,,,";
            }
            out << magbus::fmt_double(magbus::radns_to_mhz(ev.real())) << ','
                << magbus::fmt_double(magbus::radns_to_mhz(ev.imag())) << '\n';
        }
    }
    magbus::write_json_file(manifest_base("eigen", o, &cfg),
                            o.out_dir + "/manifest.json");
    return 0;
}

int run_microstrip(const CommonOpts& o, double f_mhz) {
    const json j = magbus::load_json_file(o.config_path);
    if (!j.contains("microstrip"))
        throw magbus::ConfigError("microstrip: config lacks a microstrip block");
    const magbus::MicrostripGeometry geom =
        magbus::microstrip_from_json(j.at("microstrip"));
    const magbus::MicrostripResult r = magbus::microstrip(geom, f_mhz);
    std::printf("eps_eff = %.4f\n", r.eps_eff);
    std::printf("w_eff = %.4f mm\n", r.w_eff);
    std::printf("lambda_g = %.4f mm\n", r.lambda_g);
    std::printf("lambda_g/2 = %.4f mm\n", r.node_spacing);
    std::printf("lambda_g/4 = %.4f mm\n", r.node_antinode_spacing);
    ensure_out_dir(o.out_dir);
    json out = {{"f_mhz", f_mhz},
                {"eps_eff", r.eps_eff},
                {"w_eff_mm", r.w_eff},
                {"lambda_g_mm", r.lambda_g},
                {"node_spacing_mm", r.node_spacing},
                {"node_antinode_spacing_mm", r.node_antinode_spacing}};
    magbus::write_json_file(out, o.out_dir + "/microstrip.json");
    json m = manifest_base("microstrip", o, nullptr);
    m["geometry"] = j.at("microstrip");
    m["f_mhz"] = f_mhz;
    magbus::write_json_file(m, o.out_dir + "/manifest.json");
    return 0;
}

int run_fit(const CommonOpts& o, const std::string& input) {
    const magbus::S11Trace trace = magbus::load_trace(input);
    const magbus::FitResult r = magbus::extract_q(trace);
    std::printf("f0 = %.4f MHz\n", r.f0_mhz);
    std::printf("Q_L = %.4f  Q_i = %.4f  Q_c = %.4f\n", r.q_loaded,
                r.q_internal, r.q_coupling);
    std::printf("gamma_t/2pi = %.4f MHz  gamma_ext/2pi = %.4f MHz\n",
                r.f0_mhz / r.q_loaded, r.f0_mhz / r.q_coupling);
    ensure_out_dir(o.out_dir);
    magbus::write_json_file(magbus::fit_result_to_json(r),
                            o.out_dir + "/fit.json");
    json m = manifest_base("fit", o, nullptr);
    m["input"] = input;
    magbus::write_json_file(m, o.out_dir + "/manifest.json");
    return 0;
}

bool is_io_error(const std::exception& e) {
    const std::string msg = e.what();
    return msg.find("cannot open") != std::string::npos ||
           msg.find("cannot write") != std::string::npos ||
           msg.find("parse error at line") != std::string::npos;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupled cavity-magnon simulation engine"};
    app.require_subcommand(1);

    CommonOpts o;
    double pulse_ns = 16.0;
    double carrier_mhz = 0.0;
    double t_end_ns = 500.0;
    double out_dt_ns = 1.63;
    double ms_f_mhz = 5000.0;
    std::string fit_input;

    auto* c_spectrum = app.add_subcommand("spectrum", "S11 map over magnon sweep");
    add_common(c_spectrum, o);
    auto* c_phasemap = app.add_subcommand("phasemap", "S11 map over phase sweep");
    add_common(c_phasemap, o);
    auto* c_ringdown = app.add_subcommand("ringdown", "pulsed time-domain sweep");
    add_common(c_ringdown, o);
    c_ringdown->add_option("--pulse-ns", pulse_ns, "pulse duration, ns");
    c_ringdown->add_option("--carrier-mhz", carrier_mhz,
                           "pulse carrier (default: cavity frequency)");
    c_ringdown->add_option("--t-end-ns", t_end_ns, "trace length, ns");
    c_ringdown->add_option("--out-dt-ns", out_dt_ns, "output sample interval");
    auto* c_eigen = app.add_subcommand("eigen", "eigenfrequency scan");
    add_common(c_eigen, o);
    auto* c_microstrip =
        app.add_subcommand("microstrip", "Hammerstad-Jensen geometry");
    add_common(c_microstrip, o);
    c_microstrip->add_option("--f-mhz", ms_f_mhz, "operating frequency, MHz");
    auto* c_fit = app.add_subcommand("fit", "circle-fit an S11 trace");
    add_common(c_fit, o, /*needs_config=*/false);
    c_fit->add_option("--input", fit_input, "input trace CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_spectrum->parsed()) return run_spectrum(o);
        if (c_phasemap->parsed()) return run_phasemap(o);
        if (c_ringdown->parsed())
            return run_ringdown(o, pulse_ns, carrier_mhz, t_end_ns, out_dt_ns);
        if (c_eigen->parsed()) return run_eigen(o);
        if (c_microstrip->parsed()) return run_microstrip(o, ms_f_mhz);
        if (c_fit->parsed()) return run_fit(o, fit_input);
    } catch (const magbus::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        if (is_io_error(e)) {
            std::cerr << "io error: " << e.what() << '\n';
            return exit_io;
        }
        std::cerr << "numerical error: " << e.what() << '\n';
        return exit_numeric;
    }
    return 0;
}
