#pragma once

// Phase-shifter and geometry mapping: linear phase -> bus-frequency laws,
// sinusoidal phase -> magnon-bus coupling with a spatial offset, and the
// Hammerstad-Jensen microstrip formulas for effective permittivity and
// guided wavelength.
//
// The factor-of-two phase doubling of the reflection path is already
// absorbed in the empirical linear laws, which are expressed in
// control-setting degrees; no additional doubling is applied here.

#include <cmath>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "magbus/config.hpp"
#include "magbus/units.hpp"

namespace magbus {

struct PhaseLaw {
    double slope_mhz_per_deg = 0.0;
    double intercept_mhz = 0.0;

    double f_mhz(double phi_deg) const noexcept {
        return slope_mhz_per_deg * phi_deg + intercept_mhz;
    }
};

struct PhaseModel {
    PhaseLaw bus1;
    PhaseLaw bus2;
    double g_mt_max = 0.0;  // rad/ns
    double phi0_deg = 0.0;  // spatial offset of the YIG position
};

struct MicrostripGeometry {
    double eps_r = 1.0;  // relative permittivity
    double h = 0.0;      // substrate height, mm
    double w = 0.0;      // trace width, mm
    double t = 0.0;      // conductor thickness, mm
};

struct MicrostripResult {
    double eps_eff;
    double w_eff;                 // mm
    double lambda_g;              // mm
    double node_spacing;          // lambda_g / 2
    double node_antinode_spacing; // lambda_g / 4
};

/// Bus-mode angular frequencies at phase setting phi (degrees).
inline std::pair<double, double> omega_t_of_phase(const PhaseModel& model,
                                                  double phi_deg) {
    return {mhz_to_radns(model.bus1.f_mhz(phi_deg)),
            mhz_to_radns(model.bus2.f_mhz(phi_deg))};
}

/// g_mt(phi) = g_mt_max |sin(phi + phi0)|, arguments in degrees.
inline double g_mt_of_phase(const PhaseModel& model, double phi_deg) {
    return model.g_mt_max *
           std::abs(std::sin(deg_to_rad(phi_deg + model.phi0_deg)));
}

/// Spatial phase offset of a YIG sphere x mm from an antinode: 360 x/lambda_g.
inline double spatial_phase_offset(double x_mm, double lambda_g_mm) {
    if (lambda_g_mm <= 0.0)
        throw std::invalid_argument("spatial_phase_offset: lambda_g must be > 0");
    return 360.0 * x_mm / lambda_g_mm;
}

/// Hammerstad-Jensen effective width and permittivity, guided wavelength and
/// standing-wave spacings at linear frequency f (MHz). The thickness
/// correction diverges logarithmically as t -> 0, so t is clamped to 1e-9 mm.
inline MicrostripResult microstrip(const MicrostripGeometry& g, double f_mhz) {
    if (g.eps_r < 1.0 || g.h <= 0.0 || g.w <= 0.0 || g.t < 0.0)
        throw std::invalid_argument("microstrip: invalid geometry");
    if (f_mhz <= 0.0) throw std::invalid_argument("microstrip: f must be > 0");
    const double t = std::max(g.t, 1e-9);
    MicrostripResult r;
    if (g.w / g.h <= 1.0)
        r.w_eff = g.w + t / std::numbers::pi *
                            (1.0 + std::log(4.0 * std::numbers::pi * g.w / t));
    else
        r.w_eff = g.w + t / std::numbers::pi * (1.0 + std::log(2.0 * g.h / t));
    r.eps_eff = 0.5 * (g.eps_r + 1.0) +
                0.5 * (g.eps_r - 1.0) /
                    std::sqrt(1.0 + 12.0 * g.h / r.w_eff);
    r.lambda_g = c_mm_per_ns / (f_mhz * 1e-3 * std::sqrt(r.eps_eff));
    r.node_spacing = 0.5 * r.lambda_g;
    r.node_antinode_spacing = 0.25 * r.lambda_g;
    return r;
}

/// Resolves a two-bus template at phase setting phi: bus frequencies from the
/// linear laws, g_mt from the sinusoidal law. When bus 2 is detuned from the
/// cavity by more than drop_threshold * gamma_t2 the emitted config keeps
/// only bus 1 (the single-bus model is valid there).
inline SystemConfig build_config_at_phase(const SystemConfig& base,
                                          const PhaseModel& model,
                                          double phi_deg,
                                          double drop_threshold = 100.0) {
    if (base.buses.size() != 2)
        throw std::invalid_argument(
            "build_config_at_phase: template must carry 2 bus placeholders");
    SystemConfig cfg = base;
    const auto [w1, w2] = omega_t_of_phase(model, phi_deg);
    cfg.buses[0].omega = w1;
    cfg.buses[1].omega = w2;
    cfg.g_mt = g_mt_of_phase(model, phi_deg);
    const double detuning2 = std::abs(cfg.buses[1].omega - cfg.cavity.omega);
    if (detuning2 > drop_threshold * cfg.buses[1].gamma_total())
        cfg.buses.pop_back();
    return validate(cfg), cfg;
}

// JSON block: {bus1:{slope_mhz_per_deg,intercept_mhz}, bus2:{...},
//              g_mt_max_mhz, phi0_deg}
inline PhaseModel phase_model_from_json(const nlohmann::json& j) {
    PhaseModel m;
    auto law = [](const nlohmann::json& l) {
        return PhaseLaw{l.at("slope_mhz_per_deg").get<double>(),
                        l.at("intercept_mhz").get<double>()};
    };
    m.bus1 = law(j.at("bus1"));
    m.bus2 = law(j.at("bus2"));
    m.g_mt_max = mhz_to_radns(j.at("g_mt_max_mhz").get<double>());
    m.phi0_deg = j.value("phi0_deg", 0.0);
    return m;
}

// JSON block: {eps_r, h_mm, w_mm, t_mm}
inline MicrostripGeometry microstrip_from_json(const nlohmann::json& j) {
    MicrostripGeometry g;
    g.eps_r = j.at("eps_r").get<double>();
    g.h = j.at("h_mm").get<double>();
    g.w = j.at("w_mm").get<double>();
    g.t = j.at("t_mm").get<double>();
    return g;
}

}  // namespace magbus
