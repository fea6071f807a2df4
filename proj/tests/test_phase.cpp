#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "helpers.hpp"
#include "magbus/phase.hpp"

using namespace magbus;
using Catch::Approx;

namespace {

PhaseModel device_model() {
    PhaseModel m;
    m.bus1 = {0.319, 4981.6};
    m.bus2 = {0.308, 4928.9};
    m.g_mt_max = mhz_to_radns(10.0);
    m.phi0_deg = 0.0;
    return m;
}

MicrostripGeometry device_board() { return {4.1, 0.874, 1.943, 0.036}; }

}  // namespace

TEST_CASE("phase laws: intercepts and slope") {
    const PhaseModel m = device_model();
    CHECK(m.bus1.f_mhz(0.0) == Approx(4981.6));
    CHECK(m.bus2.f_mhz(0.0) == Approx(4928.9));
    CHECK(m.bus1.f_mhz(100.0) == Approx(5013.5));
    const auto [w1, w2] = omega_t_of_phase(m, 100.0);
    CHECK(radns_to_mhz(w1) == Approx(5013.5).epsilon(1e-12));
    CHECK(radns_to_mhz(w2) == Approx(4959.7).epsilon(1e-12));
}

TEST_CASE("phase laws are affine: second differences vanish") {
    const PhaseModel m = device_model();
    for (double phi = -180.0; phi <= 180.0; phi += 15.0) {
        const double d2 = m.bus1.f_mhz(phi + 10.0) - 2.0 * m.bus1.f_mhz(phi) +
                          m.bus1.f_mhz(phi - 10.0);
        REQUIRE(std::abs(d2) < 1e-9);
    }
}

TEST_CASE("phase setting that parks bus 1 on the cavity") {
    const PhaseModel m = device_model();
    const double phi = (5012.0 - m.bus1.intercept_mhz) / m.bus1.slope_mhz_per_deg;
    CHECK(phi == Approx(95.2978).margin(1e-3));
    CHECK(m.bus1.f_mhz(phi) == Approx(5012.0).margin(1e-9));
}

TEST_CASE("g_mt_of_phase: extrema and symmetry") {
    const PhaseModel m = device_model();
    CHECK(g_mt_of_phase(m, 90.0) == Approx(m.g_mt_max).epsilon(1e-12));
    CHECK(g_mt_of_phase(m, 180.0) == Approx(0.0).margin(1e-12));
    CHECK(g_mt_of_phase(m, 0.0) == Approx(0.0).margin(1e-15));
    for (double phi = 0.0; phi <= 360.0; phi += 7.0) {
        // |sin| gives a 180-degree period and even symmetry about zero
        REQUIRE(g_mt_of_phase(m, phi + 180.0) ==
                Approx(g_mt_of_phase(m, phi)).margin(1e-12 * m.g_mt_max));
        REQUIRE(g_mt_of_phase(m, -phi) ==
                Approx(g_mt_of_phase(m, phi)).margin(1e-12 * m.g_mt_max));
    }
}

TEST_CASE("g_mt_of_phase: phi0 shifts the argument") {
    PhaseModel m = device_model();
    m.phi0_deg = 33.0;
    const PhaseModel base = device_model();
    for (double phi = 0.0; phi <= 360.0; phi += 11.0)
        REQUIRE(g_mt_of_phase(m, phi) ==
                Approx(g_mt_of_phase(base, phi + 33.0)).margin(1e-15));
}

TEST_CASE("spatial_phase_offset") {
    CHECK(spatial_phase_offset(0.0, 33.69) == 0.0);
    CHECK(spatial_phase_offset(33.69 / 4.0, 33.69) == Approx(90.0));
    CHECK(spatial_phase_offset(8.42, 33.69) == Approx(90.0).margin(0.1));
    CHECK_THROWS_AS(spatial_phase_offset(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("microstrip reproduces the device board") {
    const auto r = microstrip(device_board(), 5012.0);
    CHECK(r.eps_eff == Approx(3.17).margin(0.02));
    CHECK(r.lambda_g == Approx(33.69).margin(0.1));
    CHECK(r.node_spacing == Approx(0.5 * r.lambda_g));
    CHECK(r.node_antinode_spacing == Approx(0.25 * r.lambda_g));
    CHECK(r.w_eff > device_board().w);  // thickness widens the trace
}

TEST_CASE("microstrip limits") {
    // vacuum: eps_eff = 1 and lambda_g = c/f regardless of geometry branch
    MicrostripGeometry vac{1.0, 0.874, 1.943, 0.0};
    const auto rv = microstrip(vac, 5000.0);
    CHECK(rv.eps_eff == Approx(1.0).epsilon(1e-12));
    CHECK(rv.lambda_g == Approx(c_mm_per_ns / 5.0).epsilon(1e-12));

    // t -> 0 keeps w_eff -> w (the log divergence is clamped)
    MicrostripGeometry thin = device_board();
    thin.t = 0.0;
    const auto rt = microstrip(thin, 5000.0);
    CHECK(rt.w_eff == Approx(thin.w).margin(1e-6));

    // narrow trace exercises the w/h <= 1 branch
    MicrostripGeometry narrow{4.1, 0.874, 0.5, 0.036};
    const auto rn = microstrip(narrow, 5000.0);
    CHECK(rn.eps_eff > 1.0);
    CHECK(rn.eps_eff < narrow.eps_r);

    CHECK_THROWS_AS(microstrip({0.5, 1.0, 1.0, 0.0}, 5000.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(microstrip(device_board(), 0.0), std::invalid_argument);
}

TEST_CASE("guided wavelength varies weakly with substrate permittivity") {
    MicrostripGeometry g = device_board();
    g.eps_r = 3.9;
    const double lo = microstrip(g, 5012.0).lambda_g;
    g.eps_r = 4.4;
    const double hi = microstrip(g, 5012.0).lambda_g;
    CHECK(std::abs(lo - hi) / lo < 0.06);
}

TEST_CASE("build_config_at_phase resolves the template") {
    const SystemConfig base = testing::load_preset("regime1");
    const PhaseModel m = device_model();

    SECTION("bus1 on the cavity, both buses kept") {
        const double phi = 95.2978;
        const auto cfg = build_config_at_phase(base, m, phi, 1e6);
        REQUIRE(cfg.buses.size() == 2);
        CHECK(radns_to_mhz(cfg.buses[0].omega) == Approx(5012.0).margin(0.01));
        CHECK(cfg.g_mt == Approx(g_mt_of_phase(m, phi)));
        CHECK_NOTHROW(validate(cfg));
    }

    SECTION("far-detuned bus 2 is dropped at the default threshold") {
        // bus 2 sits ~54 MHz below the cavity; with a tight threshold the
        // single-bus reduction kicks in
        const auto cfg = build_config_at_phase(base, m, 95.2978, 0.5);
        REQUIRE(cfg.buses.size() == 1);
        CHECK(radns_to_mhz(cfg.buses[0].omega) == Approx(5012.0).margin(0.01));
    }

    SECTION("single-bus template rejected") {
        SystemConfig one = base;
        one.buses.pop_back();
        CHECK_THROWS_AS(build_config_at_phase(one, m, 90.0),
                        std::invalid_argument);
    }
}

TEST_CASE("phase model round trip through JSON") {
    const nlohmann::json j = {
        {"bus1", {{"slope_mhz_per_deg", 0.319}, {"intercept_mhz", 4981.6}}},
        {"bus2", {{"slope_mhz_per_deg", 0.308}, {"intercept_mhz", 4928.9}}},
        {"g_mt_max_mhz", 10.0},
        {"phi0_deg", 12.5}};
    const PhaseModel m = phase_model_from_json(j);
    CHECK(m.bus1.slope_mhz_per_deg == 0.319);
    CHECK(m.bus2.intercept_mhz == 4928.9);
    CHECK(radns_to_mhz(m.g_mt_max) == Approx(10.0));
    CHECK(m.phi0_deg == 12.5);

    const nlohmann::json board = {
        {"eps_r", 4.1}, {"h_mm", 0.874}, {"w_mm", 1.943}, {"t_mm", 0.036}};
    const MicrostripGeometry g = microstrip_from_json(board);
    CHECK(g.eps_r == 4.1);
    CHECK(g.t == 0.036);
}
