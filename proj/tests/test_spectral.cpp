#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "helpers.hpp"
#include "magbus/spectral.hpp"

using namespace magbus;
using Catch::Approx;
using testing::device_config;
using testing::random_config;

namespace {
double rel(cplx got, cplx want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}
}  // namespace

TEST_CASE("steady_state: decoupled bus is a driven Lorentzian") {
    SystemConfig cfg = device_config();
    cfg.g_ct = cfg.g_mt = 0.0;
    const auto& bus = cfg.buses[0];
    const cplx a_in = 2.0;
    const auto s = steady_state(cfg, bus.omega, a_in);  // Delta_t = 0
    const cplx expected = std::sqrt(bus.gamma_ext) * a_in / (0.5 * bus.gamma_total());
    CHECK(rel(s.t1, expected) < 1e-12);
    CHECK(std::abs(s.a) == 0.0);
    CHECK(std::abs(s.m) == 0.0);
}

TEST_CASE("steady_state: reference device parameters give finite amplitudes") {
    const SystemConfig cfg = device_config();
    const auto s = steady_state(cfg, cfg.cavity.omega, cplx(1.0, 0.0));
    CHECK(std::isfinite(std::abs(s.a)));
    CHECK(std::abs(s.a) > 0.0);
    CHECK(s.residual < 1e-10);
}

TEST_CASE("steady_state: far-detuned second bus decouples") {
    SystemConfig cfg = device_config();
    BusParams b2 = cfg.buses[0];
    b2.omega += 1e4 * b2.gamma_total();
    cfg.buses.push_back(b2);
    const auto s = steady_state(cfg, cfg.cavity.omega, cplx(1.0, 0.0));
    REQUIRE(s.t2.has_value());
    CHECK(std::abs(*s.t2) < 1e-3 * std::abs(s.t1));
}

TEST_CASE("s11 far from every resonance approaches unity") {
    const SystemConfig cfg = device_config();
    const double omega = cfg.cavity.omega + 1e6 * cfg.buses[0].gamma_total();
    CHECK(std::abs(s11(cfg, omega) - 1.0) < 1e-4);
}

TEST_CASE("s11 bare bus on resonance equals 1 - 2*gamma_ext/gamma_t") {
    SystemConfig cfg = device_config();
    cfg.g_ct = cfg.g_mt = 0.0;
    cfg.buses[0].gamma_ext = mhz_to_radns(41.7);
    cfg.buses[0].gamma_int = mhz_to_radns(50.8 - 41.7);
    const cplx v = s11(cfg, cfg.buses[0].omega);
    CHECK(v.real() == Approx(1.0 - 2.0 * 41.7 / 50.8).epsilon(1e-9));
    CHECK(std::abs(v.imag()) < 1e-12);
    CHECK(v.real() == Approx(-0.642).margin(1e-3));
}

TEST_CASE("s11 is independent of the magnon frequency when g_mt = 0") {
    SystemConfig cfg = device_config();
    cfg.g_mt = 0.0;
    const double omega = cfg.cavity.omega + 0.1;
    const cplx ref = s11(cfg, omega);
    for (double shift : {-2.0, -0.5, 0.3, 1.7}) {
        cfg.magnon.omega = device_config().magnon.omega + shift;
        CHECK(std::abs(s11(cfg, omega) - ref) < 1e-12);
    }
}

TEST_CASE("reduced_two_mode matches the full solve exactly") {
    std::mt19937 rng(123);
    std::uniform_real_distribution<double> probe(24.0, 36.0);
    for (int i = 0; i < 1000; ++i) {
        const SystemConfig cfg = random_config(rng, 1);
        const double omega = probe(rng);
        const cplx a_in(0.7, -0.4);
        const auto s = steady_state(cfg, omega, a_in);
        const auto [a, m] = reduced_two_mode(cfg, omega, a_in);
        REQUIRE(rel(a, s.a) < 1e-10);
        REQUIRE(rel(m, s.m) < 1e-10);
    }
}

TEST_CASE("reduced_two_mode decoupled limits") {
    SystemConfig cfg = device_config();
    cfg.g_mt = 0.0;
    auto [a1, m1] = reduced_two_mode(cfg, cfg.cavity.omega + 0.05, 1.0);
    CHECK(std::abs(m1) == 0.0);
    CHECK(std::abs(a1) > 0.0);

    cfg = device_config();
    cfg.g_ct = 0.0;
    auto [a2, m2] = reduced_two_mode(cfg, cfg.cavity.omega + 0.05, 1.0);
    CHECK(std::abs(a2) == 0.0);
    CHECK(std::abs(m2) > 0.0);
}

TEST_CASE("effective_coupling on bus resonance is purely dissipative") {
    const SystemConfig cfg = device_config();
    const auto ec = effective_coupling(cfg, cfg.buses[0].omega);
    CHECK(ec.g_coh == 0.0);
    const double gt = cfg.buses[0].gamma_total();
    CHECK(ec.gamma_diss == Approx(2.0 * cfg.g_ct * cfg.g_mt / gt).epsilon(1e-15));
    CHECK(ec.g_eff == cplx(ec.g_coh, ec.gamma_diss));  // identity by construction
}

TEST_CASE("effective_coupling reproduces Gamma_diss/2pi = 1.93 MHz") {
    SystemConfig cfg = device_config();
    cfg.buses[0].gamma_int = mhz_to_radns(50.8 - 41.7);
    const auto ec = effective_coupling(cfg, cfg.buses[0].omega);
    CHECK(radns_to_mhz(ec.gamma_diss) == Approx(1.93).margin(0.01));
}

TEST_CASE("effective_coupling far-detuned coherent limit") {
    const SystemConfig cfg = device_config();
    const double gt = cfg.buses[0].gamma_total();
    // relative deviation from g_ct g_mt / Delta_t scales as gamma_t/(2 Delta_t)
    const double omega3 = cfg.buses[0].omega - 1e3 * gt;
    const auto ec3 = effective_coupling(cfg, omega3);
    const cplx coherent3 = cfg.g_ct * cfg.g_mt / (cfg.buses[0].omega - omega3);
    CHECK(rel(ec3.g_eff, coherent3) == Approx(0.5e-3).epsilon(0.01));
    const double omega5 = cfg.buses[0].omega - 1e5 * gt;
    const auto ec5 = effective_coupling(cfg, omega5);
    const cplx coherent5 = cfg.g_ct * cfg.g_mt / (cfg.buses[0].omega - omega5);
    CHECK(rel(ec5.g_eff, coherent5) < 1e-5);
}

TEST_CASE("hybrid_eigenfrequencies uncoupled limit") {
    SystemConfig cfg = device_config();
    cfg.magnon.omega = cfg.cavity.omega - 0.3;  // Delta > 0
    cfg.g_mt = 0.0;                             // Gamma = 0
    const auto h = hybrid_eigenfrequencies(cfg);
    CHECK(h.Gamma == 0.0);
    CHECK(h.omega_plus.real() == Approx(cfg.cavity.omega).epsilon(1e-12));
    CHECK(h.omega_plus.imag() == Approx(-0.5 * h.gamma_c_prime).epsilon(1e-12));
    CHECK(h.omega_minus.real() == Approx(cfg.magnon.omega).epsilon(1e-12));
    CHECK(h.omega_minus.imag() == Approx(-0.5 * h.gamma_m_prime).epsilon(1e-12));
}

TEST_CASE("hybrid_eigenfrequencies symmetric level-attraction point") {
    SystemConfig cfg = device_config();
    cfg.magnon.omega = cfg.cavity.omega;  // Delta = 0
    cfg.magnon.gamma = cfg.cavity.gamma;
    cfg.g_mt = cfg.g_ct;  // dgamma = 0
    const auto h = hybrid_eigenfrequencies(cfg);
    CHECK(h.omega_plus.real() == Approx(h.omega_minus.real()).epsilon(1e-12));
    const double gbar = 0.25 * (h.gamma_c_prime + h.gamma_m_prime);
    CHECK(h.omega_plus.imag() == Approx(-gbar + h.Gamma).epsilon(1e-10));
    CHECK(h.omega_minus.imag() == Approx(-gbar - h.Gamma).epsilon(1e-10));
}

TEST_CASE("hybrid_eigenfrequencies exceptional point at Delta = 2 Gamma") {
    SystemConfig cfg = device_config();
    cfg.magnon.gamma = cfg.cavity.gamma;
    cfg.g_mt = cfg.g_ct;  // dgamma = 0
    const double gamma_cpl =
        2.0 * cfg.g_ct * cfg.g_mt / cfg.buses[0].gamma_total();
    cfg.magnon.omega = cfg.cavity.omega - 2.0 * gamma_cpl;
    const auto h = hybrid_eigenfrequencies(cfg);
    // Delta is reconstructed from omega_c - omega_m, so the coalescence is
    // exact only up to sqrt of the cancellation roundoff
    CHECK(std::abs(h.omega_plus - h.omega_minus) < 1e-5);
    CHECK(classify_regime(cfg) == CouplingRegime::exceptional_point);
}

TEST_CASE("trace identity of the hybrid pair") {
    std::mt19937 rng(5);
    for (int i = 0; i < 200; ++i) {
        const SystemConfig cfg = random_config(rng, 1);
        const auto h = hybrid_eigenfrequencies(cfg);
        const cplx sum = h.omega_plus + h.omega_minus;
        const cplx want(cfg.cavity.omega + cfg.magnon.omega,
                        -0.5 * (h.gamma_c_prime + h.gamma_m_prime));
        REQUIRE(std::abs(sum - want) < 1e-12 * std::abs(want));
    }
}

TEST_CASE("full_numeric_eigenvalues uncoupled") {
    SystemConfig cfg = device_config();
    cfg.g_ct = cfg.g_mt = 0.0;
    cfg.magnon.omega = cfg.cavity.omega - 1.0;
    const auto ev = full_numeric_eigenvalues(cfg);
    REQUIRE(ev.size() == 3);
    bool cavity_found = false, magnon_found = false, bus_found = false;
    for (const auto& v : ev) {
        if (std::abs(v - cplx(cfg.cavity.omega, -0.5 * cfg.cavity.gamma)) < 1e-10)
            cavity_found = true;
        if (std::abs(v - cplx(cfg.magnon.omega, -0.5 * cfg.magnon.gamma)) < 1e-10)
            magnon_found = true;
        if (std::abs(v - cplx(cfg.buses[0].omega,
                              -0.5 * cfg.buses[0].gamma_total())) < 1e-10)
            bus_found = true;
    }
    CHECK(cavity_found);
    CHECK(magnon_found);
    CHECK(bus_found);
}

TEST_CASE("full_numeric_eigenvalues approach the hybrid pair in the damped limit") {
    SystemConfig cfg = device_config();
    // keep gamma_t at least 20x every other rate so the reduction is accurate
    const double gt = cfg.buses[0].gamma_total();
    cfg.g_mt = gt / 25.0;
    cfg.g_ct = gt / 30.0;
    REQUIRE(gt >= 20.0 * std::max({cfg.g_ct, cfg.g_mt, cfg.cavity.gamma,
                                   cfg.magnon.gamma}));
    const auto h = hybrid_eigenfrequencies(cfg);
    const auto ev = full_numeric_eigenvalues(cfg);
    // the two slow eigenvalues are the ones closest to the hybrid pair
    double err_plus = 1e30, err_minus = 1e30;
    for (const auto& v : ev) {
        err_plus = std::min(err_plus, std::abs(v - h.omega_plus));
        err_minus = std::min(err_minus, std::abs(v - h.omega_minus));
    }
    CHECK(err_plus < h.Gamma / 10.0);
    CHECK(err_minus < h.Gamma / 10.0);
}

TEST_CASE("full_numeric_eigenvalues characteristic polynomial oracle") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const SystemConfig cfg = random_config(rng, 1);
        const auto ev = full_numeric_eigenvalues(cfg);
        // elementary symmetric polynomials from the eigenvalues
        const cplx e1 = ev[0] + ev[1] + ev[2];
        const cplx e2 = ev[0] * ev[1] + ev[0] * ev[2] + ev[1] * ev[2];
        const cplx e3 = ev[0] * ev[1] * ev[2];
        // same quantities expanded from the matrix H = i A directly
        const cplx I(0.0, 1.0);
        const cplx hc(cfg.cavity.omega, -0.5 * cfg.cavity.gamma);
        const cplx hm(cfg.magnon.omega, -0.5 * cfg.magnon.gamma);
        const cplx ht(cfg.buses[0].omega, -0.5 * cfg.buses[0].gamma_total());
        const double gct = cfg.g_ct, gmt = cfg.g_mt;
        const cplx w1 = hc + hm + ht;
        const cplx w2 = hc * hm + hc * ht + hm * ht - gct * gct - gmt * gmt;
        const cplx w3 = hc * hm * ht - gct * gct * hm - gmt * gmt * hc;
        const double scale = std::abs(w3) + 1.0;
        REQUIRE(std::abs(e1 - w1) < 1e-10 * scale);
        REQUIRE(std::abs(e2 - w2) < 1e-10 * scale);
        REQUIRE(std::abs(e3 - w3) < 1e-10 * scale);
    }
}

TEST_CASE("anti_pt_residual") {
    SystemConfig cfg = device_config();
    cfg.magnon.gamma = cfg.cavity.gamma;
    cfg.g_mt = cfg.g_ct;
    CHECK(anti_pt_residual(cfg) == Approx(0.0).margin(1e-15));

    cfg = device_config();
    cfg.buses[0].gamma_int = mhz_to_radns(50.8 - 41.7);
    CHECK(anti_pt_residual(cfg) > 0.0);

    // residual crosses zero where gamma_m + 4 g_mt^2/gamma_t = gamma_c + 4 g_ct^2/gamma_t
    const double gt = cfg.buses[0].gamma_total();
    const double gmt2 = cfg.g_ct * cfg.g_ct +
                        0.25 * gt * (cfg.cavity.gamma - cfg.magnon.gamma);
    REQUIRE(gmt2 > 0.0);
    cfg.g_mt = std::sqrt(gmt2);
    CHECK(anti_pt_residual(cfg) < 1e-12);
}

TEST_CASE("power balance holds at steady state") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> probe(24.0, 36.0);
    for (int i = 0; i < 1000; ++i) {
        const SystemConfig cfg = random_config(rng, 1 + (i % 2));
        const double omega = probe(rng);
        const cplx a_in(1.0, 0.5);
        const auto s = steady_state(cfg, omega, a_in);
        const cplx a_out = a_in * s11(cfg, omega);
        double rhs = cfg.cavity.gamma * std::norm(s.a) +
                     cfg.magnon.gamma * std::norm(s.m) +
                     cfg.buses[0].gamma_int * std::norm(s.t1);
        if (s.t2) rhs += cfg.buses[1].gamma_int * std::norm(*s.t2);
        const double lhs = std::norm(a_in) - std::norm(a_out);
        REQUIRE(std::abs(lhs - rhs) < 1e-8 * std::norm(a_in));
    }
}

TEST_CASE("passivity of s11") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> probe(24.0, 36.0);
    for (int i = 0; i < 1000; ++i) {
        const SystemConfig cfg = random_config(rng, 1 + (i % 2));
        REQUIRE(std::abs(s11(cfg, probe(rng))) <= 1.0 + 1e-12);
    }
}

TEST_CASE("four-mode model reduces to three-mode with a far-detuned bus") {
    SystemConfig three = device_config();
    SystemConfig four = three;
    BusParams b2 = four.buses[0];
    b2.omega += 1e4 * b2.gamma_total();
    four.buses.push_back(b2);
    for (double f = 4950.0; f <= 5070.0; f += 0.5) {
        const double omega = mhz_to_radns(f);
        REQUIRE(std::abs(s11(four, omega) - s11(three, omega)) < 1e-3);
    }
}

TEST_CASE("sweep_spectrum 1x1 grid equals a single call") {
    const SystemConfig cfg = device_config();
    auto at = [&](double) { return cfg; };
    const auto grid =
        sweep_spectrum(at, {0.0}, {cfg.cavity.omega}, "unit", 1);
    CHECK(grid.values.size() == 1);
    CHECK(std::abs(grid.at(0, 0) - s11(cfg, cfg.cavity.omega)) == 0.0);
}

TEST_CASE("sweep_spectrum rows identical when g_mt = 0") {
    SystemConfig base = device_config();
    base.g_mt = 0.0;
    auto at = [&](double f_m) {
        SystemConfig c = base;
        c.magnon.omega = mhz_to_radns(f_m);
        return c;
    };
    const auto sweep = linspace(4990.0, 5030.0, 20);
    std::vector<double> probe;
    for (double f : linspace(4980.0, 5040.0, 50)) probe.push_back(mhz_to_radns(f));
    const auto grid = sweep_spectrum(at, sweep, probe, "f_magnon_mhz", 2);
    for (std::size_t i = 1; i < sweep.size(); ++i)
        for (std::size_t j = 0; j < probe.size(); ++j)
            REQUIRE(std::abs(grid.at(i, j) - grid.at(0, j)) < 1e-12);
}

TEST_CASE("sweep_spectrum output independent of parallelism") {
    const SystemConfig base = device_config();
    auto at = [&](double f_m) {
        SystemConfig c = base;
        c.magnon.omega = mhz_to_radns(f_m);
        return c;
    };
    const auto sweep = linspace(4990.0, 5030.0, 33);
    std::vector<double> probe;
    for (double f : linspace(4980.0, 5040.0, 41)) probe.push_back(mhz_to_radns(f));
    const auto g1 = sweep_spectrum(at, sweep, probe, "f", 1);
    const auto g4 = sweep_spectrum(at, sweep, probe, "f", 4);
    for (std::size_t k = 0; k < g1.values.size(); ++k)
        REQUIRE(g1.values[k] == g4.values[k]);
}

TEST_CASE("level-attraction sweep: spectral feature follows the coalesced branch") {
    // symmetric configuration (dgamma = 0) so Re w_pm coalesce exactly at
    // the centre of the attraction window
    SystemConfig base = device_config();
    base.magnon.gamma = base.cavity.gamma;
    base.g_mt = base.g_ct = mhz_to_radns(7.0);
    const auto h0 = hybrid_eigenfrequencies(base);
    const double gamma_cpl = h0.Gamma;

    // The broad bus dip (~50 MHz wide) dominates the raw |S11| landscape, so
    // the mode signature must be isolated by subtracting the uncoupled
    // background: the bright hybrid mode shows up as a *peak* of
    // |S11_coupled| - |S11_bare|, and that peak tracks the branch.
    SystemConfig bare = base;
    bare.g_ct = bare.g_mt = 0.0;

    auto at = [&](double f_m) {
        SystemConfig c = base;
        c.magnon.omega = mhz_to_radns(f_m);
        return c;
    };
    const double fc = radns_to_mhz(base.cavity.omega);
    const auto sweep = linspace(fc - 2.0, fc + 2.0, 21);
    std::vector<double> probe;
    const auto probe_f = linspace(fc - 8.0, fc + 8.0, 801);
    for (double f : probe_f) probe.push_back(mhz_to_radns(f));
    const auto grid = sweep_spectrum(at, sweep, probe, "f_magnon_mhz", 1);

    std::vector<double> bare_mag(probe.size());
    for (std::size_t j = 0; j < probe.size(); ++j)
        bare_mag[j] = std::abs(s11(bare, probe[j]));

    for (std::size_t i = 0; i < sweep.size(); ++i) {
        SystemConfig c = at(sweep[i]);
        const auto h = hybrid_eigenfrequencies(c);
        const double delta = std::abs(c.cavity.omega - c.magnon.omega);
        if (delta >= 2.0 * gamma_cpl) continue;  // outside attraction window
        // inside the window the real parts coalesce
        REQUIRE(h.omega_plus.real() == Approx(h.omega_minus.real()).margin(1e-9));
        // the background-subtracted peak sits on the coalesced branch
        std::size_t j_max = 0;
        double best = -1e30;
        for (std::size_t j = 0; j < probe.size(); ++j) {
            const double d = std::abs(grid.at(i, j)) - bare_mag[j];
            if (d > best) { best = d; j_max = j; }
        }
        REQUIRE(best > 0.0);
        const double f_found = probe_f[j_max];
        const double f_branch = radns_to_mhz(h.omega_plus.real());
        REQUIRE(std::abs(f_found - f_branch) <
                2.0 * radns_to_mhz(gamma_cpl));
    }
}
