#pragma once

// Unit conventions:
//   - config files and user-facing I/O carry linear frequencies f = omega/2pi
//     in MHz, times in ns, lengths in mm, phases in degrees
//   - internal canonical units are angular frequency in rad/ns and time in ns
//
// Damping convention: gamma is the total amplitude-energy decay rate; the
// amplitude itself decays at gamma/2 (the EOM carry -gamma/2 * x terms).
// Resonator literature mixes conventions, so this is fixed once, here.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace magbus {

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double planck_J_s = 6.62607015e-34;
inline constexpr double c_mm_per_ns = 299.792458;

/// Linear frequency in MHz -> angular frequency in rad/ns.
inline constexpr double mhz_to_radns(double f_mhz) noexcept {
    return two_pi * f_mhz * 1e-3;
}

/// Angular frequency in rad/ns -> linear frequency in MHz.
inline constexpr double radns_to_mhz(double omega) noexcept {
    return omega * 1e3 / two_pi;
}

inline constexpr double deg_to_rad(double deg) noexcept {
    return deg * std::numbers::pi / 180.0;
}

struct DampingRates {
    double gamma_t;    // rad/ns, total
    double gamma_int;  // rad/ns
    double gamma_ext;  // rad/ns
    // |1/Q_L - 1/Q_i - 1/Q_c| * Q_L, dimensionless consistency residual
    double q_residual;
};

/// Quality factors -> damping rates via gamma_x/2pi = f0/Q_x.
inline DampingRates q_to_gamma(double f0_mhz, double q_loaded,
                               double q_internal, double q_coupling) {
    if (f0_mhz <= 0.0) throw std::invalid_argument("q_to_gamma: f0 must be > 0");
    if (q_loaded <= 0.0 || q_internal <= 0.0 || q_coupling <= 0.0)
        throw std::invalid_argument("q_to_gamma: all Q must be > 0");
    DampingRates r;
    r.gamma_t = mhz_to_radns(f0_mhz / q_loaded);
    r.gamma_int = mhz_to_radns(f0_mhz / q_internal);
    r.gamma_ext = mhz_to_radns(f0_mhz / q_coupling);
    r.q_residual =
        std::abs(1.0 / q_loaded - 1.0 / q_internal - 1.0 / q_coupling) * q_loaded;
    return r;
}

/// Inverse of q_to_gamma for round-trip checks.
inline double gamma_to_q(double f0_mhz, double gamma) {
    if (f0_mhz <= 0.0 || gamma <= 0.0)
        throw std::invalid_argument("gamma_to_q: inputs must be > 0");
    return f0_mhz / radns_to_mhz(gamma);
}

/// Magnon frequency from bias field: omega_m = 2pi * gyro * B0.
/// gyro is the gyromagnetic ratio in MHz/T (e.g. ~28000 for YIG).
inline double field_to_magnon_freq(double b0_tesla, double gyro_mhz_per_t) {
    if (b0_tesla < 0.0)
        throw std::invalid_argument("field_to_magnon_freq: field must be >= 0");
    if (gyro_mhz_per_t <= 0.0)
        throw std::invalid_argument("field_to_magnon_freq: gyro must be > 0");
    return mhz_to_radns(gyro_mhz_per_t * b0_tesla);
}

/// Input-field amplitude from drive power. |a_in|^2 = P/(h f) is the photon
/// flux; returned amplitude is sqrt(photons per ns). -inf dBm maps to 0.
inline double amplitude_from_power(double power_dbm, double f_mhz) {
    if (f_mhz <= 0.0)
        throw std::invalid_argument("amplitude_from_power: f must be > 0");
    if (std::isinf(power_dbm) && power_dbm < 0.0) return 0.0;
    const double p_watt = 1e-3 * std::pow(10.0, power_dbm / 10.0);
    const double flux_per_s = p_watt / (planck_J_s * f_mhz * 1e6);
    return std::sqrt(flux_per_s * 1e-9);
}

}  // namespace magbus
