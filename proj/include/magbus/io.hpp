#pragma once

// File emission: CSV (shortest round-trip decimals, byte-deterministic),
// 16-bit binary PGM heatmaps with a JSON axis sidecar, and trace export.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "magbus/dynamics.hpp"
#include "magbus/spectral.hpp"

namespace magbus {

/// Shortest decimal representation that round-trips to the same double.
inline std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double db_of(cplx v, double floor_db = -160.0) {
    const double mag = std::abs(v);
    return mag > 0.0 ? std::max(20.0 * std::log10(mag), floor_db) : floor_db;
}

inline void write_grid_csv(const SpectrumGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# axis=" << grid.axis_name << "\n";
    out << "sweep_value,probe_f_mhz,s11_re,s11_im,s11_abs_db\n";
    for (std::size_t i = 0; i < grid.sweep.size(); ++i) {
        for (std::size_t j = 0; j < grid.probe.size(); ++j) {
            const cplx v = grid.at(i, j);
            out << fmt_double(grid.sweep[i]) << ','
                << fmt_double(radns_to_mhz(grid.probe[j])) << ','
                << fmt_double(v.real()) << ',' << fmt_double(v.imag()) << ','
                << fmt_double(db_of(v)) << '\n';
        }
    }
}

/// Trace CSV: t_ns, a_re, a_im, m_re, m_im, t1_re, t1_im [, t2_re, t2_im],
/// aout_re, aout_im, aout_db.
inline void write_trace_csv(const ComplexAmplitudeTrace& tr, cplx a_in_ref,
                            const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const bool two_bus = !tr.t2.empty();
    out << "t_ns,a_re,a_im,m_re,m_im,t1_re,t1_im";
    if (two_bus) out << ",t2_re,t2_im";
    out << ",aout_re,aout_im,aout_db\n";
    const std::vector<double> db = to_db(tr, a_in_ref);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        out << fmt_double(tr.time[i]) << ',' << fmt_double(tr.a[i].real())
            << ',' << fmt_double(tr.a[i].imag()) << ','
            << fmt_double(tr.m[i].real()) << ',' << fmt_double(tr.m[i].imag())
            << ',' << fmt_double(tr.t1[i].real()) << ','
            << fmt_double(tr.t1[i].imag());
        if (two_bus)
            out << ',' << fmt_double(tr.t2[i].real()) << ','
                << fmt_double(tr.t2[i].imag());
        out << ',' << fmt_double(tr.a_out[i].real()) << ','
            << fmt_double(tr.a_out[i].imag()) << ',' << fmt_double(db[i])
            << '\n';
    }
}

/// 16-bit binary PGM (P5, maxval 65535, MSB first), row-major, values
/// linearly mapped from [min_db, max_db] and clamped.
inline void write_pgm16(const std::vector<double>& values_db, std::size_t rows,
                        std::size_t cols, double min_db, double max_db,
                        const std::string& path) {
    if (rows == 0 || cols == 0 || values_db.size() != rows * cols)
        throw std::invalid_argument("write_pgm16: empty or mismatched grid");
    if (!(min_db < max_db))
        throw std::invalid_argument("write_pgm16: need min_db < max_db");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << cols << ' ' << rows << "\n65535\n";
    std::vector<std::uint8_t> bytes;
    bytes.reserve(2 * values_db.size());
    for (double v : values_db) {
        const double clamped = std::min(std::max(v, min_db), max_db);
        const auto pix = static_cast<std::uint16_t>(
            std::lround((clamped - min_db) / (max_db - min_db) * 65535.0));
        bytes.push_back(static_cast<std::uint8_t>(pix >> 8));
        bytes.push_back(static_cast<std::uint8_t>(pix & 0xFF));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

inline void write_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace magbus
