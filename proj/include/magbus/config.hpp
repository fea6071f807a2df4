#pragma once

// Canonical parameter set of the 3-mode (optionally 4-mode) coupled system:
// one cavity mode, one magnon mode, and one or two heavily damped
// transmission-line (bus) modes that mediate the interaction.
//
// All rates stored here are angular (rad/ns); JSON carries linear MHz.

#include <complex>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "magbus/units.hpp"

namespace magbus {

using cplx = std::complex<double>;

struct ModeParams {
    double omega = 0.0;  // rad/ns
    double gamma = 0.0;  // rad/ns, amplitude decays at gamma/2
};

struct BusParams {
    double omega = 0.0;      // rad/ns
    double gamma_int = 0.0;  // rad/ns
    double gamma_ext = 0.0;  // rad/ns, port coupling
    double gamma_total() const noexcept { return gamma_int + gamma_ext; }
};

struct SystemConfig {
    ModeParams cavity;
    ModeParams magnon;
    std::vector<BusParams> buses;  // 1 or 2
    double g_ct = 0.0;  // rad/ns, cavity-bus coupling (non-negative magnitude)
    double g_mt = 0.0;  // rad/ns, magnon-bus coupling

    std::size_t n_modes() const noexcept { return 2 + buses.size(); }
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {
inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}
}  // namespace detail

/// Checks every invariant; throws ConfigError naming the first violated
/// field. Returns the config unchanged on success.
inline const SystemConfig& validate(const SystemConfig& cfg) {
    using detail::require;
    require(cfg.cavity.omega > 0.0, "cavity.omega must be > 0");
    require(cfg.cavity.gamma >= 0.0, "cavity.gamma must be >= 0");
    require(cfg.magnon.omega > 0.0, "magnon.omega must be > 0");
    require(cfg.magnon.gamma >= 0.0, "magnon.gamma must be >= 0");
    require(!cfg.buses.empty(), "at least 1 bus mode required");
    require(cfg.buses.size() <= 2, "at most 2 bus modes");
    for (std::size_t i = 0; i < cfg.buses.size(); ++i) {
        const std::string p = "buses[" + std::to_string(i) + "].";
        require(cfg.buses[i].omega > 0.0, p + "omega must be > 0");
        require(cfg.buses[i].gamma_int >= 0.0, p + "gamma_int must be >= 0");
        require(cfg.buses[i].gamma_ext >= 0.0, p + "gamma_ext must be >= 0");
    }
    require(cfg.g_ct >= 0.0, "g_ct must be >= 0");
    require(cfg.g_mt >= 0.0, "g_mt must be >= 0");
    return cfg;
}

// --- JSON schema ------------------------------------------------------------
// {
//   "cavity": {"f_mhz": 5012.0, "gamma_mhz": 1.68},
//   "magnon": {"f_mhz": 5012.0, "gamma_mhz": 2.0},
//   "buses": [{"f_mhz": 5012.0, "gamma_int_mhz": 9.16, "gamma_ext_mhz": 41.7}],
//   "g_ct_mhz": 4.9,
//   "g_mt_mhz": 10.0
// }
// Keys starting with '_' (e.g. "_provenance") are ignored.

inline SystemConfig config_from_json(const nlohmann::json& j) {
    SystemConfig cfg;
    auto mode = [](const nlohmann::json& m) {
        ModeParams p;
        p.omega = mhz_to_radns(m.at("f_mhz").get<double>());
        p.gamma = mhz_to_radns(m.at("gamma_mhz").get<double>());
        return p;
    };
    cfg.cavity = mode(j.at("cavity"));
    cfg.magnon = mode(j.at("magnon"));
    for (const auto& b : j.at("buses")) {
        BusParams bp;
        bp.omega = mhz_to_radns(b.at("f_mhz").get<double>());
        bp.gamma_int = mhz_to_radns(b.at("gamma_int_mhz").get<double>());
        bp.gamma_ext = mhz_to_radns(b.at("gamma_ext_mhz").get<double>());
        cfg.buses.push_back(bp);
    }
    cfg.g_ct = mhz_to_radns(j.at("g_ct_mhz").get<double>());
    cfg.g_mt = mhz_to_radns(j.at("g_mt_mhz").get<double>());
    return cfg;
}

inline nlohmann::json config_to_json(const SystemConfig& cfg) {
    nlohmann::json j;
    j["cavity"] = {{"f_mhz", radns_to_mhz(cfg.cavity.omega)},
                   {"gamma_mhz", radns_to_mhz(cfg.cavity.gamma)}};
    j["magnon"] = {{"f_mhz", radns_to_mhz(cfg.magnon.omega)},
                   {"gamma_mhz", radns_to_mhz(cfg.magnon.gamma)}};
    j["buses"] = nlohmann::json::array();
    for (const auto& b : cfg.buses) {
        j["buses"].push_back({{"f_mhz", radns_to_mhz(b.omega)},
                              {"gamma_int_mhz", radns_to_mhz(b.gamma_int)},
                              {"gamma_ext_mhz", radns_to_mhz(b.gamma_ext)}});
    }
    j["g_ct_mhz"] = radns_to_mhz(cfg.g_ct);
    j["g_mt_mhz"] = radns_to_mhz(cfg.g_mt);
    return j;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

inline SystemConfig load_config(const std::string& path) {
    SystemConfig cfg = config_from_json(load_json_file(path));
    validate(cfg);
    return cfg;
}

}  // namespace magbus
