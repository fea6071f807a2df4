#pragma once

#include <random>
#include <string>

#include "magbus/config.hpp"

namespace magbus::testing {

/// Random lossy config in the 4-6 GHz band, deterministic per seed.
inline SystemConfig random_config(std::mt19937& rng, std::size_t n_buses) {
    std::uniform_real_distribution<double> freq(25.0, 35.0);   // rad/ns
    std::uniform_real_distribution<double> gmode(0.005, 0.05);
    std::uniform_real_distribution<double> gbus(0.05, 0.3);
    std::uniform_real_distribution<double> coup(0.01, 0.06);
    SystemConfig cfg;
    cfg.cavity = {freq(rng), gmode(rng)};
    cfg.magnon = {freq(rng), gmode(rng)};
    for (std::size_t b = 0; b < n_buses; ++b)
        cfg.buses.push_back({freq(rng), gbus(rng), gbus(rng)});
    cfg.g_ct = coup(rng);
    cfg.g_mt = coup(rng);
    return cfg;
}

/// Single-bus config with the reference device characterization numbers.
inline SystemConfig device_config() {
    SystemConfig cfg;
    cfg.cavity = {mhz_to_radns(5012.0), mhz_to_radns(1.68)};
    cfg.magnon = {mhz_to_radns(5012.0), mhz_to_radns(2.0)};
    cfg.buses.push_back({mhz_to_radns(5012.0), mhz_to_radns(9.16),
                         mhz_to_radns(41.7)});
    cfg.g_ct = mhz_to_radns(4.9);
    cfg.g_mt = mhz_to_radns(10.0);
    return cfg;
}

inline std::string preset_path(const std::string& name) {
    return std::string(MAGBUS_PRESET_DIR) + "/" + name;
}

inline SystemConfig load_preset(const std::string& stem) {
    return load_config(preset_path(stem + ".json"));
}

}  // namespace magbus::testing
