#pragma once

// First-order dynamics matrix of the coupled mode amplitudes,
/// state ordering x = (a, m, t1 [, t2]):
//
//   dx/dt = A x + d * a_in(t)
//
// with -i*omega - gamma/2 on the diagonal and -i*g off-diagonal. When two
// bus modes share the output port, input-output theory adds a cross-damping
// -sqrt(gamma_ext1*gamma_ext2)/2 between them; without it the four-mode
// model violates passivity. The drive vector d carries sqrt(gamma_ext) on
// the bus rows.

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "magbus/config.hpp"

namespace magbus {

inline Eigen::MatrixXcd dynamics_matrix(const SystemConfig& cfg) {
    const cplx I(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(cfg.n_modes());
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
    A(0, 0) = -I * cfg.cavity.omega - 0.5 * cfg.cavity.gamma;
    A(1, 1) = -I * cfg.magnon.omega - 0.5 * cfg.magnon.gamma;
    for (std::size_t b = 0; b < cfg.buses.size(); ++b) {
        const auto k = static_cast<Eigen::Index>(2 + b);
        A(k, k) = -I * cfg.buses[b].omega - 0.5 * cfg.buses[b].gamma_total();
        A(0, k) = A(k, 0) = -I * cfg.g_ct;
        A(1, k) = A(k, 1) = -I * cfg.g_mt;
    }
    if (cfg.buses.size() == 2) {
        const double kappa =
            std::sqrt(cfg.buses[0].gamma_ext * cfg.buses[1].gamma_ext);
        A(2, 3) += -0.5 * kappa;
        A(3, 2) += -0.5 * kappa;
    }
    return A;
}

inline Eigen::VectorXcd drive_vector(const SystemConfig& cfg) {
    const auto n = static_cast<Eigen::Index>(cfg.n_modes());
    Eigen::VectorXcd d = Eigen::VectorXcd::Zero(n);
    for (std::size_t b = 0; b < cfg.buses.size(); ++b)
        d(static_cast<Eigen::Index>(2 + b)) = std::sqrt(cfg.buses[b].gamma_ext);
    return d;
}

/// a_out = a_in - sum_j sqrt(gamma_ext_j) t_j
inline cplx output_field(const SystemConfig& cfg, const Eigen::VectorXcd& x,
                         cplx a_in) {
    cplx out = a_in;
    for (std::size_t b = 0; b < cfg.buses.size(); ++b)
        out -= std::sqrt(cfg.buses[b].gamma_ext) *
               x(static_cast<Eigen::Index>(2 + b));
    return out;
}

}  // namespace magbus
