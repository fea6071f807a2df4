#pragma once

// Frequency-domain engine: steady-state amplitudes under a harmonic drive,
// reflection coefficient S11, adiabatic elimination of the bus mode,
// coherent/dissipative coupling decomposition, hybrid eigenfrequencies of
// the effective two-mode Hamiltonian, and full numeric eigenvalues.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "magbus/config.hpp"
#include "magbus/system_matrix.hpp"

namespace magbus {

struct SteadyState {
    cplx a;
    cplx m;
    cplx t1;
    std::optional<cplx> t2;
    double omega = 0.0;   // probe, rad/ns
    double residual = 0.0;  // max row residual of the linear system
    cplx bus_sum() const { return t2 ? t1 + *t2 : t1; }
};

struct EffectiveCoupling {
    cplx g_eff;         // rad/ns
    double g_coh;       // Re g_eff
    double gamma_diss;  // Im g_eff
};

struct HybridEigenpair {
    cplx omega_plus;
    cplx omega_minus;
    double gamma_c_prime;
    double gamma_m_prime;
    double Gamma;  // dissipative coupling 2 g_ct g_mt / gamma_t
    bool strongly_damped;  // gamma_t >= 10 * max(gamma_c, gamma_m)
};

enum class CouplingRegime { repulsion, exceptional_point, attraction };

namespace detail {

// Frequency-space coefficient matrix (Z x = rhs form, equations divided by
// nothing: row n is (i*Delta_n + gamma_n/2) x_n + i g ... = drive).
inline Eigen::MatrixXcd steady_matrix(const SystemConfig& cfg, double omega) {
    const cplx I(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(cfg.n_modes());
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
    M(0, 0) = I * (cfg.cavity.omega - omega) + 0.5 * cfg.cavity.gamma;
    M(1, 1) = I * (cfg.magnon.omega - omega) + 0.5 * cfg.magnon.gamma;
    for (std::size_t b = 0; b < cfg.buses.size(); ++b) {
        const auto k = static_cast<Eigen::Index>(2 + b);
        M(k, k) = I * (cfg.buses[b].omega - omega) +
                  0.5 * cfg.buses[b].gamma_total();
        M(0, k) = M(k, 0) = I * cfg.g_ct;
        M(1, k) = M(k, 1) = I * cfg.g_mt;
    }
    if (cfg.buses.size() == 2) {
        const double kappa =
            std::sqrt(cfg.buses[0].gamma_ext * cfg.buses[1].gamma_ext);
        M(2, 3) += 0.5 * kappa;
        M(3, 2) += 0.5 * kappa;
    }
    return M;
}

// Self-energy of the cavity+magnon pair as seen from a bus row.
inline cplx mode_self_energy(const SystemConfig& cfg, double omega) {
    const cplx I(0.0, 1.0);
    const cplx dc = I * (cfg.cavity.omega - omega) + 0.5 * cfg.cavity.gamma;
    const cplx dm = I * (cfg.magnon.omega - omega) + 0.5 * cfg.magnon.gamma;
    return cfg.g_ct * cfg.g_ct / dc + cfg.g_mt * cfg.g_mt / dm;
}

}  // namespace detail

/// Solves the 3x3 (or 4x4) steady-state system at probe frequency omega.
inline SteadyState steady_state(const SystemConfig& cfg, double omega,
                                cplx a_in) {
    const Eigen::MatrixXcd M = detail::steady_matrix(cfg, omega);
    const Eigen::VectorXcd rhs = drive_vector(cfg) * a_in;
    const Eigen::VectorXcd x = M.partialPivLu().solve(rhs);
    if (!x.allFinite())
        throw std::runtime_error(
            "steady_state: singular system (zero dampings with exact "
            "degeneracy)");
    SteadyState s;
    s.a = x(0);
    s.m = x(1);
    s.t1 = x(2);
    if (cfg.buses.size() == 2) s.t2 = x(3);
    s.omega = omega;
    s.residual = (M * x - rhs).cwiseAbs().maxCoeff();
    if (std::abs(a_in) > 0.0 && !(s.residual < 1e-10 * std::abs(a_in)))
        throw std::runtime_error("steady_state: residual above tolerance");
    return s;
}

/// Reflection coefficient, closed form. Single-bus case is the standard
/// input-output expression; the two-bus case eliminates (a, m) analytically
/// and solves the remaining 2x2 bus system in closed form.
inline cplx s11(const SystemConfig& cfg, double omega) {
    const cplx I(0.0, 1.0);
    cplx result;
    if (cfg.buses.size() == 1) {
        const auto& bus = cfg.buses[0];
        const cplx denom = I * (bus.omega - omega) + 0.5 * bus.gamma_total() +
                           detail::mode_self_energy(cfg, omega);
        result = 1.0 - bus.gamma_ext / denom;
    } else {
        const auto& b1 = cfg.buses[0];
        const auto& b2 = cfg.buses[1];
        const cplx sig = detail::mode_self_energy(cfg, omega);
        const cplx d1 = I * (b1.omega - omega) + 0.5 * b1.gamma_total();
        const cplx d2 = I * (b2.omega - omega) + 0.5 * b2.gamma_total();
        const double e1 = std::sqrt(b1.gamma_ext);
        const double e2 = std::sqrt(b2.gamma_ext);
        const cplx cross = 0.5 * e1 * e2 + sig;
        const cplx det = (d1 + sig) * (d2 + sig) - cross * cross;
        const cplx t1 = ((d2 + sig) * e1 - cross * e2) / det;
        const cplx t2 = ((d1 + sig) * e2 - cross * e1) / det;
        result = 1.0 - (e1 * t1 + e2 * t2);
    }
#ifndef NDEBUG
    {  // cross-validate against the linear-solve + input-output path
        const SteadyState s = steady_state(cfg, omega, cplx(1.0, 0.0));
        cplx via_solve = 1.0 - std::sqrt(cfg.buses[0].gamma_ext) * s.t1;
        if (s.t2) via_solve -= std::sqrt(cfg.buses[1].gamma_ext) * *s.t2;
        if (std::abs(via_solve - result) > 1e-9)
            throw std::runtime_error("s11: closed form disagrees with solve");
    }
#endif
    return result;
}

/// Adiabatic elimination of the bus: the exact 2x2 system for (a, m).
/// Algebraically identical to the 3x3 steady state. Single-bus only.
inline std::pair<cplx, cplx> reduced_two_mode(const SystemConfig& cfg,
                                              double omega, cplx a_in) {
    if (cfg.buses.size() != 1)
        throw std::invalid_argument("reduced_two_mode: single-bus config only");
    const cplx I(0.0, 1.0);
    const auto& bus = cfg.buses[0];
    const double dt = bus.omega - omega;
    const cplx bus_pole = dt - I * 0.5 * bus.gamma_total();
    const cplx zc = -(cfg.cavity.omega - omega) + I * 0.5 * cfg.cavity.gamma +
                    cfg.g_ct * cfg.g_ct / bus_pole;
    const cplx zm = -(cfg.magnon.omega - omega) + I * 0.5 * cfg.magnon.gamma +
                    cfg.g_mt * cfg.g_mt / bus_pole;
    const cplx geff = cfg.g_ct * cfg.g_mt / bus_pole;
    // drive term from substituting the eliminated bus amplitude
    const cplx src = std::sqrt(bus.gamma_ext) * a_in /
                     (I * dt + 0.5 * bus.gamma_total());
    const cplx det = zc * zm - geff * geff;
    if (std::abs(det) == 0.0)
        throw std::runtime_error("reduced_two_mode: singular 2x2 system");
    const cplx a = (zm * cfg.g_ct - geff * cfg.g_mt) * src / det;
    const cplx m = (zc * cfg.g_mt - geff * cfg.g_ct) * src / det;
    return {a, m};
}

/// Complex effective cavity-magnon coupling g_eff = g_ct g_mt / (Dt - i gt/2)
/// split into coherent (real) and dissipative (imaginary) parts.
inline EffectiveCoupling effective_coupling(const SystemConfig& cfg,
                                            double omega) {
    if (cfg.buses.size() != 1)
        throw std::invalid_argument("effective_coupling: single-bus config only");
    const auto& bus = cfg.buses[0];
    const double dt = bus.omega - omega;
    const double half_gt = 0.5 * bus.gamma_total();
    const double denom = dt * dt + half_gt * half_gt;
    EffectiveCoupling ec;
    ec.g_coh = cfg.g_ct * cfg.g_mt * dt / denom;
    ec.gamma_diss = cfg.g_ct * cfg.g_mt * half_gt / denom;
    ec.g_eff = cplx(ec.g_coh, ec.gamma_diss);
    return ec;
}

/// Hybridised eigenfrequencies of the constant-coefficient effective
/// Hamiltonian valid in the strongly damped limit gamma_t >> gamma_c, gamma_m:
///   omega_pm = wbar - i*gbar +- sqrt((Delta/2 - i*dgamma/4)^2 - Gamma^2).
/// Internally verified against a numeric 2x2 eigensolve.
inline HybridEigenpair hybrid_eigenfrequencies(const SystemConfig& cfg) {
    if (cfg.buses.size() != 1)
        throw std::invalid_argument(
            "hybrid_eigenfrequencies: single-bus config only");
    const auto& bus = cfg.buses[0];
    const double gt = bus.gamma_total();
    if (gt <= 0.0)
        throw std::invalid_argument("hybrid_eigenfrequencies: gamma_t must be > 0");
    HybridEigenpair h;
    // Renormalized dampings follow from the exact elimination of the bus at
    // Delta_t = 0: the feedback term g^2/(i Delta_t + gamma_t/2) adds
    // 2 g^2/gamma_t to the *amplitude* decay rate gamma/2, i.e. 4 g^2/gamma_t
    // to the energy rate.  This keeps the diagonal shift consistent with the
    // off-diagonal Gamma = 2 g_ct g_mt / gamma_t, which has the same origin.
    h.gamma_c_prime = cfg.cavity.gamma + 4.0 * cfg.g_ct * cfg.g_ct / gt;
    h.gamma_m_prime = cfg.magnon.gamma + 4.0 * cfg.g_mt * cfg.g_mt / gt;
    h.Gamma = 2.0 * cfg.g_ct * cfg.g_mt / gt;
    h.strongly_damped =
        gt >= 10.0 * std::max(cfg.cavity.gamma, cfg.magnon.gamma);

    const cplx I(0.0, 1.0);
    const double wbar = 0.5 * (cfg.cavity.omega + cfg.magnon.omega);
    const double gbar = 0.25 * (h.gamma_c_prime + h.gamma_m_prime);
    const double delta = cfg.cavity.omega - cfg.magnon.omega;
    const double dgamma = h.gamma_c_prime - h.gamma_m_prime;
    const cplx root =
        std::sqrt(std::pow(0.5 * delta - I * 0.25 * dgamma, 2) -
                  h.Gamma * h.Gamma);
    h.omega_plus = wbar - I * gbar + root;
    h.omega_minus = wbar - I * gbar - root;

    // check against the numeric eigensolve of H_eff
    Eigen::Matrix2cd heff;
    heff << cfg.cavity.omega - I * 0.5 * h.gamma_c_prime, I * h.Gamma,
        I * h.Gamma, cfg.magnon.omega - I * 0.5 * h.gamma_m_prime;
    const Eigen::Vector2cd ev =
        Eigen::ComplexEigenSolver<Eigen::Matrix2cd>(heff, false).eigenvalues();
    const double scale = std::max(std::abs(h.omega_plus), 1.0);
    const double direct = std::abs(ev(0) - h.omega_plus) +
                          std::abs(ev(1) - h.omega_minus);
    const double swapped = std::abs(ev(0) - h.omega_minus) +
                           std::abs(ev(1) - h.omega_plus);
    // The eigenvalue condition number diverges as the pair coalesces: the
    // numeric eigensolve is only good to ~ eps*scale^2/separation, saturating
    // at sqrt(eps)*scale at an exceptional point, so the comparison tolerance
    // must widen accordingly.
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double sep = std::abs(ev(0) - ev(1));
    const double cond_err =
        std::min(std::sqrt(eps) * scale,
                 eps * scale * scale / std::max(sep, eps * scale));
    if (std::min(direct, swapped) > 2e-12 * scale + 16.0 * cond_err)
        throw std::runtime_error(
            "hybrid_eigenfrequencies: analytic/numeric mismatch");
    return h;
}

/// Sign of Re[(Delta/2 - i dgamma/4)^2 - Gamma^2] classifies the regime,
/// with tie tolerance 1e-9 * Gamma^2.
inline CouplingRegime classify_regime(const SystemConfig& cfg) {
    const HybridEigenpair h = hybrid_eigenfrequencies(cfg);
    const double delta = cfg.cavity.omega - cfg.magnon.omega;
    const double dgamma = h.gamma_c_prime - h.gamma_m_prime;
    const double re_arg = 0.25 * delta * delta - dgamma * dgamma / 16.0 -
                          h.Gamma * h.Gamma;
    const double tol = 1e-9 * h.Gamma * h.Gamma;
    if (std::abs(re_arg) <= tol) return CouplingRegime::exceptional_point;
    return re_arg > 0.0 ? CouplingRegime::repulsion : CouplingRegime::attraction;
}

/// Eigenvalues of the full first-order dynamics matrix, reported as complex
/// frequencies omega_n - i*gamma_n/2 (i.e. i*lambda for dx/dt = A x).
inline std::vector<cplx> full_numeric_eigenvalues(const SystemConfig& cfg) {
    const Eigen::MatrixXcd A = dynamics_matrix(cfg);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, false);
    const cplx I(0.0, 1.0);
    std::vector<cplx> out;
    cplx sum = 0.0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        out.push_back(I * es.eigenvalues()(k));
        sum += es.eigenvalues()(k);
    }
    const cplx trace = A.trace();
    if (std::abs(sum - trace) > 1e-10 * std::max(1.0, std::abs(trace)))
        throw std::runtime_error("full_numeric_eigenvalues: trace mismatch");
    std::sort(out.begin(), out.end(), [](const cplx& l, const cplx& r) {
        return l.real() < r.real();
    });
    return out;
}

/// |gamma_c' - gamma_m'| / (gamma_c' + gamma_m'); zero means the effective
/// two-mode Hamiltonian is anti-PT symmetric.
inline double anti_pt_residual(const SystemConfig& cfg) {
    const HybridEigenpair h = hybrid_eigenfrequencies(cfg);
    return std::abs(h.gamma_c_prime - h.gamma_m_prime) /
           (h.gamma_c_prime + h.gamma_m_prime);
}

// --- sweeps -----------------------------------------------------------------

struct SpectrumGrid {
    std::string axis_name;            // e.g. "f_magnon_mhz" or "phi_deg"
    std::vector<double> sweep;        // outer axis (rows)
    std::vector<double> probe;        // probe omega, rad/ns (columns)
    std::vector<cplx> values;         // row-major: values[i*probe.size()+j]

    cplx at(std::size_t i, std::size_t j) const {
        return values[i * probe.size() + j];
    }
};

/// Evaluates s11 over sweep x probe. config_at maps a sweep value to a full
/// SystemConfig. Points are distributed over `jobs` threads; output ordering
/// is by index, independent of scheduling.
inline SpectrumGrid sweep_spectrum(
    const std::function<SystemConfig(double)>& config_at,
    const std::vector<double>& sweep_values,
    const std::vector<double>& probe_omegas, std::string axis_name = "sweep",
    unsigned jobs = 1) {
    SpectrumGrid grid;
    grid.axis_name = std::move(axis_name);
    grid.sweep = sweep_values;
    grid.probe = probe_omegas;
    grid.values.resize(sweep_values.size() * probe_omegas.size());

    std::exception_ptr first_error;
    std::mutex err_mutex;
    auto run_rows = [&](std::size_t begin, std::size_t stride) {
        try {
            for (std::size_t i = begin; i < sweep_values.size(); i += stride) {
                const SystemConfig cfg = config_at(sweep_values[i]);
                for (std::size_t j = 0; j < probe_omegas.size(); ++j)
                    grid.values[i * probe_omegas.size() + j] =
                        s11(cfg, probe_omegas[j]);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    jobs = std::max(1u, jobs);
    if (jobs == 1 || sweep_values.size() < 2) {
        run_rows(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w)
            pool.emplace_back(run_rows, w, jobs);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return grid;
}

inline std::vector<double> linspace(double start, double stop, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = start;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i)
        v[i] = start + (stop - start) * static_cast<double>(i) /
                           static_cast<double>(n - 1);
    return v;
}

}  // namespace magbus
