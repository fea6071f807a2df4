#pragma once

// Resonator characterization from complex S11 traces: algebraic circle fit,
// quality-factor extraction against the bare-bus reflection model
//   S11(f) = amp e^{i alpha} e^{-i 2 pi f tau} (1 - ge / (i(f0 - f) + gt/2))
// with (f0, gt, ge) in linear MHz and a complex-prefactor/electrical-delay
// nuisance model, refined by Nelder-Mead from circle-fit seeds.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "magbus/units.hpp"

namespace magbus {

using cplx = std::complex<double>;

struct S11Trace {
    std::vector<double> f_mhz;  // strictly increasing
    std::vector<cplx> s11;
};

struct CircleFit {
    cplx center;
    double radius = 0.0;
    double rms = 0.0;
};

struct FitResult {
    double f0_mhz = 0.0;
    double q_loaded = 0.0;
    double q_internal = 0.0;
    double q_coupling = 0.0;
    cplx center;
    double radius = 0.0;
    double residual_rms = 0.0;
    bool overcoupled = false;       // fitted circle encloses the origin
    double q_reciprocal_residual = 0.0;  // |1/QL - 1/Qi - 1/Qc| * QL
};

/// Algebraic (Kasa) least-squares circle fit.
inline CircleFit fit_circle(const std::vector<cplx>& pts) {
    if (pts.size() < 3)
        throw std::invalid_argument("fit_circle: need at least 3 points");
    // normal equations for x^2+y^2 = 2cx*x + 2cy*y + d
    double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0;
    double sxz = 0, syz = 0, sz = 0;
    const double n = static_cast<double>(pts.size());
    for (const cplx& p : pts) {
        const double x = p.real(), y = p.imag(), z = x * x + y * y;
        sxx += x * x; sxy += x * y; syy += y * y;
        sx += x; sy += y;
        sxz += x * z; syz += y * z; sz += z;
    }
    // solve [sxx sxy sx; sxy syy sy; sx sy n] (2cx, 2cy, d)^T = (sxz, syz, sz)
    const double a11 = sxx, a12 = sxy, a13 = sx;
    const double a22 = syy, a23 = sy, a33 = n;
    const double det = a11 * (a22 * a33 - a23 * a23) -
                       a12 * (a12 * a33 - a23 * a13) +
                       a13 * (a12 * a23 - a22 * a13);
    double scale = 0.0;
    for (const cplx& p : pts) scale = std::max(scale, std::norm(p));
    if (std::abs(det) < 1e-12 * std::max(1.0, scale * scale * n * n * n))
        throw std::invalid_argument("fit_circle: degenerate (collinear) input");
    auto solve3 = [&](double b1, double b2, double b3, int col) {
        double m[3][3] = {{a11, a12, a13}, {a12, a22, a23}, {a13, a23, a33}};
        m[0][col] = b1; m[1][col] = b2; m[2][col] = b3;
        const double d = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        return d / det;
    };
    const double cx = 0.5 * solve3(sxz, syz, sz, 0);
    const double cy = 0.5 * solve3(sxz, syz, sz, 1);
    const double d = solve3(sxz, syz, sz, 2);
    CircleFit c;
    c.center = cplx(cx, cy);
    const double r2 = d + cx * cx + cy * cy;
    if (r2 <= 0.0)
        throw std::invalid_argument("fit_circle: degenerate input");
    c.radius = std::sqrt(r2);
    double ss = 0.0;
    for (const cplx& p : pts) {
        const double e = std::abs(p - c.center) - c.radius;
        ss += e * e;
    }
    c.rms = std::sqrt(ss / n);
    return c;
}

namespace detail {

inline cplx reflection_model(double f, double f0, double gt, double ge,
                             double amp, double alpha, double tau) {
    const cplx I(0.0, 1.0);
    const cplx ideal = 1.0 - ge / (I * (f0 - f) + 0.5 * gt);
    return amp * std::exp(I * (alpha - two_pi * f * tau)) * ideal;
}

// Nelder-Mead simplex minimizer; bounded iterations, relative tolerance on
// the simplex function spread.
inline std::vector<double> nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x0, const std::vector<double>& step, int max_iter,
    double tol) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> simplex(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step[i];
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = idx[0], worst = idx[n], second = idx[n - 1];
        if (std::abs(fv[worst] - fv[best]) <=
            tol * (std::abs(fv[best]) + tol))
            break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t k = 0; k < n; ++k)
                p[k] = centroid[k] + coef * (simplex[worst][k] - centroid[k]);
            return p;
        };
        const auto refl = blend(-1.0);
        const double f_refl = f(refl);
        if (f_refl < fv[best]) {
            const auto expd = blend(-2.0);
            const double f_expd = f(expd);
            if (f_expd < f_refl) { simplex[worst] = expd; fv[worst] = f_expd; }
            else { simplex[worst] = refl; fv[worst] = f_refl; }
        } else if (f_refl < fv[second]) {
            simplex[worst] = refl;
            fv[worst] = f_refl;
        } else {
            const auto contr = blend(0.5);
            const double f_contr = f(contr);
            if (f_contr < fv[worst]) { simplex[worst] = contr; fv[worst] = f_contr; }
            else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t k = 0; k < n; ++k)
                        simplex[i][k] =
                            0.5 * (simplex[i][k] + simplex[best][k]);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < fv.size(); ++i)
        if (fv[i] < fv[best]) best = i;
    return simplex[best];
}

}  // namespace detail

/// Fits the reflection model to a trace and converts the extracted linewidths
/// to quality factors Q_x = f0 / (gamma_x / 2pi).
inline FitResult extract_q(const S11Trace& trace) {
    const std::size_t n = trace.f_mhz.size();
    if (n < 16 || trace.s11.size() != n)
        throw std::invalid_argument("extract_q: trace needs >= 16 points");

    // Electrical-delay seed from the local phase slope at the off-resonant
    // band edges. (The end-to-end phase difference would also include the
    // resonance's own phase excursion and badly overestimate the delay.)
    // Each edge slope is accumulated over a block of adjacent-point phase
    // increments so that per-point noise averages out; a single point pair
    // has too short a lever arm once the trace is noisy.
    const std::size_t m = std::max<std::size_t>(2, n / 16);
    auto edge_slope = [&](std::size_t first) {
        double dphi = 0.0;
        for (std::size_t i = first; i + 1 < first + m; ++i)
            dphi += std::arg(trace.s11[i + 1] / trace.s11[i]);
        return dphi / (trace.f_mhz[first + m - 1] - trace.f_mhz[first]);
    };
    const double tau0 =
        -0.5 * (edge_slope(0) + edge_slope(n - m)) / two_pi;

    // Remaining seeds come from a delay-corrected copy, so that a sizable
    // electrical delay cannot smear the baseline or the dip geometry.
    std::vector<cplx> flat(n);
    for (std::size_t i = 0; i < n; ++i)
        flat[i] =
            trace.s11[i] * std::exp(cplx(0.0, two_pi * trace.f_mhz[i] * tau0));

    // Off-resonant baseline from the band edges.
    const cplx baseline = 0.25 * (flat.front() + flat[1] +
                                  flat[n - 2] + flat.back());
    const double amp0 = std::max(std::abs(baseline), 1e-12);

    // Resonance seed: sample farthest from the baseline.
    std::size_t i_res = 0;
    double d_max = 0.0;
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = std::abs(flat[i] - baseline);
        if (dist[i] > d_max) { d_max = dist[i]; i_res = i; }
    }
    if (d_max < 1e-6 * amp0)
        throw std::invalid_argument("extract_q: flat trace, no resonance dip");
    const double f0_seed = trace.f_mhz[i_res];

    // Linewidth seed from the half-max width of dist^2 (equals gamma_t/2pi).
    const double half = 0.5 * d_max * d_max;
    double f_lo = trace.f_mhz.front(), f_hi = trace.f_mhz.back();
    for (std::size_t i = i_res; i-- > 0;)
        if (dist[i] * dist[i] < half) { f_lo = trace.f_mhz[i]; break; }
    for (std::size_t i = i_res + 1; i < n; ++i)
        if (dist[i] * dist[i] < half) { f_hi = trace.f_mhz[i]; break; }
    const double gt_seed =
        std::max(f_hi - f_lo, (trace.f_mhz[1] - trace.f_mhz[0]));

    if (trace.f_mhz.back() - trace.f_mhz.front() < 3.0 * gt_seed)
        throw std::invalid_argument(
            "extract_q: span must cover >= 3 linewidths");

    const CircleFit circle = fit_circle(flat);
    const double ge_seed =
        std::clamp(circle.radius / amp0 * gt_seed, 1e-6 * gt_seed, gt_seed);

    auto cost = [&](const std::vector<double>& p) {
        const double f0 = p[0], gt = p[1], ge = p[2];
        const double amp = p[3], alpha = p[4], tau = p[5];
        if (gt <= 0.0 || ge <= 0.0 || ge > gt || amp <= 0.0) return 1e30;
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            ss += std::norm(trace.s11[i] - detail::reflection_model(
                                               trace.f_mhz[i], f0, gt, ge, amp,
                                               alpha, tau));
        return ss;
    };

    // The delay-corrected baseline phase is alpha directly.
    std::vector<double> p0 = {f0_seed, gt_seed, ge_seed,
                              amp0,    std::arg(baseline), tau0};
    const double f_span = trace.f_mhz.back() - trace.f_mhz.front();
    std::vector<double> step = {0.1 * gt_seed,  0.2 * gt_seed, 0.2 * gt_seed,
                                0.05 * amp0,    0.05,          0.01 / f_span};
    // two restarts tighten convergence without raising the iteration cap
    for (int round = 0; round < 3; ++round) {
        p0 = detail::nelder_mead(cost, p0, step, 500, 1e-10);
        for (double& s : step) s *= 0.05;
    }

    const double f0 = p0[0], gt = p0[1], ge = p0[2];
    FitResult r;
    r.f0_mhz = f0;
    r.q_loaded = f0 / gt;
    r.q_coupling = f0 / ge;
    r.q_internal = f0 / (gt - ge);
    r.center = circle.center;
    r.radius = circle.radius;
    r.residual_rms = std::sqrt(cost(p0) / static_cast<double>(n));
    r.overcoupled = ge > 0.5 * gt;  // circle encloses the origin
    r.q_reciprocal_residual =
        std::abs(1.0 / r.q_loaded - 1.0 / r.q_internal - 1.0 / r.q_coupling) *
        r.q_loaded;
    return r;
}

/// Reads a CSV trace with columns f_mhz, s11_re, s11_im (header optional).
inline S11Trace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_trace: cannot open " + path);
    S11Trace tr;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ss(line);
        double f, re, im;
        if (!(ss >> f >> re >> im)) {
            if (line_no == 1) continue;  // header row
            throw std::runtime_error("load_trace: parse error at line " +
                                     std::to_string(line_no));
        }
        if (!tr.f_mhz.empty() && f <= tr.f_mhz.back())
            throw std::runtime_error(
                "load_trace: frequencies not strictly increasing at line " +
                std::to_string(line_no));
        tr.f_mhz.push_back(f);
        tr.s11.emplace_back(re, im);
    }
    if (tr.f_mhz.size() < 16)
        throw std::runtime_error("load_trace: need at least 16 points");
    return tr;
}

inline nlohmann::json fit_result_to_json(const FitResult& r) {
    return {{"f0_mhz", r.f0_mhz},
            {"q_loaded", r.q_loaded},
            {"q_internal", r.q_internal},
            {"q_coupling", r.q_coupling},
            {"circle_center_re", r.center.real()},
            {"circle_center_im", r.center.imag()},
            {"circle_radius", r.radius},
            {"residual_rms", r.residual_rms},
            {"overcoupled", r.overcoupled},
            {"q_reciprocal_residual", r.q_reciprocal_residual}};
}

}  // namespace magbus
