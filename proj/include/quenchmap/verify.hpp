#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "quenchmap/core.hpp"

namespace quenchmap {

struct ResidualOptions {
    double h_x = 1e-3;
    double h_t = 1e-4;
};

inline ResidualOptions residual_steps_for_free(double length_scale, double time_scale) {
    return ResidualOptions{1e-3 * length_scale, 1e-4 * time_scale};
}

inline ResidualOptions residual_steps_for_trap(const TrapSpec& trap,
                                               const PhysicalParams& params) {
    const double omega = trap.omega(params);
    return ResidualOptions{1e-3 * std::sqrt(params.hbar / (params.mass * omega)),
                           1e-4 / omega};
}

struct ProbePoint {
    double position = 0.0;
    double time = 0.0;
};

struct ResidualReport {
    double max_abs = 0.0;
    double max_rel = 0.0;
    std::size_t n_points = 0;
};

namespace detail {

struct StencilTerms {
    complex d2x;   // 5-point fourth-order second derivative
    complex dt;    // 4-point fourth-order first derivative
    complex value; // evaluator at the probe itself
};

inline StencilTerms stencil_terms(const SolutionEvaluator& ev, double x, double t,
                                  const ResidualOptions& opts) {
    const double hx = opts.h_x, ht = opts.h_t;
    StencilTerms s;
    s.value = ev.fn(x, t);
    s.d2x = (-ev.fn(x - 2.0 * hx, t) + 16.0 * ev.fn(x - hx, t) - 30.0 * s.value +
             16.0 * ev.fn(x + hx, t) - ev.fn(x + 2.0 * hx, t)) /
            (12.0 * hx * hx);
    s.dt = (ev.fn(x, t - 2.0 * ht) - 8.0 * ev.fn(x, t - ht) + 8.0 * ev.fn(x, t + ht) -
            ev.fn(x, t + 2.0 * ht)) /
           (12.0 * ht);
    return s;
}

inline void fold_residual(ResidualReport& report, complex residual, double denom) {
    const double mag = std::abs(residual);
    report.max_abs = std::max(report.max_abs, mag);
    if (denom > 0.0) report.max_rel = std::max(report.max_rel, mag / denom);
    ++report.n_points;
}

} // namespace detail

// Checks phi_xx + i alpha phi_t = 0 at the probe points. The relative figure
// divides by the largest participating term magnitude per point, so it is
// scale free even deep in Gaussian tails.
inline ResidualReport residual_free(const SolutionEvaluator& ev,
                                    const std::vector<ProbePoint>& probes,
                                    const PhysicalParams& params,
                                    const ResidualOptions& opts) {
    params.validate();
    const double alpha = params.alpha();
    ResidualReport report;
    for (const auto& p : probes) {
        const auto s = detail::stencil_terms(ev, p.position, p.time, opts);
        const complex t_time = complex{0.0, alpha} * s.dt;
        const complex r = s.d2x + t_time;
        detail::fold_residual(report, r, std::max(std::abs(s.d2x), std::abs(t_time)));
    }
    return report;
}

// Checks psi_xixi + i alpha psi_tau - (k alpha / (2 hbar)) xi^2 psi = 0,
// the convention the sign scan below singles out.
inline ResidualReport residual_trapped(const SolutionEvaluator& ev, const TrapSpec& trap,
                                       const std::vector<ProbePoint>& probes,
                                       const PhysicalParams& params,
                                       const ResidualOptions& opts) {
    params.validate();
    trap.validate();
    const double alpha = params.alpha();
    const double vcoef = trap.k * alpha / (2.0 * params.hbar);
    ResidualReport report;
    for (const auto& p : probes) {
        const auto s = detail::stencil_terms(ev, p.position, p.time, opts);
        const complex t_time = complex{0.0, alpha} * s.dt;
        const complex t_pot = -vcoef * p.position * p.position * s.value;
        const complex r = s.d2x + t_time + t_pot;
        detail::fold_residual(
            report, r,
            std::max({std::abs(s.d2x), std::abs(t_time), std::abs(t_pot)}));
    }
    return report;
}

struct SignScanEntry {
    int time_sign = 1;      // sign on i alpha psi_tau
    int potential_sign = 1; // sign on (k alpha / (2 hbar)) xi^2 psi
    double max_rel = 0.0;
};

struct SignScanReport {
    std::array<SignScanEntry, 4> entries{};
    std::size_t n_passing = 0;
    SignScanEntry best{};
    bool unique_pass = false;
};

inline constexpr double sign_scan_pass_tol = 1e-3;

// The printed form of the trapped equation in circulation has a sign
// ambiguity; exactly one of the four (time, potential) sign choices is
// solved by the mapped states. The scan documents that choice numerically.
inline SignScanReport scan_sign_conventions(const SolutionEvaluator& ev,
                                            const TrapSpec& trap,
                                            const std::vector<ProbePoint>& probes,
                                            const PhysicalParams& params,
                                            const ResidualOptions& opts) {
    params.validate();
    trap.validate();
    const double alpha = params.alpha();
    const double vcoef = trap.k * alpha / (2.0 * params.hbar);

    SignScanReport scan;
    std::size_t idx = 0;
    for (int st : {+1, -1}) {
        for (int sv : {+1, -1}) {
            ResidualReport report;
            for (const auto& p : probes) {
                const auto s = detail::stencil_terms(ev, p.position, p.time, opts);
                const complex t_time =
                    static_cast<double>(st) * complex{0.0, alpha} * s.dt;
                const complex t_pot = static_cast<double>(sv) * vcoef * p.position *
                                      p.position * s.value;
                const complex r = s.d2x + t_time + t_pot;
                detail::fold_residual(
                    report, r,
                    std::max({std::abs(s.d2x), std::abs(t_time), std::abs(t_pot)}));
            }
            scan.entries[idx++] = SignScanEntry{st, sv, report.max_rel};
        }
    }
    scan.best = scan.entries[0];
    for (const auto& e : scan.entries) {
        if (e.max_rel < scan.best.max_rel) scan.best = e;
        if (e.max_rel < sign_scan_pass_tol) ++scan.n_passing;
    }
    scan.unique_pass = scan.n_passing == 1 && scan.best.max_rel < sign_scan_pass_tol;
    return scan;
}

// Human-readable statement of a scan winner, used in summary files.
inline std::string sign_convention_string(const SignScanEntry& e) {
    const char* ts = e.time_sign > 0 ? "+" : "-";
    const char* vs = e.potential_sign > 0 ? "+" : "-";
    return std::string("psi_xixi ") + ts + " i*alpha*psi_tau " + vs +
           " (k*alpha/(2*hbar))*xi^2*psi = 0";
}

struct CalibrationResult {
    ResidualOptions best;
    double initial_rel = 0.0;
    double best_rel = 0.0;
    std::vector<double> history;
};

// Halves both stencil steps until the measured residual stops improving.
// With fourth-order stencils each halving cuts the truncation part sixteen
// fold until the rounding floor, so a useful run drops well over 8x.
inline CalibrationResult calibrate_residual_steps(
    const std::function<double(const ResidualOptions&)>& measure, ResidualOptions start,
    int max_rounds = 8) {
    CalibrationResult result;
    result.best = start;
    result.initial_rel = measure(start);
    result.best_rel = result.initial_rel;
    result.history.push_back(result.initial_rel);
    ResidualOptions cur = start;
    for (int round = 0; round < max_rounds; ++round) {
        cur.h_x *= 0.5;
        cur.h_t *= 0.5;
        const double rel = measure(cur);
        result.history.push_back(rel);
        if (rel < result.best_rel) {
            result.best_rel = rel;
            result.best = cur;
        }
        if (rel > 0.5 * result.history[result.history.size() - 2]) break;
    }
    return result;
}

struct Observables {
    double norm = 0.0;
    double mean_x = 0.0;
    double var_x = 0.0;
};

inline Observables observables(const GridState& state) {
    const double dx = state.grid.spacing();
    double nsq = 0.0;
    for (const auto& a : state.amplitudes) nsq += std::norm(a);
    nsq *= dx;
    const double norm = std::sqrt(nsq);
    if (norm <= 1e-12)
        throw validation_error("observables of a numerically zero state (norm " +
                               std::to_string(norm) + ")");
    double mean = 0.0;
    for (std::size_t j = 0; j < state.amplitudes.size(); ++j)
        mean += state.grid.point(j) * std::norm(state.amplitudes[j]);
    mean = mean * dx / nsq;
    double var = 0.0;
    for (std::size_t j = 0; j < state.amplitudes.size(); ++j) {
        const double d = state.grid.point(j) - mean;
        var += d * d * std::norm(state.amplitudes[j]);
    }
    var = var * dx / nsq;
    return Observables{norm, mean, var};
}

} // namespace quenchmap
