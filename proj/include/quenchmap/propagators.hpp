#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "quenchmap/core.hpp"
#include "quenchmap/fft.hpp"
#include "quenchmap/states.hpp"

namespace quenchmap {

inline constexpr std::size_t max_split_steps = 100'000'000;

namespace detail {

inline void require_pow2_grid(const Grid& grid, const char* what) {
    if (!is_power_of_two(grid.n))
        throw validation_error(std::string(what) + " needs a power-of-two grid, got n = " +
                               std::to_string(grid.n));
}

inline double oscillator_length(const TrapSpec& trap, const PhysicalParams& params) {
    return std::sqrt(params.hbar / (params.mass * trap.omega(params)));
}

inline void require_resolved(const TrapSpec& trap, const Grid& grid,
                             const PhysicalParams& params, const char* what) {
    const double ell = oscillator_length(trap, params);
    if (ell < 2.0 * grid.spacing())
        throw validation_error(std::string(what) + ": oscillator length scale " +
                               std::to_string(ell) + " is under two grid spacings " +
                               std::to_string(grid.spacing()) +
                               ", eigenfunctions are not resolvable");
}

} // namespace detail

// Exact free evolution: one FFT round trip with the quadratic dispersion
// phase applied in momentum space. Works for either sign of the time jump.
inline GridState evolve_free_spectral(const GridState& state, double t_target,
                                      const PhysicalParams& params) {
    params.validate();
    detail::require_pow2_grid(state.grid, "evolve_free_spectral");
    GridState out = state;
    out.time = t_target;
    const double dt = t_target - state.time;
    if (dt == 0.0) return out;

    Fft fft(state.grid.n);
    fft.forward(out.amplitudes.data());
    const auto k = fft_wavenumbers(state.grid);
    const double coef = -params.hbar * dt / (2.0 * params.mass);
    for (std::size_t j = 0; j < out.amplitudes.size(); ++j) {
        const double phase = coef * k[j] * k[j];
        out.amplitudes[j] *= complex{std::cos(phase), std::sin(phase)};
    }
    fft.inverse(out.amplitudes.data());
    return out;
}

// Strang splitting for the trapped equation: half potential kick, full
// kinetic step in momentum space, half potential kick. Second order in dt;
// every factor is unitary so the norm is preserved to rounding.
inline GridState evolve_split_step(const GridState& state, double t_target, double dt,
                                   const TrapSpec& trap, const PhysicalParams& params) {
    params.validate();
    trap.validate();
    detail::require_pow2_grid(state.grid, "evolve_split_step");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw validation_error("split-step dt must be a positive finite number");

    GridState out = state;
    out.time = t_target;
    const double span = t_target - state.time;
    if (span == 0.0) return out;
    if (std::abs(span) / dt > static_cast<double>(max_split_steps))
        throw resource_limit_error(
            "split-step would need more than " + std::to_string(max_split_steps) +
            " steps (span " + std::to_string(std::abs(span)) + ", dt " + std::to_string(dt) +
            ")");

    const std::size_t n = state.grid.n;
    const auto n_full = static_cast<std::size_t>(std::abs(span) / dt);
    const double rem = std::abs(span) - static_cast<double>(n_full) * dt;
    const double sdt = std::copysign(dt, span);

    Fft fft(n);
    const auto k = fft_wavenumbers(state.grid);
    std::vector<complex> vhalf(n), kin(n);
    auto fill_tables = [&](double h) {
        const double vcoef = -trap.k * h / (4.0 * params.hbar);
        const double kcoef = -params.hbar * h / (2.0 * params.mass);
        for (std::size_t j = 0; j < n; ++j) {
            const double x = state.grid.point(j);
            const double vphase = vcoef * x * x;
            vhalf[j] = complex{std::cos(vphase), std::sin(vphase)};
            const double kphase = kcoef * k[j] * k[j];
            kin[j] = complex{std::cos(kphase), std::sin(kphase)};
        }
    };
    auto one_step = [&] {
        auto* a = out.amplitudes.data();
        for (std::size_t j = 0; j < n; ++j) a[j] *= vhalf[j];
        fft.forward(a);
        for (std::size_t j = 0; j < n; ++j) a[j] *= kin[j];
        fft.inverse(a);
        for (std::size_t j = 0; j < n; ++j) a[j] *= vhalf[j];
    };

    fill_tables(sdt);
    for (std::size_t step = 0; step < n_full; ++step) one_step();
    if (rem > dt * 1e-12) {
        fill_tables(std::copysign(rem, span));
        one_step();
    }
    return out;
}

struct ProjectionCoefficients {
    TrapSpec trap;
    std::vector<complex> coeffs;
    double truncation_tail = 0.0; // norm^2 minus captured weight, >= -1e-12
};

// Rectangle-rule inner products against the first n_basis oscillator
// eigenfunctions, computed with a two-row Hermite recurrence over the grid.
inline ProjectionCoefficients project_onto_eigenbasis(const GridState& state,
                                                      const TrapSpec& trap,
                                                      std::size_t n_basis,
                                                      const PhysicalParams& params) {
    params.validate();
    trap.validate();
    if (n_basis > max_eigenstate_index)
        throw resource_limit_error("projection basis size " + std::to_string(n_basis) +
                                   " exceeds the supported maximum " +
                                   std::to_string(max_eigenstate_index));
    detail::require_resolved(trap, state.grid, params, "project_onto_eigenbasis");

    const std::size_t n = state.grid.n;
    const double dx = state.grid.spacing();
    const double ell = detail::oscillator_length(trap, params);
    const double inv_sqrt_ell = 1.0 / std::sqrt(ell);

    double norm_sq = 0.0;
    for (const auto& a : state.amplitudes) norm_sq += std::norm(a);
    norm_sq *= dx;

    ProjectionCoefficients pc{trap, {}, norm_sq};
    if (n_basis == 0) return pc;

    std::vector<double> y(n), prev(n), cur(n);
    for (std::size_t j = 0; j < n; ++j) {
        y[j] = state.grid.point(j) / ell;
        prev[j] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * y[j] * y[j]);
    }

    pc.coeffs.resize(n_basis);
    double captured = 0.0;
    const double* row = prev.data();
    for (std::size_t level = 0; level < n_basis; ++level) {
        if (level == 1) {
            for (std::size_t j = 0; j < n; ++j) cur[j] = std::numbers::sqrt2 * y[j] * prev[j];
            row = cur.data();
        } else if (level >= 2) {
            const auto step = detail::hermite_step(static_cast<unsigned>(level - 1));
            for (std::size_t j = 0; j < n; ++j) {
                const double next = step.a * y[j] * cur[j] - step.b * prev[j];
                prev[j] = cur[j];
                cur[j] = next;
            }
            row = cur.data();
        }
        complex acc{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * state.amplitudes[j];
        pc.coeffs[level] = acc * (dx * inv_sqrt_ell);
        captured += std::norm(pc.coeffs[level]);
    }
    pc.truncation_tail = norm_sq - captured;
    return pc;
}

// Reconstructs sum_n coeffs[n] u_n(xi) exp(-i omega (n + 1/2) tau_target) on
// the grid. tau_target is the elapsed trap time since the coefficients were
// taken.
inline GridState evolve_projected(const ProjectionCoefficients& pc, double tau_target,
                                  const Grid& grid, const PhysicalParams& params) {
    params.validate();
    pc.trap.validate();
    detail::require_resolved(pc.trap, grid, params, "evolve_projected");

    const std::size_t n = grid.n;
    const double ell = detail::oscillator_length(pc.trap, params);
    const double inv_sqrt_ell = 1.0 / std::sqrt(ell);
    const double omega = pc.trap.omega(params);

    std::vector<double> y(n), prev(n), cur(n), out_re(n, 0.0), out_im(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        y[j] = grid.point(j) / ell;
        prev[j] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * y[j] * y[j]);
    }

    const double* row = prev.data();
    for (std::size_t level = 0; level < pc.coeffs.size(); ++level) {
        if (level == 1) {
            for (std::size_t j = 0; j < n; ++j) cur[j] = std::numbers::sqrt2 * y[j] * prev[j];
            row = cur.data();
        } else if (level >= 2) {
            const auto step = detail::hermite_step(static_cast<unsigned>(level - 1));
            for (std::size_t j = 0; j < n; ++j) {
                const double next = step.a * y[j] * cur[j] - step.b * prev[j];
                prev[j] = cur[j];
                cur[j] = next;
            }
            row = cur.data();
        }
        const double phase = -omega * (static_cast<double>(level) + 0.5) * tau_target;
        const complex w = pc.coeffs[level] * complex{std::cos(phase), std::sin(phase)} *
                          inv_sqrt_ell;
        const double wre = w.real(), wim = w.imag();
        for (std::size_t j = 0; j < n; ++j) {
            out_re[j] += wre * row[j];
            out_im[j] += wim * row[j];
        }
    }

    GridState state{grid, tau_target, std::vector<complex>(n)};
    for (std::size_t j = 0; j < n; ++j) state.amplitudes[j] = complex{out_re[j], out_im[j]};
    return state;
}

} // namespace quenchmap
