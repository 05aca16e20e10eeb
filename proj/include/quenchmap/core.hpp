#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "quenchmap/errors.hpp"

namespace quenchmap {

using complex = std::complex<double>;

// |cos(omega*tau)| at or below this margin counts as a singular map time.
inline constexpr double eps_singular = 1e-9;

struct PhysicalParams {
    double hbar = 1.0;
    double mass = 1.0;

    double alpha() const { return 2.0 * mass / hbar; }

    void validate() const {
        if (!(hbar > 0.0) || !std::isfinite(hbar))
            throw validation_error("hbar must be a positive finite number");
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw validation_error("mass must be a positive finite number");
    }
};

struct TrapSpec {
    double k = 1.0;

    double omega(const PhysicalParams& params) const { return std::sqrt(k / params.mass); }

    void validate() const {
        if (!(k > 0.0) || !std::isfinite(k))
            throw validation_error("trap stiffness k must be a positive finite number");
    }
};

// Free parameter b of the coordinate map plus derived quantities, kept so the
// natural choice b = 1/omega stores b*omega == 1.0 exactly and the map's
// normalization constant is exactly 1.
struct MapParams {
    double b = 1.0;
    double b_omega = 1.0;
    double sqrt_b_omega = 1.0;
    double norm_factor = 1.0;

    static MapParams natural(const TrapSpec& trap, const PhysicalParams& params) {
        trap.validate();
        params.validate();
        MapParams mp;
        mp.b = 1.0 / trap.omega(params);
        mp.b_omega = 1.0;
        mp.sqrt_b_omega = 1.0;
        mp.norm_factor = 1.0;
        return mp;
    }

    static MapParams with_b(double b, const TrapSpec& trap, const PhysicalParams& params) {
        trap.validate();
        params.validate();
        if (!(b > 0.0) || !std::isfinite(b))
            throw validation_error("map parameter b must be a positive finite number");
        MapParams mp;
        mp.b = b;
        mp.b_omega = b * trap.omega(params);
        mp.sqrt_b_omega = std::sqrt(mp.b_omega);
        mp.norm_factor = std::pow(mp.b_omega, 0.25);
        return mp;
    }
};

struct Grid {
    double x_min = 0.0;
    double x_max = 1.0;
    std::size_t n = 2;

    double spacing() const { return (x_max - x_min) / static_cast<double>(n); }
    double length() const { return x_max - x_min; }
    double point(std::size_t j) const { return x_min + spacing() * static_cast<double>(j); }
};

inline Grid make_grid(double x_min, double x_max, std::size_t n) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max))
        throw validation_error("grid bounds must be finite");
    if (!(x_max > x_min))
        throw validation_error("grid requires x_max > x_min, got [" + std::to_string(x_min) +
                               ", " + std::to_string(x_max) + ")");
    if (n < 2)
        throw validation_error("grid needs at least 2 points, got " + std::to_string(n));
    Grid g{x_min, x_max, n};
    if (!(g.spacing() > 0.0))
        throw validation_error("grid spacing underflowed to zero");
    return g;
}

inline bool grids_match(const Grid& a, const Grid& b) {
    const double scale = std::max({std::abs(a.x_min), std::abs(a.x_max), 1.0});
    return a.n == b.n && std::abs(a.x_min - b.x_min) <= 1e-12 * scale &&
           std::abs(a.x_max - b.x_max) <= 1e-12 * scale;
}

struct GridState {
    Grid grid;
    double time = 0.0;
    std::vector<complex> amplitudes;
};

// pref * exp(a0 + a1*x + a2*x^2); closed-form states and their mapped images
// are finite sums of these.
struct GaussianTerm {
    complex pref{1.0, 0.0};
    complex a0{0.0, 0.0};
    complex a1{0.0, 0.0};
    complex a2{0.0, 0.0};
};

enum class PdeKind { free_particle, trapped };

// A closed-form solution: pointwise callable, tagged with the equation it
// solves. Evaluators that are Gaussian sums also expose their term
// decomposition at a given time, which sampling uses as a fast path.
struct SolutionEvaluator {
    PdeKind kind = PdeKind::free_particle;
    std::optional<TrapSpec> trap;
    std::function<complex(double, double)> fn;
    std::function<std::vector<GaussianTerm>(double)> terms;

    complex operator()(double position, double time) const { return fn(position, time); }
};

namespace detail {

// Accumulates pref*exp(a0 + a1*x + a2*x^2) over the uniform points
// x_j = x0 + j*dx into out[0..n). Uses incremental complex multiplication
// from the exponent's real-part vertex outward: both sweeps only decay (the
// states handled here have Re a2 < 0), so underflow is benign and overflow
// impossible. Relative drift is bounded by ~n*eps, far below the 1e-12
// agreement the tests pin. Falls back to direct exponentials for tiny slices
// or non-decaying quadratics.
inline void accumulate_exp_quadratic(const GaussianTerm& term, double x0, double dx,
                                     std::size_t n, complex* out) {
    const complex alpha0 = term.a0 + term.a1 * x0 + term.a2 * (x0 * x0);
    const complex beta = (term.a1 + 2.0 * term.a2 * x0) * dx;
    const complex gamma = term.a2 * (dx * dx);

    if (n < 16 || !(gamma.real() < 0.0)) {
        for (std::size_t j = 0; j < n; ++j) {
            const double jd = static_cast<double>(j);
            out[j] += term.pref * std::exp(alpha0 + beta * jd + gamma * (jd * jd));
        }
        return;
    }

    const double vertex = -beta.real() / (2.0 * gamma.real());
    std::size_t jv = 0;
    if (vertex > 0.0)
        jv = static_cast<std::size_t>(
            std::min(vertex, static_cast<double>(n - 1)) + 0.5);

    const double jvd = static_cast<double>(jv);
    const complex q2 = std::exp(2.0 * gamma);
    const complex e_v = term.pref * std::exp(alpha0 + beta * jvd + gamma * (jvd * jvd));
    out[jv] += e_v;

    complex cur = e_v;
    complex ratio = std::exp(beta + gamma * (2.0 * jvd + 1.0));
    for (std::size_t j = jv + 1; j < n; ++j) {
        cur *= ratio;
        ratio *= q2;
        out[j] += cur;
    }

    cur = e_v;
    ratio = std::exp(-(beta + gamma * (2.0 * jvd - 1.0)));
    for (std::size_t j = jv; j-- > 0;) {
        cur *= ratio;
        ratio *= q2;
        out[j] += cur;
    }
}

} // namespace detail

// Pointwise sampling; amplitudes[j] equals evaluator(grid.point(j), time) bit
// for bit.
inline GridState sample(const SolutionEvaluator& evaluator, const Grid& grid, double time) {
    GridState state{grid, time, std::vector<complex>(grid.n)};
    for (std::size_t j = 0; j < grid.n; ++j)
        state.amplitudes[j] = evaluator.fn(grid.point(j), time);
    return state;
}

// Same result to better than 1e-12 relative, via the term decomposition when
// the evaluator carries one. This is the path benchmarks and bulk CSV output
// use; exactness tests use sample().
inline GridState sample_slice(const SolutionEvaluator& evaluator, const Grid& grid,
                              double time) {
    if (!evaluator.terms)
        return sample(evaluator, grid, time);
    GridState state{grid, time, std::vector<complex>(grid.n, complex{0.0, 0.0})};
    const auto terms = evaluator.terms(time);
    for (const auto& term : terms)
        detail::accumulate_exp_quadratic(term, grid.x_min, grid.spacing(), grid.n,
                                         state.amplitudes.data());
    return state;
}

inline double grid_norm(const GridState& state) {
    double sum = 0.0;
    for (const auto& a : state.amplitudes) sum += std::norm(a);
    return std::sqrt(sum * state.grid.spacing());
}

inline double l2_distance(const GridState& a, const GridState& b) {
    if (!grids_match(a.grid, b.grid))
        throw validation_error("l2_distance requires matching grids");
    double sum = 0.0;
    for (std::size_t j = 0; j < a.amplitudes.size(); ++j)
        sum += std::norm(a.amplitudes[j] - b.amplitudes[j]);
    return std::sqrt(sum * a.grid.spacing());
}

} // namespace quenchmap
