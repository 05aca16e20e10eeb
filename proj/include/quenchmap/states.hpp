#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "quenchmap/core.hpp"

namespace quenchmap {

inline constexpr unsigned max_eigenstate_index = 512;

struct GaussianSpec {
    double sigma0 = 1.0;
    double x0 = 0.0;
    double p0 = 0.0;

    void validate() const {
        if (!(sigma0 > 0.0) || !std::isfinite(sigma0))
            throw validation_error("packet sigma0 must be a positive finite number");
        if (!std::isfinite(x0) || !std::isfinite(p0))
            throw validation_error("packet x0 and p0 must be finite");
    }
};

struct PacketComponent {
    GaussianSpec packet;
    complex weight{1.0, 0.0};
};

namespace detail {

inline complex packet_width(const GaussianSpec& spec, const PhysicalParams& params,
                            double t) {
    return complex{spec.sigma0, t * params.hbar / (spec.sigma0 * params.mass)};
}

inline GaussianTerm packet_term(const GaussianSpec& spec, const PhysicalParams& params,
                                double t) {
    const complex st = packet_width(spec, params, t);
    const double v0 = spec.p0 / params.mass;
    const double mu = spec.x0 + v0 * t;
    const complex inv2ss = 1.0 / (2.0 * spec.sigma0 * st);
    GaussianTerm term;
    term.pref = 1.0 / std::sqrt(std::sqrt(std::numbers::pi) * st);
    term.a2 = -inv2ss;
    term.a1 = complex{0.0, spec.p0 / params.hbar} + 2.0 * mu * inv2ss;
    term.a0 = -mu * mu * inv2ss -
              complex{0.0, spec.p0 * spec.x0 / params.hbar +
                               spec.p0 * spec.p0 * t / (2.0 * params.mass * params.hbar)};
    return term;
}

inline complex packet_value(const GaussianSpec& spec, const PhysicalParams& params,
                            double x, double t) {
    const complex st = packet_width(spec, params, t);
    const complex pref = 1.0 / std::sqrt(std::sqrt(std::numbers::pi) * st);
    const double u = x - spec.x0;
    const double v0 = spec.p0 / params.mass;
    const complex arg =
        complex{0.0, (spec.p0 * u - spec.p0 * spec.p0 * t / (2.0 * params.mass)) /
                         params.hbar} -
        (u - v0 * t) * (u - v0 * t) / (2.0 * spec.sigma0 * st);
    return pref * std::exp(arg);
}

struct HermiteStep {
    double a; // sqrt(2/(m+1))
    double b; // sqrt(m/(m+1))
};

inline HermiteStep hermite_step(unsigned m) {
    const double mp1 = static_cast<double>(m) + 1.0;
    return HermiteStep{std::sqrt(2.0 / mp1), std::sqrt(static_cast<double>(m) / mp1)};
}

} // namespace detail

// Orthonormal Hermite function h_n(y), i.e. the n-th eigenfunction of the
// unit-parameter oscillator. Stable three-term recurrence on the normalized
// functions; values stay order one so there is no overflow for any supported n.
inline double hermite_function(unsigned n, double y) {
    double prev = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * y * y);
    if (n == 0) return prev;
    double cur = std::numbers::sqrt2 * y * prev;
    for (unsigned m = 1; m < n; ++m) {
        const auto step = detail::hermite_step(m);
        const double next = step.a * y * cur - step.b * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

// Moving spreading Gaussian, an exact free-particle solution with
// <x>(t) = x0 + (p0/M) t. Width sigma(t) = sigma0 + i t hbar/(sigma0 M).
inline SolutionEvaluator gaussian_packet(const GaussianSpec& spec,
                                         const PhysicalParams& params) {
    spec.validate();
    params.validate();
    SolutionEvaluator ev;
    ev.kind = PdeKind::free_particle;
    ev.fn = [spec, params](double x, double t) {
        return detail::packet_value(spec, params, x, t);
    };
    ev.terms = [spec, params](double t) {
        return std::vector<GaussianTerm>{detail::packet_term(spec, params, t)};
    };
    return ev;
}

// Weighted sum of packets, renormalized so the grid norm on reference_grid at
// t = 0 is 1. A single unit-weight component reproduces gaussian_packet up to
// that normalization constant (which is 1 to rounding when the grid covers
// the packet).
inline SolutionEvaluator superposition(const std::vector<PacketComponent>& components,
                                       const PhysicalParams& params,
                                       const Grid& reference_grid) {
    if (components.empty())
        throw validation_error("superposition needs at least one component");
    params.validate();
    for (const auto& c : components) c.packet.validate();

    auto value_with = [components, params](const std::vector<complex>& weights, double x,
                                           double t) {
        complex sum{0.0, 0.0};
        for (std::size_t i = 0; i < components.size(); ++i)
            sum += weights[i] * detail::packet_value(components[i].packet, params, x, t);
        return sum;
    };

    std::vector<complex> weights;
    weights.reserve(components.size());
    for (const auto& c : components) weights.push_back(c.weight);

    double norm_sq = 0.0;
    for (std::size_t j = 0; j < reference_grid.n; ++j)
        norm_sq += std::norm(value_with(weights, reference_grid.point(j), 0.0));
    const double norm = std::sqrt(norm_sq * reference_grid.spacing());
    if (norm <= 1e-12)
        throw validation_error("superposition is degenerate: grid norm at t=0 is " +
                               std::to_string(norm));
    for (auto& w : weights) w /= norm;

    SolutionEvaluator ev;
    ev.kind = PdeKind::free_particle;
    ev.fn = [value_with, weights](double x, double t) { return value_with(weights, x, t); };
    ev.terms = [components, params, weights](double t) {
        std::vector<GaussianTerm> list;
        list.reserve(components.size());
        for (std::size_t i = 0; i < components.size(); ++i) {
            GaussianTerm term = detail::packet_term(components[i].packet, params, t);
            term.pref *= weights[i];
            list.push_back(term);
        }
        return list;
    };
    return ev;
}

// Stationary state u_n(xi) e^{-i E_n tau / hbar} of the trapped equation,
// E_n = hbar omega (n + 1/2).
inline SolutionEvaluator oscillator_eigenstate(unsigned n, const TrapSpec& trap,
                                               const PhysicalParams& params) {
    trap.validate();
    params.validate();
    if (n > max_eigenstate_index)
        throw resource_limit_error("eigenstate index " + std::to_string(n) +
                                   " exceeds the supported maximum " +
                                   std::to_string(max_eigenstate_index));
    const double omega = trap.omega(params);
    const double ell = std::sqrt(params.hbar / (params.mass * omega));
    const double energy_rate = omega * (static_cast<double>(n) + 0.5);

    SolutionEvaluator ev;
    ev.kind = PdeKind::trapped;
    ev.trap = trap;
    ev.fn = [n, ell, energy_rate](double xi, double tau) {
        const double u = hermite_function(n, xi / ell) / std::sqrt(ell);
        const double phase = -energy_rate * tau;
        return complex{u * std::cos(phase), u * std::sin(phase)};
    };
    return ev;
}

} // namespace quenchmap
