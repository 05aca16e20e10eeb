#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "quenchmap/core.hpp"

namespace quenchmap {

struct FreeCoords {
    double x = 0.0;
    double t = 0.0;
};

struct TrapCoords {
    double xi = 0.0;
    double tau = 0.0;
};

// f(x,t;b) = exp(i alpha t x^2 / (4 (t^2 + b^2))) / (1 + t^2/b^2)^{1/4}
inline complex phase_factor_f(double x, double t, double b, const PhysicalParams& params) {
    const double theta = params.alpha() * t * x * x / (4.0 * (t * t + b * b));
    const double mod = std::pow(1.0 + (t / b) * (t / b), -0.25);
    return complex{mod * std::cos(theta), mod * std::sin(theta)};
}

namespace detail {

// exp(-i pi/2 * m), exact for integer m.
inline complex quarter_turns(long m) {
    switch (((m % 4) + 4) % 4) {
        case 0: return complex{1.0, 0.0};
        case 1: return complex{0.0, -1.0};
        case 2: return complex{-1.0, 0.0};
        default: return complex{0.0, 1.0};
    }
}

// Everything about the forward coordinate change that depends only on tau.
struct ForwardFactors {
    double cosine;     // cos(omega tau)
    double x_scale;    // x = x_scale * xi
    double t;          // free-side time
    double mod;        // (1 + (t/b)^2)^{1/4}, reciprocal of |f|
    double theta_coef; // phase of f is theta_coef * x^2
    long branch;       // focal crossings: floor(omega tau / pi + 1/2)
};

inline ForwardFactors forward_factors(double tau, double omega, const MapParams& mp,
                                      double alpha) {
    ForwardFactors ff{};
    const double wt = omega * tau;
    ff.cosine = std::cos(wt);
    if (std::abs(ff.cosine) <= eps_singular)
        throw singular_time_error(tau, std::abs(ff.cosine));
    ff.x_scale = mp.sqrt_b_omega / ff.cosine;
    ff.t = mp.b * std::tan(wt);
    const double tb = ff.t / mp.b;
    ff.mod = std::pow(1.0 + tb * tb, 0.25);
    ff.theta_coef = alpha * ff.t / (4.0 * (ff.t * ff.t + mp.b * mp.b));
    ff.branch = static_cast<long>(std::floor(wt / std::numbers::pi + 0.5));
    return ff;
}

struct InverseFactors {
    double tau;        // trap-side time
    double xi_scale;   // xi = xi_scale * x
    double mod;        // (1 + (t/b)^2)^{-1/4} = |f|
    double theta_coef; // phase of f is theta_coef * x^2
};

inline InverseFactors inverse_factors(double t, double omega, const MapParams& mp,
                                      double alpha) {
    InverseFactors iv{};
    const double tb = t / mp.b;
    iv.tau = std::atan(tb) / omega;
    iv.xi_scale = 1.0 / (mp.sqrt_b_omega * std::sqrt(1.0 + tb * tb));
    iv.mod = std::pow(1.0 + tb * tb, -0.25);
    iv.theta_coef = alpha * t / (4.0 * (t * t + mp.b * mp.b));
    return iv;
}

// Per-tau factors of the trap(k) -> trap(K) concatenated map with the
// natural b = 1/omega on both sides.
struct ConcatFactors {
    double cosine;     // cos(Omega tau)
    double xi_scale;   // Xi = xi_scale * xi
    double T;          // source-trap time, branch-unwrapped
    double x_scale;    // intermediate free x = x_scale * xi
    double mod_ratio;  // |f(..;1/omega)| / |f(..;1/Omega)| reciprocal part
    double theta_coef; // net phase is theta_coef * xi^2
    long branch;       // focal crossings of the target trap
};

inline ConcatFactors concat_factors(double tau, double omega_from, double omega_to,
                                    double k_ratio, double alpha) {
    ConcatFactors cf{};
    const double wt = omega_to * tau;
    cf.cosine = std::cos(wt);
    if (std::abs(cf.cosine) <= eps_singular)
        throw singular_time_error(tau, std::abs(cf.cosine));
    const double sine = std::sin(wt);
    cf.xi_scale = 1.0 / std::sqrt(cf.cosine * cf.cosine + k_ratio * sine * sine);
    cf.branch = static_cast<long>(std::floor(wt / std::numbers::pi + 0.5));
    cf.T = (std::atan(std::sqrt(k_ratio) * std::tan(wt)) +
            static_cast<double>(cf.branch) * std::numbers::pi) /
           omega_from;
    cf.x_scale = 1.0 / cf.cosine;
    const double t = std::tan(wt) / omega_to;
    const double b1 = 1.0 / omega_from;
    const double b2 = 1.0 / omega_to;
    const double r1 = 1.0 + (t / b1) * (t / b1);
    const double r2 = 1.0 + (t / b2) * (t / b2);
    cf.mod_ratio = std::pow(r2 / r1, 0.25);
    const double c1 = alpha * t / (4.0 * (t * t + b1 * b1));
    const double c2 = alpha * t / (4.0 * (t * t + b2 * b2));
    cf.theta_coef = (c1 - c2) * cf.x_scale * cf.x_scale;
    return cf;
}

inline void require_kind(const SolutionEvaluator& ev, PdeKind kind, const char* what) {
    if (ev.kind != kind)
        throw validation_error(std::string(what) + ": evaluator solves the wrong equation");
}

inline void require_trap(const SolutionEvaluator& ev, const TrapSpec& trap, const char* what) {
    if (!ev.trap || std::abs(ev.trap->k - trap.k) > 1e-12 * std::abs(trap.k))
        throw validation_error(std::string(what) +
                               ": evaluator is not tagged with the expected trap");
}

} // namespace detail

inline FreeCoords free_coords_from_trap(double xi, double tau, const TrapSpec& trap,
                                        const MapParams& mp, const PhysicalParams& params) {
    const auto ff =
        detail::forward_factors(tau, trap.omega(params), mp, params.alpha());
    return FreeCoords{ff.x_scale * xi, ff.t};
}

inline TrapCoords trap_coords_from_free(double x, double t, const TrapSpec& trap,
                                        const MapParams& mp, const PhysicalParams& params) {
    const auto iv =
        detail::inverse_factors(t, trap.omega(params), mp, params.alpha());
    return TrapCoords{iv.xi_scale * x, iv.tau};
}

inline TrapCoords concat_coords(double xi, double tau, const TrapSpec& from,
                                const TrapSpec& to, const PhysicalParams& params) {
    const auto cf = detail::concat_factors(tau, from.omega(params), to.omega(params),
                                           from.k / to.k, params.alpha());
    return TrapCoords{cf.xi_scale * xi, cf.T};
}

// psi(xi, tau) = N * phi(x, t) / f(x, t; b) with the forward coordinate
// change, times a quarter turn of phase for every focal crossing. The
// principal-branch formula alone is pi-periodic in omega*tau, but the true
// solution advances by exp(-i pi/2) across each focus (the mapped ground
// state must carry exp(-i omega tau / 2)); the branch factor restores that,
// making the result continuous in tau away from the foci. With natural b
// every factor is exactly 1 at tau = 0, so the mapped state reproduces
// phi(xi, 0) bit for bit.
inline SolutionEvaluator map_free_to_trapped(const SolutionEvaluator& phi,
                                             const TrapSpec& trap, const MapParams& mp,
                                             const PhysicalParams& params) {
    detail::require_kind(phi, PdeKind::free_particle, "map_free_to_trapped");
    trap.validate();
    params.validate();
    const double omega = trap.omega(params);
    const double alpha = params.alpha();
    const double norm = mp.norm_factor;

    SolutionEvaluator psi;
    psi.kind = PdeKind::trapped;
    psi.trap = trap;
    psi.fn = [fn = phi.fn, omega, mp, alpha, norm](double xi, double tau) {
        const auto ff = detail::forward_factors(tau, omega, mp, alpha);
        const double x = ff.x_scale * xi;
        const double theta = ff.theta_coef * x * x;
        const complex unwind{std::cos(theta), -std::sin(theta)};
        return norm * ff.mod * fn(x, ff.t) * unwind * detail::quarter_turns(ff.branch);
    };
    if (phi.terms) {
        psi.terms = [terms = phi.terms, omega, mp, alpha, norm](double tau) {
            const auto ff = detail::forward_factors(tau, omega, mp, alpha);
            auto list = terms(ff.t);
            const double s = ff.x_scale;
            const complex turn = detail::quarter_turns(ff.branch);
            for (auto& term : list) {
                term.pref *= norm * ff.mod * turn;
                term.a1 *= s;
                term.a2 = (term.a2 - complex{0.0, ff.theta_coef}) * (s * s);
            }
            return list;
        };
    }
    return psi;
}

// phi(x, t) = psi(xi, tau) * f(x, t; b) / N, the exact inverse of the above.
inline SolutionEvaluator map_trapped_to_free(const SolutionEvaluator& psi,
                                             const TrapSpec& trap, const MapParams& mp,
                                             const PhysicalParams& params) {
    detail::require_kind(psi, PdeKind::trapped, "map_trapped_to_free");
    detail::require_trap(psi, trap, "map_trapped_to_free");
    trap.validate();
    params.validate();
    const double omega = trap.omega(params);
    const double alpha = params.alpha();
    const double inv_norm = 1.0 / mp.norm_factor;

    SolutionEvaluator phi;
    phi.kind = PdeKind::free_particle;
    phi.fn = [fn = psi.fn, omega, mp, alpha, inv_norm](double x, double t) {
        const auto iv = detail::inverse_factors(t, omega, mp, alpha);
        const double theta = iv.theta_coef * x * x;
        const complex wind{std::cos(theta), std::sin(theta)};
        return inv_norm * iv.mod * fn(iv.xi_scale * x, iv.tau) * wind;
    };
    if (psi.terms) {
        phi.terms = [terms = psi.terms, omega, mp, alpha, inv_norm](double t) {
            const auto iv = detail::inverse_factors(t, omega, mp, alpha);
            auto list = terms(iv.tau);
            const double r = iv.xi_scale;
            for (auto& term : list) {
                term.pref *= inv_norm * iv.mod;
                term.a1 *= r;
                term.a2 = term.a2 * (r * r) + complex{0.0, iv.theta_coef};
            }
            return list;
        };
    }
    return phi;
}

// Direct trap(k) -> trap(K) map. The arctan branch is unwrapped so the
// source time T is continuous and strictly increasing in tau. No explicit
// quarter-turn factor appears here: evaluating the source state at the
// unwrapped T picks up exactly one of its own focal-crossing turns per
// target-trap focus, which is the whole correction. With that, this equals
// the explicit composition through the free equation wherever both are
// defined, and reduces to the identity when K == k.
inline SolutionEvaluator map_trapped_to_trapped(const SolutionEvaluator& psi,
                                                const TrapSpec& from, const TrapSpec& to,
                                                const PhysicalParams& params) {
    detail::require_kind(psi, PdeKind::trapped, "map_trapped_to_trapped");
    detail::require_trap(psi, from, "map_trapped_to_trapped");
    from.validate();
    to.validate();
    params.validate();
    const double omega_from = from.omega(params);
    const double omega_to = to.omega(params);
    const double k_ratio = from.k / to.k;
    const double alpha = params.alpha();

    SolutionEvaluator out;
    out.kind = PdeKind::trapped;
    out.trap = to;
    out.fn = [fn = psi.fn, omega_from, omega_to, k_ratio, alpha](double xi, double tau) {
        const auto cf = detail::concat_factors(tau, omega_from, omega_to, k_ratio, alpha);
        const double theta = cf.theta_coef * xi * xi;
        const complex wind{std::cos(theta), std::sin(theta)};
        return cf.mod_ratio * fn(cf.xi_scale * xi, cf.T) * wind;
    };
    if (psi.terms) {
        out.terms = [terms = psi.terms, omega_from, omega_to, k_ratio, alpha](double tau) {
            const auto cf = detail::concat_factors(tau, omega_from, omega_to, k_ratio, alpha);
            auto list = terms(cf.T);
            const double s = cf.xi_scale;
            for (auto& term : list) {
                term.pref *= cf.mod_ratio;
                term.a1 *= s;
                term.a2 = term.a2 * (s * s) + complex{0.0, cf.theta_coef};
            }
            return list;
        };
    }
    return out;
}

// Shifts the time origin: result(x, t) = ev(x, t + delta). Time translation
// keeps solutions solutions, which is what scenario eras anchored at the
// quench instant need.
inline SolutionEvaluator shift_time(const SolutionEvaluator& ev, double delta) {
    SolutionEvaluator out;
    out.kind = ev.kind;
    out.trap = ev.trap;
    out.fn = [fn = ev.fn, delta](double x, double t) { return fn(x, t + delta); };
    if (ev.terms)
        out.terms = [terms = ev.terms, delta](double t) { return terms(t + delta); };
    return out;
}

} // namespace quenchmap
