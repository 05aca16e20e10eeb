#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace quenchmap;

namespace {

const PhysicalParams params{};
const TrapSpec trap5{5.0};

SolutionEvaluator mapped_counter_state(const Grid& grid) {
    SolutionEvaluator free_state = qmtest::counter_superposition(grid, params);
    return map_free_to_trapped(free_state, trap5, MapParams::natural(trap5, params), params);
}

}  // namespace

TEST_CASE("phase factor pins its closed form") {
    complex f = phase_factor_f(1.0, 1.0, 1.0, params);
    // alpha = 2: modulus 2^{-1/4}, phase x^2 t alpha / (4 (t^2+b^2)) = 1/4
    CHECK(f.real() == Catch::Approx(0.8147549821112765).epsilon(1e-15));
    CHECK(f.imag() == Catch::Approx(0.20804110245670437).epsilon(1e-15));
    CHECK(phase_factor_f(3.2, 0.0, 0.7, params) == complex{1.0, 0.0});
}

TEST_CASE("coordinate changes invert each other") {
    MapParams mp = MapParams::with_b(0.8, trap5, params);
    std::mt19937_64 rng(42u);
    std::uniform_real_distribution<double> xs(-5.0, 5.0);
    std::uniform_real_distribution<double> taus(-0.6, 0.6);  // inside one branch window
    for (int i = 0; i < 200; ++i) {
        double xi = xs(rng);
        double tau = taus(rng);
        FreeCoords fc = free_coords_from_trap(xi, tau, trap5, mp, params);
        TrapCoords back = trap_coords_from_free(fc.x, fc.t, trap5, mp, params);
        CHECK(std::abs(back.xi - xi) < 1e-12 * (1.0 + std::abs(xi)));
        CHECK(std::abs(back.tau - tau) < 1e-13);
    }
}

TEST_CASE("mapped state reproduces the seed bit for bit at tau zero") {
    Grid g = make_grid(-20.0, 20.0, 2048);
    SolutionEvaluator free_state = qmtest::counter_superposition(g, params);
    SolutionEvaluator psi =
        map_free_to_trapped(free_state, trap5, MapParams::natural(trap5, params), params);
    for (double xi : {-7.3, -1.0, 0.0, 0.25, 2.0, 11.5}) {
        complex a = psi(xi, 0.0);
        complex b = free_state(xi, 0.0);
        CHECK(a.real() == b.real());
        CHECK(a.imag() == b.imag());
    }
    GridState fast = sample_slice(psi, g, 0.0);
    GridState seed = sample_slice(free_state, g, 0.0);
    CHECK(l2_distance(fast, seed) == 0.0);
}

TEST_CASE("mapping a width-matched packet yields the trapped ground state") {
    // sigma0 = sqrt(hbar / (m omega)) turns the packet into the n = 0
    // eigenstate, so the mapped amplitude must equal u0(xi) exp(-i omega tau / 2)
    // for all tau, including past the quarter-period focus.
    double omega = trap5.omega(params);
    double ell = std::sqrt(params.hbar / (params.mass * omega));
    SolutionEvaluator packet = gaussian_packet(GaussianSpec{ell, 0.0, 0.0}, params);
    SolutionEvaluator psi =
        map_free_to_trapped(packet, trap5, MapParams::natural(trap5, params), params);
    SolutionEvaluator u0 = oscillator_eigenstate(0, trap5, params);

    for (double tau : {0.1, 0.5, 1.0, 1.7, 2.4, 3.3, 4.1, -0.9, -2.2}) {
        for (double xi : {-1.4, -0.3, 0.0, 0.6, 1.8}) {
            CHECK(std::abs(psi(xi, tau) - u0(xi, tau)) < 1e-13);
        }
    }
}

TEST_CASE("mapped states are antiperiodic over one trap period") {
    Grid g = make_grid(-20.0, 20.0, 1024);
    SolutionEvaluator psi = mapped_counter_state(g);
    double period = 2.0 * std::numbers::pi / trap5.omega(params);
    for (double tau : {0.05, 0.4, 1.1, 1.9}) {
        for (double xi : {-3.0, -0.7, 0.4, 2.6}) {
            complex now = psi(xi, tau);
            complex later = psi(xi, tau + period);
            CHECK(std::abs(later + now) < 1e-12 * (1.0 + std::abs(now)));
        }
    }
}

TEST_CASE("forward then inverse map restores the free state") {
    Grid g = make_grid(-20.0, 20.0, 1024);
    SolutionEvaluator free_state = qmtest::counter_superposition(g, params);
    MapParams mp = MapParams::natural(trap5, params);
    SolutionEvaluator psi = map_free_to_trapped(free_state, trap5, mp, params);
    SolutionEvaluator back = map_trapped_to_free(psi, trap5, mp, params);

    std::mt19937_64 rng(7u);
    std::uniform_real_distribution<double> xs(-6.0, 6.0);
    std::uniform_real_distribution<double> ts(-3.0, 3.0);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        double x = xs(rng);
        double t = ts(rng);
        worst = std::max(worst, std::abs(back(x, t) - free_state(x, t)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("general width parameter keeps the roundtrip exact") {
    MapParams mp = MapParams::with_b(1.7, trap5, params);
    SolutionEvaluator packet = gaussian_packet(GaussianSpec{1.5, 0.5, 2.0}, params);
    SolutionEvaluator psi = map_free_to_trapped(packet, trap5, mp, params);
    SolutionEvaluator back = map_trapped_to_free(psi, trap5, mp, params);
    for (double x : {-4.0, -0.8, 0.0, 1.3, 3.6}) {
        for (double t : {-2.0, -0.3, 0.0, 0.9, 2.5}) {
            CHECK(std::abs(back(x, t) - packet(x, t)) < 1e-13);
        }
    }
    // at tau = 0 the general-b map rescales the argument by sqrt(b omega)
    double s = mp.sqrt_b_omega;
    for (double xi : {-1.2, 0.4, 2.0}) {
        complex got = psi(xi, 0.0);
        complex want = mp.norm_factor * packet(s * xi, 0.0);
        CHECK(std::abs(got - want) < 1e-14 * (1.0 + std::abs(want)));
    }
}

TEST_CASE("trap change with equal stiffness is the identity") {
    Grid g = make_grid(-20.0, 20.0, 1024);
    SolutionEvaluator psi = mapped_counter_state(g);
    SolutionEvaluator same = map_trapped_to_trapped(psi, trap5, trap5, params);
    std::mt19937_64 rng(123u);
    std::uniform_real_distribution<double> xs(-4.0, 4.0);
    std::uniform_real_distribution<double> taus(-2.5, 2.5);
    double omega = trap5.omega(params);
    int kept = 0;
    double worst = 0.0;
    while (kept < 300) {
        double xi = xs(rng);
        double tau = taus(rng);
        if (std::abs(std::cos(omega * tau)) < 0.05) continue;
        worst = std::max(worst, std::abs(same(xi, tau) - psi(xi, tau)));
        ++kept;
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("direct trap change matches the composed route") {
    Grid g = make_grid(-20.0, 20.0, 1024);
    SolutionEvaluator psi = mapped_counter_state(g);
    TrapSpec trap1{1.0};
    MapParams mp5 = MapParams::natural(trap5, params);
    MapParams mp1 = MapParams::natural(trap1, params);

    SolutionEvaluator direct = map_trapped_to_trapped(psi, trap5, trap1, params);
    SolutionEvaluator composed =
        map_free_to_trapped(map_trapped_to_free(psi, trap5, mp5, params), trap1, mp1, params);

    std::mt19937_64 rng(321u);
    std::uniform_real_distribution<double> xs(-4.0, 4.0);
    // several branch windows of the target trap (omega_to = 1)
    std::uniform_real_distribution<double> taus(-2.8, 2.8);
    int kept = 0;
    double worst = 0.0;
    while (kept < 500) {
        double xi = xs(rng);
        double tau = taus(rng);
        if (std::abs(std::cos(tau)) < 0.05) continue;
        complex a, b;
        try {
            a = direct(xi, tau);
            b = composed(xi, tau);
        } catch (const singular_time_error&) {
            continue;
        }
        worst = std::max(worst, std::abs(a - b));
        ++kept;
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("maps reject states of the wrong kind") {
    Grid g = make_grid(-20.0, 20.0, 512);
    SolutionEvaluator free_state = gaussian_packet(GaussianSpec{1.5, 0.0, 4.0}, params);
    SolutionEvaluator psi = mapped_counter_state(g);
    MapParams mp = MapParams::natural(trap5, params);

    CHECK_THROWS_AS(map_free_to_trapped(psi, trap5, mp, params), validation_error);
    CHECK_THROWS_AS(map_trapped_to_free(free_state, trap5, mp, params), validation_error);
    TrapSpec other{2.0};
    CHECK_THROWS_AS(map_trapped_to_free(psi, other, MapParams::natural(other, params), params),
                    validation_error);
    CHECK_THROWS_AS(map_trapped_to_trapped(free_state, trap5, other, params), validation_error);
}

TEST_CASE("inverse map is singular at the focal times") {
    Grid g = make_grid(-20.0, 20.0, 512);
    SolutionEvaluator psi = mapped_counter_state(g);
    MapParams mp = MapParams::natural(trap5, params);
    SolutionEvaluator back = map_trapped_to_free(psi, trap5, mp, params);
    double omega = trap5.omega(params);
    double focus = std::numbers::pi / (2.0 * omega);
    CHECK_THROWS_AS(psi(0.5, focus), singular_time_error);
    CHECK_NOTHROW(psi(0.5, focus + 0.01));
    CHECK_NOTHROW(back(0.5, focus));  // the inverse side has no finite-time singularity

    try {
        psi(0.5, focus);
        FAIL("expected singular_time_error");
    } catch (const singular_time_error& e) {
        CHECK(e.tau() == Catch::Approx(focus));
    }
}

TEST_CASE("shift_time relabels the time axis exactly") {
    SolutionEvaluator packet = gaussian_packet(GaussianSpec{1.5, 0.0, 4.0}, params);
    SolutionEvaluator shifted = shift_time(packet, 0.75);
    for (double x : {-2.0, 0.3, 1.9}) {
        for (double t : {-1.0, 0.0, 0.6}) {
            complex a = shifted(x, t);
            complex b = packet(x, t + 0.75);
            CHECK(a.real() == b.real());
            CHECK(a.imag() == b.imag());
        }
    }
    CHECK(shifted.kind == packet.kind);
    REQUIRE(shifted.terms);
}
