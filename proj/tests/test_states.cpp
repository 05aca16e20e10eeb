#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

using namespace quenchmap;

namespace {
const PhysicalParams params{};
}

TEST_CASE("gaussian packet validates its spec") {
    CHECK_THROWS_AS(gaussian_packet(GaussianSpec{0.0, 0.0, 0.0}, params), validation_error);
    CHECK_THROWS_AS(gaussian_packet(GaussianSpec{-1.5, 0.0, 0.0}, params), validation_error);
    CHECK_NOTHROW(gaussian_packet(GaussianSpec{1.5, 2.0, -4.0}, params));
}

TEST_CASE("packet closed form agrees with its quadratic-term expansion") {
    SolutionEvaluator packet = gaussian_packet(GaussianSpec{1.5, 0.4, 4.0}, params);
    REQUIRE(packet.terms);
    for (double t : {0.0, 0.8, -1.3}) {
        auto terms = packet.terms(t);
        REQUIRE(terms.size() == 1);
        const auto& term = terms[0];
        for (double x : {-3.0, 0.0, 0.4, 2.7}) {
            complex via_terms =
                term.pref * std::exp(term.a0 + term.a1 * x + term.a2 * x * x);
            complex direct = packet(x, t);
            CHECK(std::abs(via_terms - direct) < 1e-13 * (1.0 + std::abs(direct)));
        }
    }
}

TEST_CASE("packet center drifts with the boost velocity") {
    SolutionEvaluator packet = gaussian_packet(GaussianSpec{1.5, 0.4, 4.0}, params);
    Grid g = make_grid(-40.0, 40.0, 4096);
    for (double t : {0.0, 0.7, 2.0}) {
        Observables obs = observables(sample_slice(packet, g, t));
        CHECK(obs.norm == Catch::Approx(1.0).epsilon(1e-10));
        CHECK(obs.mean_x == Catch::Approx(0.4 + 4.0 * t).margin(1e-9));
    }
}

TEST_CASE("free packet width follows the spreading law") {
    SolutionEvaluator packet = gaussian_packet(GaussianSpec{1.5, 0.0, 0.0}, params);
    Grid g = make_grid(-40.0, 40.0, 4096);
    Observables at0 = observables(sample_slice(packet, g, 0.0));
    CHECK(at0.var_x == Catch::Approx(1.125).margin(1e-9));  // sigma0^2 / 2
    Observables at13 = observables(sample_slice(packet, g, 1.3));
    // (sigma0^2 + (hbar t / (m sigma0))^2) / 2
    CHECK(at13.var_x == Catch::Approx(1.5005555555555556).margin(1e-9));
}

TEST_CASE("superposition renormalizes on its reference grid") {
    Grid g = make_grid(-20.0, 20.0, 2048);
    SolutionEvaluator sup = qmtest::counter_superposition(g, params);
    CHECK(grid_norm(sample_slice(sup, g, 0.0)) == Catch::Approx(1.0).epsilon(1e-12));

    // the two unit-weight components at p0 = +-4 are nearly orthogonal, so
    // the raw norm sits at sqrt(2) and the stored weights carry 1/sqrt(2)
    SolutionEvaluator one = gaussian_packet(GaussianSpec{1.5, 0.0, 4.0}, params);
    complex sum = one(0.0, 0.0) + gaussian_packet(GaussianSpec{1.5, 0.0, -4.0}, params)(0.0, 0.0);
    CHECK(std::abs(sup(0.0, 0.0) * std::sqrt(2.0) - sum) < 1e-12);
}

TEST_CASE("superposition rejects a state that cancels itself") {
    Grid g = make_grid(-20.0, 20.0, 1024);
    GaussianSpec spec{1.5, 0.0, 4.0};
    std::vector<PacketComponent> parts = {PacketComponent{spec, {1.0, 0.0}},
                                          PacketComponent{spec, {-1.0, 0.0}}};
    CHECK_THROWS_AS(superposition(parts, params, g), validation_error);
    CHECK_THROWS_AS(superposition({}, params, g), validation_error);
}

TEST_CASE("hermite functions are orthonormal") {
    // quadrature on a dense grid is enough at these indices
    const double lo = -12.0, hi = 12.0;
    const std::size_t n = 6001;
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (unsigned a = 0; a <= 5; ++a) {
        for (unsigned b = a; b <= 5; ++b) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                double y = lo + h * static_cast<double>(j);
                acc += hermite_function(a, y) * hermite_function(b, y);
            }
            acc *= h;
            double want = (a == b) ? 1.0 : 0.0;
            CHECK(acc == Catch::Approx(want).margin(1e-10));
        }
    }
}

TEST_CASE("hermite function pins known values") {
    CHECK(hermite_function(0, 0.0) == Catch::Approx(std::pow(std::numbers::pi, -0.25)));
    CHECK(hermite_function(1, 0.0) == 0.0);
    CHECK(hermite_function(2, 0.7) == Catch::Approx(-0.008314294079538848).margin(1e-15));
}

TEST_CASE("oscillator eigenstates carry the right time phase") {
    TrapSpec trap{5.0};
    double omega = trap.omega(params);
    for (unsigned n : {0u, 1u, 4u}) {
        SolutionEvaluator u = oscillator_eigenstate(n, trap, params);
        CHECK(u.kind == PdeKind::trapped);
        double energy = params.hbar * omega * (n + 0.5);
        for (double tau : {0.3, 1.1}) {
            complex rotated =
                u(0.6, tau) * std::exp(complex{0.0, energy * tau / params.hbar});
            CHECK(std::abs(rotated - u(0.6, 0.0)) < 1e-14);
        }
    }
}

TEST_CASE("eigenstates are normalized on an adequate grid") {
    TrapSpec trap{5.0};
    Grid g = make_grid(-15.0, 15.0, 2048);
    for (unsigned n : {0u, 3u, 10u}) {
        SolutionEvaluator u = oscillator_eigenstate(n, trap, params);
        CHECK(grid_norm(sample(u, g, 0.0)) == Catch::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("eigenstate index is capped") {
    TrapSpec trap{5.0};
    CHECK_NOTHROW(oscillator_eigenstate(max_eigenstate_index, trap, params));
    CHECK_THROWS_AS(oscillator_eigenstate(max_eigenstate_index + 1, trap, params),
                    resource_limit_error);
}
