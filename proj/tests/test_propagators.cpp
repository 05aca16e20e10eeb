#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <cmath>
#include <complex>
#include <numbers>

using namespace quenchmap;

namespace {
const PhysicalParams params{};
const TrapSpec trap5{5.0};
}

TEST_CASE("spectral free evolution is exact for a packet") {
    SolutionEvaluator packet = gaussian_packet(GaussianSpec{1.5, 0.0, 4.0}, params);
    Grid g = make_grid(-40.0, 40.0, 4096);
    GridState start = sample_slice(packet, g, 0.0);
    GridState evolved = evolve_free_spectral(start, 1.3, params);
    CHECK(evolved.time == 1.3);
    GridState exact = sample_slice(packet, g, 1.3);
    CHECK(l2_distance(evolved, exact) < 1e-10);
    CHECK(grid_norm(evolved) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectral evolution composes and reverses") {
    SolutionEvaluator packet = gaussian_packet(GaussianSpec{1.5, 0.0, 4.0}, params);
    Grid g = make_grid(-40.0, 40.0, 2048);
    GridState start = sample_slice(packet, g, 0.0);
    GridState there = evolve_free_spectral(start, 2.0, params);
    GridState back = evolve_free_spectral(there, 0.0, params);
    CHECK(l2_distance(back, start) < 1e-12);
}

TEST_CASE("split-step holds the ground state fixed up to a phase") {
    double omega = trap5.omega(params);
    SolutionEvaluator u0 = oscillator_eigenstate(0, trap5, params);
    Grid g = make_grid(-10.0, 10.0, 1024);
    GridState start = sample(u0, g, 0.0);
    double tau = 0.4;
    GridState evolved = evolve_split_step(start, tau, 1e-3, trap5, params);
    GridState exact = sample(u0, g, tau);
    CHECK(l2_distance(evolved, exact) < 1e-6);
    CHECK(grid_norm(evolved) == Catch::Approx(grid_norm(start)).epsilon(1e-12));
    (void)omega;
}

TEST_CASE("split-step error scales at second order in the step") {
    Grid g = make_grid(-20.0, 20.0, 1024);
    SolutionEvaluator free_state = qmtest::counter_superposition(g, params);
    SolutionEvaluator psi =
        map_free_to_trapped(free_state, trap5, MapParams::natural(trap5, params), params);
    GridState start = sample_slice(psi, g, 0.0);
    GridState exact = sample_slice(psi, g, 0.45);

    double err_coarse = l2_distance(evolve_split_step(start, 0.45, 2e-3, trap5, params), exact);
    double err_fine = l2_distance(evolve_split_step(start, 0.45, 1e-3, trap5, params), exact);
    double ratio = err_coarse / err_fine;
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
}

TEST_CASE("split-step integrates backwards too") {
    Grid g = make_grid(-20.0, 20.0, 1024);
    SolutionEvaluator free_state = qmtest::counter_superposition(g, params);
    SolutionEvaluator psi =
        map_free_to_trapped(free_state, trap5, MapParams::natural(trap5, params), params);
    GridState at_half = sample_slice(psi, g, 0.5);
    GridState back = evolve_split_step(at_half, 0.2, 1e-3, trap5, params);
    CHECK(back.time == 0.2);
    CHECK(l2_distance(back, sample_slice(psi, g, 0.2)) < 1e-5);
}

TEST_CASE("split-step input validation and step cap") {
    Grid pow2 = make_grid(-10.0, 10.0, 512);
    Grid odd = make_grid(-10.0, 10.0, 500);
    SolutionEvaluator u0 = oscillator_eigenstate(0, trap5, params);
    GridState good = sample(u0, pow2, 0.0);
    GridState bad = sample(u0, odd, 0.0);

    CHECK_THROWS_AS(evolve_split_step(good, 0.1, 0.0, trap5, params), validation_error);
    CHECK_THROWS_AS(evolve_split_step(good, 0.1, -1e-3, trap5, params), validation_error);
    CHECK_THROWS_AS(evolve_split_step(bad, 0.1, 1e-3, trap5, params), validation_error);
    // span / dt beyond the step cap must refuse rather than grind
    CHECK_THROWS_AS(evolve_split_step(good, 1e4, 1e-8, trap5, params), resource_limit_error);
}

TEST_CASE("projection recovers eigenstate coefficients") {
    Grid g = make_grid(-12.0, 12.0, 2048);
    SolutionEvaluator u2 = oscillator_eigenstate(2, trap5, params);
    GridState slice = sample(u2, g, 0.0);
    ProjectionCoefficients pc = project_onto_eigenbasis(slice, trap5, 16, params);
    REQUIRE(pc.coeffs.size() == 16);
    CHECK(std::abs(pc.coeffs[2]) == Catch::Approx(1.0).epsilon(1e-10));
    for (std::size_t n = 0; n < pc.coeffs.size(); ++n) {
        if (n == 2) continue;
        CHECK(std::abs(pc.coeffs[n]) < 1e-10);
    }
    CHECK(pc.truncation_tail < 1e-10);
}

TEST_CASE("even states have no odd coefficients") {
    Grid g = make_grid(-20.0, 20.0, 2048);
    SolutionEvaluator free_state = qmtest::counter_superposition(g, params);
    SolutionEvaluator psi =
        map_free_to_trapped(free_state, trap5, MapParams::natural(trap5, params), params);
    GridState slice = sample_slice(psi, g, 0.0);
    ProjectionCoefficients pc = project_onto_eigenbasis(slice, trap5, 64, params);
    for (std::size_t n = 1; n < 64; n += 2) {
        CHECK(std::abs(pc.coeffs[n]) < 1e-12);
    }
    // 64 basis states leave a squared remainder of a few 1e-12, i.e. an l2
    // reconstruction floor around 2e-6
    CHECK(pc.truncation_tail < 1e-10);
    CHECK(pc.truncation_tail > 1e-14);
}

TEST_CASE("projected evolution reproduces the analytic flow") {
    Grid g = make_grid(-20.0, 20.0, 2048);
    SolutionEvaluator free_state = qmtest::counter_superposition(g, params);
    SolutionEvaluator psi =
        map_free_to_trapped(free_state, trap5, MapParams::natural(trap5, params), params);
    GridState slice = sample_slice(psi, g, 0.0);
    ProjectionCoefficients pc = project_onto_eigenbasis(slice, trap5, 64, params);

    double tau = 0.9;
    GridState evolved = evolve_projected(pc, tau, g, params);
    CHECK(evolved.time == tau);
    GridState exact = sample_slice(psi, g, tau);
    double err = l2_distance(evolved, exact);
    CHECK(err < 5e-6);   // truncation floor of the 64-state basis
    CHECK(err > 1e-7);   // and it is a floor, not roundoff
}

TEST_CASE("projected ground state just rotates") {
    Grid g = make_grid(-10.0, 10.0, 1024);
    SolutionEvaluator u0 = oscillator_eigenstate(0, trap5, params);
    GridState slice = sample(u0, g, 0.0);
    ProjectionCoefficients pc = project_onto_eigenbasis(slice, trap5, 8, params);
    double tau = 1.3;
    GridState evolved = evolve_projected(pc, tau, g, params);
    GridState exact = sample(u0, g, tau);
    CHECK(l2_distance(evolved, exact) < 1e-10);
}

TEST_CASE("projection guards its inputs") {
    Grid coarse = make_grid(-10.0, 10.0, 16);
    SolutionEvaluator u0 = oscillator_eigenstate(0, trap5, params);
    GridState slice = sample(u0, coarse, 0.0);
    // oscillator length 5^{-1/4} is under two spacings of this grid
    CHECK_THROWS_AS(project_onto_eigenbasis(slice, trap5, 8, params), validation_error);

    Grid fine = make_grid(-10.0, 10.0, 1024);
    GridState ok = sample(u0, fine, 0.0);
    CHECK_THROWS_AS(project_onto_eigenbasis(ok, trap5, 1000, params), resource_limit_error);
}
