#include "doctest.h"
#include "oracles.hpp"

#include "popctl/errors.hpp"
#include "popctl/spectral.hpp"

#include <cmath>
#include <numbers>

using namespace popctl;

namespace {

ControlProblem harmonic() {
    return ControlProblem("qho", ScalarField::constant(1, 0.0), ScalarField::polynomial_1d({0.0, 0.0, 0.5}), 1.0, 1.0);
}

double gaussian(double x, double mean, double var) {
    return std::exp(-(x - mean) * (x - mean) / (2 * var)) / std::sqrt(2 * std::numbers::pi * var);
}

}  // namespace

TEST_CASE("harmonic oscillator levels") {
    const SpectralSolution s = solve_eigen(harmonic(), -8.0, 8.0, 2000, 6);
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(s.eigenvalue(k) == doctest::Approx(k + 0.5).epsilon(1e-4));
    }
    CHECK(s.gap() == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(s.optimal_cost() == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("eigenvalue error falls at second order in h") {
    const double e1 = std::abs(solve_eigen(harmonic(), -8.0, 8.0, 399, 2).eigenvalue(1) - 1.5);
    const double e2 = std::abs(solve_eigen(harmonic(), -8.0, 8.0, 799, 2).eigenvalue(1) - 1.5);
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("eigenfunctions are orthonormal and satisfy the Rayleigh identity") {
    const SpectralSolution s = solve_eigen(cubic_1d(), -6.0, 6.0, 1500, 5);
    const double h = s.h();
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double ip = 0.0;
            for (std::size_t k = 0; k < s.discretization().n; ++k) {
                ip += s.eigenfunction(i)[k] * s.eigenfunction(j)[k] * h;
            }
            CHECK(std::abs(ip - (i == j ? 1.0 : 0.0)) <= 1e-10);
        }
    }
    const auto& e0 = s.eigenfunction(0);
    std::vector<double> he0(e0.size());
    s.discretization().matrix.multiply(e0, he0);
    double r = 0.0;
    for (std::size_t k = 0; k < e0.size(); ++k) {
        r += e0[k] * he0[k] * h;
        CHECK(e0[k] > 0.0);
    }
    CHECK(r == doctest::Approx(s.eigenvalue(0)).epsilon(1e-10));
    for (double res : s.residuals()) {
        CHECK(res <= 1e-8);
    }
}

TEST_CASE("uncontrolled Gibbs density and vanishing control") {
    const SpectralSolution s = solve_stationary(uncontrolled_gibbs_1d(1.0), SpectralOptions{.a = -8.0, .b = 8.0, .n = 2000});
    const GridFunction p = stationary_density(s);
    const StationaryControl c = stationary_value_and_control(s);
    double peak = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        peak = std::max(peak, p[i]);
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double x = s.grid().axis(0)[i];
        CHECK(std::abs(p[i] - gaussian(x, 0.0, 0.5)) <= 1e-4);
        if (p[i] > 1e-8 * peak) {
            CHECK(std::abs(c.u[i]) <= 1e-3);
        }
    }
    CHECK(p.integrate() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("LQG stationary control is the algebraic Riccati gain") {
    for (double beta : {0.5, 1.0, 2.0}) {
        const ControlProblem p = lqg_1d(beta, 1.0, 1.0);
        const double P = oracle::riccati(beta, 1.0, 1.0, 1.0, 40.0, 0.0, 1e-3).P;
        const SpectralSolution s = solve_stationary(p);
        const GridFunction u = stationary_value_and_control(s).u;
        for (double x : {-1.5, -0.5, 0.3, 1.2}) {
            CHECK(u.interpolate(x) == doctest::Approx(-P * x).epsilon(1e-3));
        }
    }
}

TEST_CASE("cubic closed loop pulls agents back toward the origin") {
    const ControlProblem p = cubic_1d();
    const SpectralSolution s = solve_stationary(p);
    const GridFunction u = stationary_value_and_control(s).u;
    for (double x : {-2.0, 2.0}) {
        const double closed = drift(p, std::vector<double>{x})[0] + u.interpolate(x);
        CHECK(closed * x < 0.0);
    }
}

TEST_CASE("domain widening and strict mode") {
    const ControlProblem p = harmonic();
    SpectralOptions narrow{.a = -2.0, .b = 2.0, .n = 400, .modes = 3};
    const SpectralSolution widened = solve_stationary(p, narrow);
    CHECK(widened.discretization().b - widened.discretization().a > 4.0);
    CHECK(widened.boundary_mass() <= 1e-8);
    CHECK(widened.eigenvalue(0) == doctest::Approx(0.5).epsilon(1e-3));

    narrow.auto_widen = false;
    narrow.strict = true;
    try {
        solve_stationary(p, narrow);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::numerical);
    }
    narrow.strict = false;
    CHECK(solve_stationary(p, narrow).boundary_mass() > 1e-8);
    CHECK_THROWS_AS(solve_eigen(double_goal_2d(), -1.0, 1.0, 200, 2), Error);
}

TEST_CASE("perturbation evolution matches the Ornstein-Uhlenbeck transition") {
    // Without control the Gibbs problem is dx = -x dt + dW, so a Gaussian start
    // N(m, 1/2) stays Gaussian with mean m e^{-t}.
    const SpectralSolution s = solve_eigen(uncontrolled_gibbs_1d(1.0), -8.0, 8.0, 2000, 24);
    const double m = 0.6;
    GridFunction p0 = GridFunction::sample(s.grid(), [m](std::span<const double> x) { return gaussian(x[0], m, 0.5); });
    double mass = 0.0;
    for (std::size_t i = 0; i < p0.size(); ++i) {
        mass += p0[i] * s.h();
    }
    for (std::size_t i = 0; i < p0.size(); ++i) {
        p0[i] /= mass;
    }
    const std::vector<double> times{0.0, 0.3, 1.0, 3.0};
    const PerturbationEvolution ev = evolve_perturbation(s, p0, times);
    CHECK(ev.captured_energy >= 0.999);
    CHECK(ev.initial_coefficients[0] == 0.0);
    for (std::size_t j = 0; j < times.size(); ++j) {
        double total = 0.0, err = 0.0;
        for (std::size_t i = 0; i < p0.size(); ++i) {
            total += ev.densities[j][i] * s.h();
            err += std::abs(ev.densities[j][i] - gaussian(s.grid().axis(0)[i], m * std::exp(-times[j]), 0.5)) * s.h();
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(err <= 2e-3);
    }
    for (std::size_t j = 1; j < times.size(); ++j) {
        CHECK(ev.perturbation_norms[j] <= ev.perturbation_norms[j - 1] * std::exp(-s.gap() * (times[j] - times[j - 1])) * (1 + 1e-12));
    }

    GridFunction bad = p0;
    for (std::size_t i = 0; i < bad.size(); ++i) {
        bad[i] *= 2.0;
    }
    try {
        evolve_perturbation(s, bad, times);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::perturbation);
    }
}
