#include "doctest.h"
#include "oracles.hpp"

#include "popctl/errors.hpp"
#include "popctl/model.hpp"

#include <cmath>
#include <limits>
#include <string>

using namespace popctl;

namespace {

// Central-difference gradient and Laplacian at step h.
void fd_check(const ScalarField& f, const Point& x, double h = 1e-5) {
    const Point g = f.gradient(x);
    double lap_fd = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        Point p = x, m = x;
        p[k] += h;
        m[k] -= h;
        const double fp = f.value(p), fm = f.value(m), f0 = f.value(x);
        const double gk = (fp - fm) / (2 * h);
        CHECK(std::abs(g[k] - gk) <= 1e-6 * std::max(1.0, std::abs(gk)));
        const double h2 = 1e-3;
        Point p2 = x, m2 = x;
        p2[k] += h2;
        m2[k] -= h2;
        lap_fd += (f.value(p2) - 2 * f0 + f.value(m2)) / (h2 * h2);
    }
    CHECK(std::abs(f.laplacian(x) - lap_fd) <= 1e-5 * std::max(1.0, std::abs(lap_fd)));
}

}  // namespace

TEST_CASE("builtin problems are listed and constructible") {
    for (const auto& name : builtin_names()) {
        const ControlProblem p = builtin_problem(name);
        CHECK(p.name == name);
        CHECK(p.sigma > 0.0);
        CHECK(p.R > 0.0);
    }
}

TEST_CASE("unknown builtin names list the valid ones") {
    try {
        builtin_problem("quintic");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::configuration);
        for (const auto& name : builtin_names()) {
            CHECK(std::string(e.what()).find(name) != std::string::npos);
        }
    }
}

TEST_CASE("builtin derivatives match finite differences at random points") {
    oracle::Gen gen(10);
    for (const auto& name : builtin_names()) {
        const ControlProblem p = builtin_problem(name);
        for (int i = 0; i < 20; ++i) {
            const Point x = gen.vec(p.dim, -2.0, 2.0);
            fd_check(p.nu, x);
            fd_check(p.q, x);
        }
    }
}

TEST_CASE("cubic_1d fields") {
    const ControlProblem p = cubic_1d();
    CHECK(p.nu.value(2.0) == doctest::Approx(-8.0 / 3.0));
    CHECK(p.q.value(2.0) == doctest::Approx(10.0));
    CHECK(p.sigma == 0.5);
    CHECK(p.R == 0.5);
    // The passive drift x^2 pushes positive states further out.
    CHECK(drift(p, Point{1.0})[0] == doctest::Approx(1.0));
}

TEST_CASE("double_goal_2d drift and cost") {
    const ControlProblem p = double_goal_2d();
    const Point d = drift(p, Point{1.0, 0.0});
    CHECK(d[0] == doctest::Approx(-1.0 / 6.0));
    CHECK(d[1] == doctest::Approx(0.0));
    CHECK(p.q.value(Point{1.0, 1.0}) == doctest::Approx(0.0));
    CHECK(p.q.value(Point{-1.0, -1.0}) == doctest::Approx(0.0));
    CHECK(p.q.value(Point{1.0, -1.0}) > 0.0);
    CHECK(p.horizon.value() == 4.0);
    // Symmetry under swapping coordinates.
    CHECK(p.nu.value(Point{0.3, -1.1}) == doctest::Approx(p.nu.value(Point{-1.1, 0.3})));
}

TEST_CASE("polynomial fields and finite-difference fallback") {
    const ScalarField f = ScalarField::polynomial_1d({1.0, -2.0, 0.0, 0.5});
    CHECK(f.value(2.0) == doctest::Approx(1.0 - 4.0 + 4.0));
    CHECK(f.derivative(2.0) == doctest::Approx(-2.0 + 6.0));
    CHECK(f.laplacian(2.0) == doctest::Approx(6.0));
    const ScalarField g = ScalarField::from_value(1, "sin", [](std::span<const double> x) { return std::sin(x[0]); });
    CHECK_FALSE(g.analytic_derivatives());
    CHECK(g.derivative(0.4) == doctest::Approx(std::cos(0.4)).epsilon(1e-6));
    CHECK(g.laplacian(0.4) == doctest::Approx(-std::sin(0.4)).epsilon(1e-4));
}

TEST_CASE("non-finite evaluations name the point") {
    const ScalarField f = ScalarField::from_value(1, "log", [](std::span<const double> x) { return std::log(x[0]); });
    try {
        f.value(-1.0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::evaluation);
        CHECK(std::string(e.what()).find("-1") != std::string::npos);
    }
}

TEST_CASE("problem parameters are validated") {
    const auto zero = ScalarField::constant(1, 0.0);
    CHECK_THROWS_AS(ControlProblem("bad", zero, zero, 0.0, 1.0), Error);
    CHECK_THROWS_AS(ControlProblem("bad", zero, zero, 1.0, -1.0), Error);
    CHECK_THROWS_AS(ControlProblem("bad", zero, ScalarField::constant(2, 0.0), 1.0, 1.0), Error);
    const ControlProblem p("ok", zero, zero, 1.0, 1.0);
    CHECK(p.with_noise(0.3).sigma == 0.3);
    CHECK(p.with_control_cost(2.0).R == 2.0);
    CHECK(p.with_horizon(1.5).horizon.value() == 1.5);
}
