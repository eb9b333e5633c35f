#include "doctest.h"
#include "oracles.hpp"

#include "popctl/errors.hpp"
#include "popctl/simulate.hpp"

#include <cmath>
#include <memory>
#include <sstream>

using namespace popctl;

namespace {

Policy function_policy(std::size_t dim, std::function<void(double, std::span<const double>, std::span<double>)> fn) {
    (void)dim;
    return Policy{"test", std::move(fn), [](std::span<const double>) { return true; }};
}

}  // namespace

TEST_CASE("trajectories do not depend on the other agents") {
    const ControlProblem p = double_goal_2d();
    const Box box{{-2.0, -2.0}, {2.0, 2.0}};
    Ensemble all = uniform_ensemble(10, box, 3);
    Ensemble some = make_ensemble(std::vector<double>(all.states.begin(), all.states.begin() + 10), 2, 3);
    const Policy zero = zero_policy(2);
    for (int k = 0; k < 20; ++k) {
        step(all, p, zero, 0.1);
        step(some, p, zero, 0.1);
    }
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(all.states[i] == some.states[i]);
    }
    Ensemble again = uniform_ensemble(10, box, 3);
    for (int k = 0; k < 20; ++k) {
        step(again, p, zero, 0.1);
    }
    CHECK(again.states == all.states);
}

TEST_CASE("cancelling the passive drift leaves pure Brownian increments") {
    const ControlProblem p = cubic_1d();
    Ensemble e = make_ensemble({-0.5, 0.0, 0.7}, 1, 9);
    const std::vector<double> x0 = e.states;
    const Policy cancel = function_policy(1, [&p](double, std::span<const double> x, std::span<double> u) {
        u[0] = p.nu.derivative(x[0]);
    });
    const double dt = 0.01;
    const int steps = 50;
    for (int k = 0; k < steps; ++k) {
        step(e, p, cancel, dt);
    }
    const NormalStream noise(9);
    for (std::size_t i = 0; i < 3; ++i) {
        double w = 0.0;
        for (int k = 0; k < steps; ++k) {
            w += noise.normal(i, k, 0);
        }
        CHECK(e.states[i] == doctest::Approx(x0[i] + p.sigma * std::sqrt(dt) * w).epsilon(1e-12));
    }
    CHECK(e.time == doctest::Approx(steps * dt));
}

TEST_CASE("without control the cubic drift pushes agents right") {
    const ControlProblem p = cubic_1d().with_noise(1e-3);
    Ensemble e = make_ensemble({0.5}, 1, 1);
    for (int k = 0; k < 50; ++k) {
        step(e, p, zero_policy(1), 0.01);
    }
    // dx = x^2 dt from 0.5 gives 1 / (2 - t).
    CHECK(e.states[0] == doctest::Approx(1.0 / 1.5).epsilon(1e-2));
}

TEST_CASE("Langevin with u* and the integrator with u^ coincide") {
    const ControlProblem p = double_goal_2d();
    QuadratureOptions opt;
    opt.M = 20;
    opt.dt = 0.1;
    opt.T = 4.0;
    opt.domain = Box{{-2.0, -2.0}, {2.0, 2.0}};
    const auto q = std::make_shared<const QuadratureSolution>(build(p, opt));
    Ensemble a = uniform_ensemble(50, Box{{-1.5, -1.5}, {1.5, 1.5}}, 4);
    Ensemble b = a;
    const Policy pa = quadrature_policy(q, Dynamics::langevin), pb = quadrature_policy(q, Dynamics::integrator);
    for (int k = 0; k < 40; ++k) {
        step(a, p, pa, 0.1, Dynamics::langevin);
        step(b, p, pb, 0.1, Dynamics::integrator);
    }
    for (std::size_t i = 0; i < a.states.size(); ++i) {
        CHECK(std::abs(a.states[i] - b.states[i]) <= 1e-10);
    }
}

TEST_CASE("controller failures name the agent") {
    const ControlProblem p = cubic_1d();
    Ensemble e = make_ensemble({0.0, 0.1, 0.9, 1.2}, 1, 1);
    const Policy picky = function_policy(1, [](double, std::span<const double> x, std::span<double> u) {
        if (x[0] > 0.5) {
            throw std::runtime_error("out of range");
        }
        u[0] = 0.0;
    });
    try {
        step(e, p, picky, 0.01);
        FAIL("expected an error");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::control);
        CHECK(std::string(err.what()).find("agent 2") != std::string::npos);
    }
}

TEST_CASE("histogram L1 distances") {
    const BinEdges edges = uniform_bins(std::vector<double>{-3.0}, std::vector<double>{3.0}, 60);
    const Ensemble left = make_ensemble({-2.5, -2.4, -2.0}, 1, 1);
    const Ensemble right = make_ensemble({2.5, 2.4, 2.0, 3.5}, 1, 1);
    const DensityEstimate a = estimate_density(left, edges), b = estimate_density(right, edges);
    CHECK(l1_distance(a, a) == 0.0);
    CHECK(l1_distance(a, b) == doctest::Approx(2.0));
    CHECK(a.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.outside_fraction == doctest::Approx(0.25));
    const DensityEstimate c = estimate_density(left, uniform_bins(std::vector<double>{-3.0}, std::vector<double>{3.0}, 30));
    CHECK_THROWS_AS(l1_distance(a, c), Error);
}

TEST_CASE("sampled Gaussian against exact bin masses") {
    const std::size_t n = 100000;
    const NormalStream z(77);
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = 0.3 + 0.8 * z.normal(i, 0, 0);
    }
    const BinEdges edges = uniform_bins(std::vector<double>{-4.0}, std::vector<double>{4.0}, 40);
    const DensityEstimate est = estimate_density(make_ensemble(xs, 1, 1), edges);
    DensityEstimate exact = est;
    double inside = oracle::normal_cdf((4.0 - 0.3) / 0.8) - oracle::normal_cdf((-4.0 - 0.3) / 0.8);
    for (std::size_t b = 0; b < 40; ++b) {
        const double m = oracle::normal_cdf((edges[0][b + 1] - 0.3) / 0.8) - oracle::normal_cdf((edges[0][b] - 0.3) / 0.8);
        exact.density[b] = m / inside / est.bin_volume(b);
    }
    CHECK(l1_distance(est, exact) <= 0.05);

    const GridFunction g = GridFunction::sample(RectGrid::uniform_1d(-6.0, 6.0, 2401), [](std::span<const double> x) {
        return std::exp(-(x[0] - 0.3) * (x[0] - 0.3) / (2 * 0.64)) / std::sqrt(2 * std::numbers::pi * 0.64);
    });
    CHECK(l1_distance(bin_density(g, edges), exact) <= 1e-4);
}

TEST_CASE("density ensembles follow the requested density") {
    const GridFunction g = GridFunction::sample(RectGrid::uniform_1d(-5.0, 5.0, 1001), [](std::span<const double> x) {
        return std::exp(-x[0] * x[0] / 2) / std::sqrt(2 * std::numbers::pi);
    });
    const Ensemble e = density_ensemble(50000, g, 2);
    double mean = 0.0, var = 0.0;
    for (double x : e.states) {
        mean += x;
        var += x * x;
    }
    mean /= e.size();
    var = var / e.size() - mean * mean;
    CHECK(std::abs(mean) <= 5.0 / std::sqrt(50000.0));
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("stationary experiment") {
    const SpectralSolution s = solve_stationary(cubic_1d());
    StationaryExperiment cfg;
    cfg.agents = 500;
    cfg.realizations = 20;
    cfg.bins = 30;

    SUBCASE("starting at the stationary density stays there") {
        cfg.init = InitialDensity::stationary;
        const ExperimentReport r = run_stationary_experiment(s, cfg);
        for (double l1 : r.l1_series) {
            CHECK(l1 <= 0.1);
        }
    }
    SUBCASE("uniform start converges for two step sizes") {
        for (double dt : {0.01, 0.005}) {
            cfg.dt = dt;
            const ExperimentReport r = run_stationary_experiment(s, cfg);
            CHECK(r.pass);
            CHECK(r.l1_series.front() > 1.0);
            CHECK(r.l1_series.back() <= 0.1);
            CHECK(r.escape_fraction <= 0.01);
            CHECK(r.to_json().at("l1_series").size() == r.l1_series.size());
        }
    }
}

TEST_CASE("finite-horizon experiment concentrates agents at the goals") {
    const ControlProblem p = double_goal_2d();
    QuadratureOptions opt;
    opt.M = 20;
    opt.dt = 0.1;
    opt.T = 4.0;
    opt.domain = Box{{-2.0, -2.0}, {2.0, 2.0}};
    const auto q = std::make_shared<const QuadratureSolution>(build(p, opt));
    FiniteHorizonExperiment cfg;
    cfg.agents = 200;
    const ExperimentReport r = run_finite_horizon_experiment(p, quadrature_policy(q), cfg, 4.0);
    CHECK(r.pass);
    CHECK(r.goal_fractions.back() >= r.baseline_goal_fractions.back() + 0.2);
    CHECK(r.snapshot_states.size() == cfg.snapshot_times.size());
    std::ostringstream os;
    write_states_csv(os, make_ensemble({1.0, 2.0}, 2, 1));
    CHECK(os.str() == "0,0,1,2\n");
}
