#include "doctest.h"

#include "popctl/config.hpp"
#include "popctl/errors.hpp"

#include <sstream>

using namespace popctl;

namespace {

RunConfig parse(const std::string& text, const std::vector<std::string>& overrides = {}) {
    std::istringstream is(text);
    return RunConfig::parse(is, overrides, "test.ini");
}

std::string message_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
    try {
        parse(text, overrides);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::configuration);
        return e.what();
    }
    FAIL("expected an error");
    return {};
}

const char* kStationary = R"(; cubic
[problem]
name = cubic_1d

[solver]
mode = stationary
lo = -6
hi = 6
)";

const char* kFinite = R"([problem]
name = double_goal_2d
[solver]
mode = finite_horizon
)";

}  // namespace

TEST_CASE("stationary defaults are resolved") {
    const RunConfig c = parse(kStationary);
    CHECK(c.solver.lo == std::vector<double>{-6.0});
    CHECK(c.solver.n == 2000);
    CHECK(c.experiment.agents == 500);
    CHECK(c.experiment.realizations == 100);
    CHECK(c.experiment.dt == 0.01);
    const SpectralOptions s = c.spectral_options();
    CHECK(s.a == -6.0);
    CHECK(s.b == 6.0);
    CHECK(c.build_problem().name == "cubic_1d");
}

TEST_CASE("finite-horizon defaults come from the problem") {
    const RunConfig c = parse(kFinite);
    CHECK(c.horizon() == 4.0);
    CHECK(c.solver.lo == std::vector<double>{-2.0, -2.0});
    CHECK(c.experiment.agents == 400);
    CHECK(c.experiment.dt == doctest::Approx(0.1));
    CHECK(c.experiment.goals.size() == 2);
    CHECK(c.experiment.attractors.size() == 4);
    CHECK(c.solver.surface_times == std::vector<double>{0.0, 1.0, 2.0, 3.0});
    const QuadratureOptions q = c.quadrature_options();
    CHECK(q.M == 20);
    CHECK(q.domain->hi[1] == 2.0);
    const FiniteHorizonExperiment f = c.finite_horizon_experiment();
    CHECK(f.controlled);
    CHECK(f.snapshot_times.back() == doctest::Approx(4.0));
}

TEST_CASE("overrides take precedence over the file") {
    const RunConfig c = parse(kFinite, {"solver.M=30", "problem.sigma=0.3", "experiment.goals=0.5, 0.5"});
    CHECK(c.solver.M == 30);
    CHECK(c.build_problem().sigma == 0.3);
    CHECK(c.experiment.goals == std::vector<Point>{{0.5, 0.5}});
    CHECK(message_of(kFinite, {"solver.M"}).find("solver.M") != std::string::npos);
}

TEST_CASE("unknown keys and sections report their line") {
    const std::string bad_key = std::string(kStationary) + "nodes = 7\n";
    const std::string msg = message_of(bad_key);
    CHECK(msg.find("test.ini:9") != std::string::npos);
    CHECK(msg.find("nodes") != std::string::npos);
    CHECK(message_of("[solvers]\nn = 3\n").find("solvers") != std::string::npos);
    CHECK(message_of(kStationary, {"solver.bogus=1"}).find("bogus") != std::string::npos);
}

TEST_CASE("invalid values are rejected") {
    CHECK(message_of(kStationary, {"solver.n=abc"}).find("solver.n") != std::string::npos);
    CHECK_FALSE(message_of(kStationary, {"problem.sigma=-1"}).empty());
    CHECK_FALSE(message_of(kStationary, {"solver.mode=sideways"}).empty());
    CHECK_FALSE(message_of(kFinite, {"solver.grid=hex"}).empty());
    CHECK_FALSE(message_of("[problem]\nname = nope\n").empty());
}

TEST_CASE("custom polynomial problems") {
    const RunConfig c = parse("[problem]\nname = custom\nnu = 0, 0, 0.5\nq = 0, 0, -1\nsigma = 1\nR = 1\n");
    const ControlProblem p = c.build_problem();
    CHECK(p.q.value(2.0) == doctest::Approx(-4.0));
    CHECK(p.nu.derivative(2.0) == doctest::Approx(2.0));
}

TEST_CASE("effective configuration round trips") {
    for (const char* text : {kStationary, kFinite}) {
        const RunConfig c = parse(text, {"experiment.seed=42", "solver.dt=0.05"});
        const std::string ini = c.to_ini();
        const RunConfig back = parse(ini);
        CHECK(back.to_ini() == ini);
        CHECK(back.experiment.seed == 42);
    }
}
