#include "doctest.h"
#include "oracles.hpp"

#include "popctl/grid_function.hpp"

#include "json.hpp"

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using popctl::GridFunction;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(POPCTL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string config(const std::string& name) { return std::string(POPCTL_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path fresh(const std::string& name) {
    const fs::path dir = fs::current_path() / "cli_out" / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run("") == 2);
    CHECK(run("stationary /nonexistent/config.ini") == 2);
    CHECK(run("stationary " + config("gibbs_stationary.ini") + " --set solver.n=abc") == 2);
    CHECK(run("stationary " + config("gibbs_stationary.ini") + " --set solver.colour=blue") == 2);
    const fs::path out = fresh("missing_controller");
    CHECK(run("simulate " + config("fig1_cubic_stationary.ini") + " --set output.directory=" + out.string() +
              " --set experiment.controller=" + (out / "nope.json").string()) == 2);
}

TEST_CASE("validate runs selected criteria") {
    CHECK(run("validate --only 1,7") == 0);
    CHECK(run("validate --only 42") == 2);
}

TEST_CASE("a confinement failure exits with 1 and explains itself") {
    const fs::path out = fresh("unstable");
    CHECK(run("stationary " + config("unstable_negative_cost.ini") + " --set output.directory=" + out.string()) == 1);
    const auto stability = nlohmann::json::parse(slurp(out / "stability.json"));
    CHECK(stability.at("A1_pass") == false);
}

TEST_CASE("Gibbs stationary run has a vanishing control") {
    const fs::path out = fresh("gibbs");
    REQUIRE(run("stationary " + config("gibbs_stationary.ini") + " --set output.directory=" + out.string()) == 0);
    const GridFunction p = GridFunction::read_csv(out / "p_inf.csv");
    const GridFunction u = GridFunction::read_csv(out / "u_inf.csv");
    double peak = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        peak = std::max(peak, p[i]);
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double x = p.grid().axis(0)[i];
        CHECK(std::abs(p[i] - std::exp(-x * x) / std::sqrt(std::numbers::pi)) <= 1e-4);
        if (p[i] > 1e-8 * peak) {
            CHECK(std::abs(u[i]) <= 1e-3);
        }
    }
    CHECK(fs::exists(out / "effective_config.ini"));
    CHECK(fs::exists(out / "eigenvalues.csv"));
}

TEST_CASE("LQG value surfaces follow the Riccati solution") {
    const fs::path out = fresh("lqg");
    REQUIRE(run("finite-horizon " + config("lqg_finite_horizon.ini") + " --set output.directory=" + out.string()) == 0);
    for (double t : {0.0, 0.5}) {
        char name[64];
        std::snprintf(name, sizeof name, "value_surface_t%.6f.csv", t);
        std::ifstream in(out / name);
        REQUIRE(in);
        std::string line;
        std::getline(in, line);
        CHECK(line == "t,x1,f,log_f,v_hat,v");
        const oracle::Riccati r = oracle::riccati(1.0, 1.0, 1.0, 1.0, 1.0, t);
        int rows = 0;
        while (std::getline(in, line)) {
            double tt, x, f, logf, vhat, v;
            REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &tt, &x, &f, &logf, &vhat, &v) == 6);
            if (std::abs(x) <= 2.0) {
                CHECK(std::abs(v - (0.5 * r.P * x * x + r.s)) <= 1e-2);
                ++rows;
            }
        }
        CHECK(rows > 10);
    }
}

TEST_CASE("zero modified potential gives a flat value surface") {
    const fs::path out = fresh("flat");
    // nu = 0 and q = 0 make V vanish; with a zero terminal value f stays 1.
    const std::string set = " --set output.directory=" + out.string() +
                            " --set problem.name=custom --set problem.nu=0 --set problem.q=0"
                            " --set problem.sigma=0.5 --set problem.R=1 --set problem.T=1"
                            " --set solver.lo=-6 --set solver.hi=6 --set solver.M=80 --set solver.dt=0.1"
                            " --set solver.surface_times=0 --set solver.surface_points=21";
    REQUIRE(run("finite-horizon " + config("lqg_finite_horizon.ini") + set) == 0);
    std::ifstream in(out / "value_surface_t0.000000.csv");
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        double tt, x, f, logf, vhat, v;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &tt, &x, &f, &logf, &vhat, &v) == 6);
        if (std::abs(x) <= 2.0) {
            CHECK(std::abs(v) <= 1e-6);
            ++rows;
        }
    }
    CHECK(rows == 7);
}

TEST_CASE("rerunning the effective configuration reproduces the outputs") {
    const fs::path a = fresh("rerun_a"), b = fresh("rerun_b");
    REQUIRE(run("simulate " + config("fig2_uncontrolled.ini") + " --set experiment.agents=200 --set output.directory=" +
                a.string()) == 0);
    const fs::path eff = a / "effective_config.ini";
    REQUIRE(run("simulate " + eff.string() + " --set output.directory=" + b.string()) == 0);
    CHECK(slurp(a / "trajectories.csv") == slurp(b / "trajectories.csv"));
    CHECK(!slurp(a / "trajectories.csv").empty());
    const auto ra = nlohmann::json::parse(slurp(a / "report.json"));
    const auto rb = nlohmann::json::parse(slurp(b / "report.json"));
    CHECK(ra.at("cluster_fractions") == rb.at("cluster_fractions"));
}
