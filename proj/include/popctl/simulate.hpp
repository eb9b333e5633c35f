#pragma once

#include "popctl/grid_function.hpp"
#include "popctl/model.hpp"
#include "popctl/quadrature.hpp"
#include "popctl/rng.hpp"
#include "popctl/spectral.hpp"
#include "popctl/transforms.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace popctl {

/// Langevin: dx = (-grad nu + u) dt + sigma dW.  Integrator: dx = u dt + sigma dW.
enum class Dynamics { langevin, integrator };

/// Feedback law u(t, x). `in_domain` marks where the law is defined without
/// clamping; queries outside it are clamped by the policy itself.
/// Policies are shared read-only between threads.
struct Policy {
    std::string name;
    std::function<void(double t, std::span<const double> x, std::span<double> u)> control;
    std::function<bool(std::span<const double> x)> in_domain;
};

Policy zero_policy(std::size_t dim);
/// u = u_inf(x) interpolated from the stationary solution, clamped to its grid.
Policy stationary_policy(const SpectralSolution& sol);
/// Global-grid quadrature control at the step containing t. With
/// Dynamics::integrator the law is u^ = sigma^2 grad f / f, otherwise u*.
Policy quadrature_policy(std::shared_ptr<const QuadratureSolution> sol, Dynamics dynamics = Dynamics::langevin);
/// Per-query local grids (see local_control).
Policy local_policy(const ControlProblem& problem, std::size_t M, double T, double dt,
                    Dynamics dynamics = Dynamics::langevin, std::optional<Box> domain = std::nullopt);

/// N agents in R^d with a counter-based noise stream.
struct Ensemble {
    std::size_t dim = 1;
    std::vector<double> states;  // N x d, row-major
    std::size_t step_index = 0;
    double time = 0.0;
    NormalStream noise{0};
    /// Per agent: ever left the policy domain.
    std::vector<unsigned char> escaped;
    std::size_t clamped_queries = 0;

    std::size_t size() const noexcept { return dim == 0 ? 0 : states.size() / dim; }
    std::span<const double> state(std::size_t i) const { return {states.data() + i * dim, dim}; }
    double escape_fraction() const;
};

Ensemble make_ensemble(std::vector<double> states, std::size_t dim, std::uint64_t seed);
/// Uniform initial states on a box.
Ensemble uniform_ensemble(std::size_t n, const Box& box, std::uint64_t seed);
/// Initial states drawn from a 1D density on a grid (inverse CDF of the
/// piecewise-linear interpolant).
Ensemble density_ensemble(std::size_t n, const GridFunction& density, std::uint64_t seed);

/// One Euler-Maruyama step
///     x <- x + (drift(x) + u(t, x)) dt + sigma sqrt(dt) eps.
void step(Ensemble& ensemble, const ControlProblem& problem, const Policy& policy, double dt,
          Dynamics dynamics = Dynamics::langevin);

/// Rectilinear bin edges, one strictly increasing list per dimension.
using BinEdges = std::vector<std::vector<double>>;
BinEdges uniform_bins(std::span<const double> lo, std::span<const double> hi, std::size_t bins_per_axis);

struct DensityEstimate {
    BinEdges edges;
    std::vector<double> density;  // row-major, integrates to one over the bins
    /// Fraction of samples that fell outside the bins (excluded from the normalization).
    double outside_fraction = 0.0;
    std::size_t samples = 0;

    double bin_volume(std::size_t flat) const;
    double mass() const;
    void write_csv(std::ostream& os, double t) const;
};

DensityEstimate estimate_density(const Ensemble& ensemble, const BinEdges& edges);
/// Bin averages of a grid density (1D), renormalized to unit mass over the bins.
DensityEstimate bin_density(const GridFunction& density, const BinEdges& edges);
/// sum |a_i - b_i| binvol_i; usage error if the bins differ.
double l1_distance(const DensityEstimate& a, const DensityEstimate& b);

struct ExperimentReport {
    std::string kind;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<double> l1_series;
    std::vector<double> goal_fractions;
    std::vector<double> baseline_goal_fractions;
    /// Terminal fraction of uncontrolled agents within the radius of each
    /// attractor listed in the config.
    std::vector<double> baseline_cluster_fractions;
    /// Same for the simulated (possibly controlled) ensemble.
    std::vector<double> cluster_fractions;
    double escape_fraction = 0.0;
    double wall_clock_s = 0.0;
    bool pass = false;
    std::vector<std::string> failures;
    std::vector<DensityEstimate> snapshots;
    std::vector<std::vector<double>> snapshot_states;

    nlohmann::json to_json() const;
};

enum class InitialDensity { uniform, stationary };

struct StationaryExperiment {
    std::size_t agents = 500;
    std::size_t realizations = 100;
    /// Defaults to 5 / (lambda_1 - lambda_0).
    std::optional<double> T;
    double dt = 0.01;
    /// Snapshot times as fractions of T.
    std::vector<double> snapshot_fractions{0.0, 0.2, 0.5, 1.0};
    InitialDensity init = InitialDensity::uniform;
    Box init_box{{-2.0}, {2.0}};
    double hist_lo = -3.0;
    double hist_hi = 3.0;
    std::size_t bins = 60;
    double l1_threshold = 0.1;
    double max_escape = 0.01;
    std::uint64_t seed = 1;
};

ExperimentReport run_stationary_experiment(const SpectralSolution& sol, const StationaryExperiment& cfg);

struct FiniteHorizonExperiment {
    std::size_t agents = 400;
    double dt = 0.1;
    std::vector<double> snapshot_times{1.0, 2.0, 3.0, 4.0};
    Box init_box{{-2.0, -2.0}, {2.0, 2.0}};
    std::vector<Point> goals{{1.0, 1.0}, {-1.0, -1.0}};
    /// Uncontrolled attractors used for the cluster report.
    std::vector<Point> attractors{{1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}, {-1.0, 1.0}};
    double radius = 0.5;
    /// Required terminal improvement of the goal fraction over the baseline.
    double min_improvement = 0.2;
    double min_cluster_fraction = 0.15;
    double max_escape = 0.01;
    bool baseline = true;
    /// False for an uncontrolled run: pass then means every attractor holds
    /// min_cluster_fraction of the agents.
    bool controlled = true;
    std::uint64_t seed = 1;
};

ExperimentReport run_finite_horizon_experiment(const ControlProblem& problem, const Policy& policy,
                                               const FiniteHorizonExperiment& cfg, double T);

/// Fraction of states within `radius` of any of the points.
double fraction_near(const Ensemble& ensemble, const std::vector<Point>& points, double radius);

/// CSV "agent,t,x1..xd" for the current ensemble state.
void write_states_csv(std::ostream& os, const Ensemble& ensemble);

}  // namespace popctl
