#pragma once

#include "popctl/model.hpp"
#include "popctl/simulate.hpp"
#include "popctl/spectral.hpp"
#include "popctl/quadrature.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace popctl {

/// Structured INI run description:
///
///   [problem]     name (builtin or "custom"), sigma, R, T, beta, c0, Q,
///                 nu / q coefficient lists for custom 1D problems
///   [solver]      mode, lo, hi, n, modes, strict, auto_widen, M, dt,
///                 max_cells, grid, surface_times, surface_points
///   [experiment]  agents, realizations, seed, dt, T, snapshot_fractions,
///                 snapshot_times, init, init_lo, init_hi, hist_lo, hist_hi,
///                 bins, l1_threshold, max_escape, goals, attractors, radius,
///                 min_improvement, min_cluster_fraction, baseline, controller
///   [output]      directory, trajectories
///
/// Lists are comma separated; point lists separate points with ';'.
struct ProblemConfig {
    std::string name = "cubic_1d";
    std::optional<double> sigma;
    std::optional<double> R;
    std::optional<double> T;
    std::optional<double> beta;
    std::optional<double> c0;
    std::optional<double> Q;
    std::vector<double> nu;
    std::vector<double> q;
};

struct SolverConfig {
    std::string mode = "stationary";
    std::vector<double> lo;
    std::vector<double> hi;
    std::size_t n = 2000;
    std::size_t modes = 8;
    bool strict = false;
    bool auto_widen = true;
    std::size_t M = 20;
    double dt = 0.1;
    std::size_t max_cells = 1'000'000;
    std::string grid = "global";
    std::vector<double> surface_times;
    std::size_t surface_points = 41;
};

struct ExperimentConfig {
    std::size_t agents = 500;
    std::size_t realizations = 100;
    std::uint64_t seed = 1;
    double dt = 0.0;
    std::optional<double> T;
    std::vector<double> snapshot_fractions{0.0, 0.2, 0.5, 1.0};
    std::vector<double> snapshot_times;
    std::string init = "uniform";
    std::vector<double> init_lo;
    std::vector<double> init_hi;
    double hist_lo = -3.0;
    double hist_hi = 3.0;
    std::size_t bins = 60;
    double l1_threshold = 0.1;
    double max_escape = 0.01;
    std::vector<Point> goals;
    std::vector<Point> attractors;
    double radius = 0.5;
    double min_improvement = 0.2;
    double min_cluster_fraction = 0.15;
    bool baseline = true;
    std::string controller;
};

struct OutputConfig {
    std::string directory = "out";
    bool trajectories = false;
};

struct RunConfig {
    ProblemConfig problem;
    SolverConfig solver;
    ExperimentConfig experiment;
    OutputConfig output;

    /// Parses INI text, applies "section.key=value" overrides, then fills
    /// problem-dependent defaults. Errors are ErrorKind::configuration with
    /// the offending line or field.
    static RunConfig parse(std::istream& is, const std::vector<std::string>& overrides = {},
                           const std::string& source = "<config>");
    static RunConfig load(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

    ControlProblem build_problem() const;
    SpectralOptions spectral_options() const;
    QuadratureOptions quadrature_options() const;
    StationaryExperiment stationary_experiment() const;
    FiniteHorizonExperiment finite_horizon_experiment() const;
    double horizon() const;

    /// Effective configuration with every default spelled out; parsing it
    /// back yields an identical RunConfig.
    void write_ini(std::ostream& os) const;
    std::string to_ini() const;
};

}  // namespace popctl
