#pragma once

#include "popctl/grid_function.hpp"
#include "popctl/model.hpp"
#include "popctl/transforms.hpp"
#include "popctl/tridiagonal.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace popctl {

/// Dirichlet finite-difference discretization of
///     H = V / (sigma^2 R) - (sigma^2 / 2) d^2/dx^2
/// on n interior points of [a, b], h = (b - a) / (n + 1).
struct SchrodingerDiscretization {
    double a = 0.0;
    double b = 0.0;
    std::size_t n = 0;
    double h = 0.0;
    std::vector<double> x;          // interior nodes
    std::vector<double> potential;  // V(x_i) / (sigma^2 R)
    SymTridiagonal matrix;

    static SchrodingerDiscretization build(const ModifiedPotential& V, double a, double b, std::size_t n);
};

/// Ascending eigenpairs of the discretized Schrodinger operator. Eigenfunctions
/// are orthonormal under the measure h; e0 is positive. The ground state is also
/// kept as log e0, which stays accurate where e0 itself underflows.
class SpectralSolution {
public:
    SpectralSolution(ControlProblem problem, SchrodingerDiscretization disc, std::vector<double> eigenvalues,
                     std::vector<std::vector<double>> eigenfunctions, std::vector<double> log_e0,
                     std::vector<double> residuals, double boundary_mass);

    const ControlProblem& problem() const noexcept { return problem_; }
    const SchrodingerDiscretization& discretization() const noexcept { return disc_; }
    RectGrid grid() const;
    double h() const noexcept { return disc_.h; }
    std::size_t modes() const noexcept { return eigenvalues_.size(); }

    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    double eigenvalue(std::size_t k) const { return eigenvalues_.at(k); }
    const std::vector<double>& eigenfunction(std::size_t k) const { return eigenfunctions_.at(k); }
    GridFunction eigenfunction_grid(std::size_t k) const;
    const std::vector<double>& log_ground_state() const noexcept { return log_e0_; }
    const std::vector<double>& residuals() const noexcept { return residuals_; }

    /// Optimal average cost c = sigma^2 R lambda_0.
    double optimal_cost() const;
    /// lambda_1 - lambda_0; requires at least two modes.
    double gap() const;
    /// Mass of e0^2 within 1% of the domain width from either end.
    double boundary_mass() const noexcept { return boundary_mass_; }

private:
    ControlProblem problem_;
    SchrodingerDiscretization disc_;
    std::vector<double> eigenvalues_;
    std::vector<std::vector<double>> eigenfunctions_;
    std::vector<double> log_e0_;
    std::vector<double> residuals_;
    double boundary_mass_;
};

/// Smallest m eigenpairs on [a, b] with n interior points. With `strict`, a
/// ground state carrying more than `boundary_mass_tol` of its mass within 1%
/// of the boundary is a numerical error; otherwise it is left to the caller
/// (see boundary_mass()).
SpectralSolution solve_eigen(const ControlProblem& problem, double a, double b, std::size_t n, std::size_t m,
                             bool strict = false, double boundary_mass_tol = 1e-8);

struct SpectralOptions {
    double a = -8.0;
    double b = 8.0;
    std::size_t n = 2000;
    std::size_t modes = 8;
    bool strict = false;
    bool auto_widen = true;
    double boundary_mass_tol = 1e-8;
    std::size_t max_widenings = 4;
};

/// solve_eigen with automatic domain doubling (same spacing) until the ground
/// state boundary mass drops below the tolerance.
SpectralSolution solve_stationary(const ControlProblem& problem, const SpectralOptions& options = {});

/// p_inf = e0^2 / sum(e0^2 h).
GridFunction stationary_density(const SpectralSolution& sol);

/// f_inf proportional to e0 (the L2-normalized ground state).
GridFunction stationary_f(const SpectralSolution& sol);

struct StationaryControl {
    GridFunction v;  // v_inf = -sigma^2 R ln e0 - R nu
    GridFunction u;  // u_inf = -grad v_inf / R
};

StationaryControl stationary_value_and_control(const SpectralSolution& sol);

struct PerturbationEvolution {
    std::vector<double> times;
    std::vector<GridFunction> densities;
    /// ||g~(t)||_2 (measure h) for every requested time.
    std::vector<double> perturbation_norms;
    /// g_n(0), n = 0..m-1 (g_0 is forced to zero).
    std::vector<double> initial_coefficients;
    /// sum_{n>=1} g_n(0)^2 / ||g~(0)||^2
    double captured_energy = 0.0;
};

/// Modal solution of the hermitized perturbation equation:
///     p(t) = f_inf (g_inf + sum_{n>=1} g_n(0) exp(-(lambda_n - lambda_0) t) e_n)
/// p0 must be a nonnegative density on the solution grid with unit mass
/// (sum p0 h = 1 +- 1e-6).
PerturbationEvolution evolve_perturbation(const SpectralSolution& sol, const GridFunction& p0,
                                          const std::vector<double>& times, double min_captured_energy = 0.999);

}  // namespace popctl
