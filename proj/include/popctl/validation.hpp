#pragma once

#include "popctl/spectral.hpp"

#include <string>
#include <vector>

namespace popctl {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// Ids of the acceptance criteria, 1..9.
std::vector<int> criterion_ids();

/// Runs one acceptance criterion at its stated tolerances. Library errors are
/// caught and reported as failures.
CriterionResult run_criterion(int id);

/// "PASS <id> <name> (<seconds> s): <detail>"
std::string format_result(const CriterionResult& r);

/// Scalar Riccati ODE for nu = c x^2 / 2, q = beta x^2 integrated backward
/// from P(T) = 0 with RK4:
///     -dP/dt = 2 beta - P^2 / R - 2 c P
double riccati_oracle(double beta, double R, double c, double T, double t, double dt = 1e-4);

/// Decay rate of a density perturbation under the stationary closed loop,
/// from an independent Crank-Nicolson finite-volume Fokker-Planck integration
/// on |x| <= half_width (zero-flux ends). The rate is fitted to
/// log ||p(t + dt) - p(t)|| over t in [t_fit_lo, t_fit_hi].
double fokker_planck_decay_rate(const SpectralSolution& sol, double eps, double half_width, double dt,
                                double t_fit_lo, double t_fit_hi);

}  // namespace popctl
