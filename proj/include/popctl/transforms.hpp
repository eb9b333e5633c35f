#pragma once

#include "popctl/grid_function.hpp"
#include "popctl/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace popctl {

/// Positivity floor below which quotients by f are refused.
inline constexpr double kPositivityFloor = 1e-300;

/// Schrodinger potential of the integrator-dynamics problem:
///     V = q + (R/2)|grad nu|^2 - (sigma^2 R / 2) lap nu + shift
class ModifiedPotential {
public:
    explicit ModifiedPotential(ControlProblem problem, double shift = 0.0);

    const ControlProblem& problem() const noexcept { return problem_; }
    double shift() const noexcept { return shift_; }
    std::size_t dim() const noexcept { return problem_.dim; }
    ModifiedPotential with_shift(double shift) const { return ModifiedPotential(problem_, shift); }

    double value(std::span<const double> x) const;
    double value(double x) const { return value(std::span<const double>(&x, 1)); }

    /// 4th-order central differences of `value` (step 1e-3 max(1,|x_k|)).
    void gradient(std::span<const double> x, std::span<double> out) const;
    Point gradient(std::span<const double> x) const;

private:
    ControlProblem problem_;
    double shift_;
};

ModifiedPotential modified_potential(const ControlProblem& problem);

/// f = exp(-(v + R nu) / (sigma^2 R)). Throws a range error if f over- or
/// underflows, naming the grid point.
GridFunction value_to_f(const GridFunction& v, const ControlProblem& problem);

/// v = -sigma^2 R ln f - R nu. Throws a domain error where f <= 0.
GridFunction f_to_value(const GridFunction& f, const ControlProblem& problem);

/// g = p / f. Throws a domain error for p < 0 and a range error where f is
/// below kPositivityFloor.
GridFunction hermitize(const GridFunction& p, const GridFunction& f);

/// p = f g.
GridFunction dehermitize(const GridFunction& g, const GridFunction& f);

/// Optimal control of the Langevin problem from the transformed value:
///     u* = sigma^2 grad f / f + grad nu
/// so that the closed-loop drift -grad nu + u* equals sigma^2 grad f / f.
Point control_from_f(double f, std::span<const double> grad_f, const ControlProblem& problem,
                     std::span<const double> x);

/// Same, with f and its gradient taken from grid functions by interpolation.
Point control_from_f(const GridFunction& f, const std::vector<GridFunction>& grad_f,
                     const ControlProblem& problem, std::span<const double> x);
Point control_from_f(const GridFunction& f, const ControlProblem& problem, std::span<const double> x);

std::vector<GridFunction> gradient(const GridFunction& f);

struct Box {
    Point lo;
    Point hi;

    std::size_t dim() const noexcept { return lo.size(); }
    bool contains(std::span<const double> x, double inflate = 0.0) const;
};

struct DesignReport {
    // A1 (confinement) via the outward-ray monotonicity proxy.
    bool a1_pass = false;
    std::vector<std::string> a1_failed_directions;
    // A2 (nonnegativity)
    double min_V = 0.0;
    Point argmin_V;
    double required_shift = 0.0;
    bool a2_pass = false;
    // Growth of q: log2 of (1 + |q|) between the half-way point and the box
    // face, maximized over the rays. Reported only.
    double q_growth_exponent = 0.0;
    bool q_at_most_quadratic = true;
};

/// A1 is a limit at infinity; along every axis and corner ray from the box
/// center this checks that V on the outer 20% of the ray stays above its
/// maximum on the inner half. A2 is checked on an
/// n^d tensor grid and reported with the smallest additive shift that repairs it.
DesignReport check_design_constraints(const ModifiedPotential& Vp, const Box& domain, std::size_t n);

}  // namespace popctl
