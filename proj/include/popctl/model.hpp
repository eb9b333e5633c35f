#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace popctl {

using Point = std::vector<double>;

/// A scalar field on R^d bundled with its gradient and Laplacian.
///
/// Builtin fields carry hand-coded derivatives. Fields built with
/// `from_value` differentiate numerically and report
/// `analytic_derivatives() == false`; downstream tolerances assume analytic
/// derivatives, so such fields are lower accuracy.
///
/// Every evaluation checks finiteness and throws ErrorKind::evaluation with the
/// offending location.
class ScalarField {
public:
    using ValueFn = std::function<double(std::span<const double>)>;
    using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;
    using LaplacianFn = std::function<double(std::span<const double>)>;

    ScalarField(std::size_t dim, std::string name, ValueFn value, GradientFn gradient,
                LaplacianFn laplacian);

    static ScalarField from_value(std::size_t dim, std::string name, ValueFn value);
    static ScalarField constant(std::size_t dim, double c);
    /// sum_k coeffs[k] * x^k on R.
    static ScalarField polynomial_1d(std::vector<double> coeffs, std::string name = "poly");

    std::size_t dim() const noexcept { return dim_; }
    const std::string& name() const noexcept { return name_; }
    bool analytic_derivatives() const noexcept { return analytic_; }

    double value(std::span<const double> x) const;
    void gradient(std::span<const double> x, std::span<double> out) const;
    Point gradient(std::span<const double> x) const;
    double laplacian(std::span<const double> x) const;

    // 1D shorthands
    double value(double x) const { return value(std::span<const double>(&x, 1)); }
    double derivative(double x) const;
    double laplacian(double x) const { return laplacian(std::span<const double>(&x, 1)); }

private:
    std::size_t dim_;
    std::string name_;
    ValueFn value_;
    GradientFn gradient_;
    LaplacianFn laplacian_;
    bool analytic_ = true;
};

/// Ergodic / finite-horizon control problem for agents obeying
///     dx = -grad nu(x) dt + u dt + sigma dW
/// with running cost q(x) + (R/2)|u|^2.
struct ControlProblem {
    std::string name;
    ScalarField nu;
    ScalarField q;
    double sigma;
    double R;
    std::size_t dim;
    std::optional<double> horizon;

    ControlProblem(std::string name, ScalarField nu, ScalarField q, double sigma, double R,
                   std::optional<double> horizon = std::nullopt);

    ControlProblem with_noise(double sigma_new) const;
    ControlProblem with_control_cost(double R_new) const;
    ControlProblem with_horizon(std::optional<double> T) const;
};

/// Passive drift -grad nu(x).
Point drift(const ControlProblem& problem, std::span<const double> x);
void drift(const ControlProblem& problem, std::span<const double> x, std::span<double> out);

/// Names accepted by builtin_problem.
std::vector<std::string> builtin_names();

/// cubic_1d, lqg_1d, uncontrolled_gibbs_1d, double_goal_2d with their default
/// parameters. Unknown names throw a configuration error listing valid names.
ControlProblem builtin_problem(std::string_view name);

/// nu = -x^3/3, q = 5/2 x^2, sigma = R = 1/2.
ControlProblem cubic_1d();
/// nu = x^2/2, q = beta x^2.
ControlProblem lqg_1d(double beta = 1.0, double sigma = 1.0, double R = 1.0);
/// nu = x^2/2, q = c0 (constant), so the stationary value function vanishes.
ControlProblem uncontrolled_gibbs_1d(double c0 = 1.0, double sigma = 1.0, double R = 1.0);
/// Two-goal cost on the four-well potential nu = cos(x1 x2)^2 / 2 + (x1^4 + x2^4)/24.
ControlProblem double_goal_2d(double Q = 0.1, double sigma = 0.2, double R = 1.0, double T = 4.0);

}  // namespace popctl
