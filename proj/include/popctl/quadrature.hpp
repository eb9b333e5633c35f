#pragma once

#include "popctl/gauss_hermite.hpp"
#include "popctl/grid_function.hpp"
#include "popctl/model.hpp"
#include "popctl/transforms.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace popctl {

/// One axis of a quadrature grid: Gauss-Hermite nodes mapped affinely as
/// xi = center + scale * y. `weights` integrate against Lebesgue measure
/// (scale * w_i * exp(y_i^2)); `gaussian_weights` (w_i / sqrt(pi)) integrate
/// against the normal density with mean `center` and standard deviation
/// scale / sqrt(2).
struct QuadAxis {
    double center = 0.0;
    double scale = 1.0;
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> log_weights;
    std::vector<double> gaussian_weights;
};

/// Tensor-product Gauss-Hermite grid, M points per dimension, row-major.
class QuadGrid {
public:
    QuadGrid() = default;
    explicit QuadGrid(std::vector<QuadAxis> axes);

    /// Outermost nodes land on the faces of the box.
    static QuadGrid spanning(const Box& box, std::size_t m);
    /// Explicit center and scale per dimension.
    static QuadGrid centered(std::span<const double> center, std::span<const double> scale, std::size_t m);

    std::size_t dim() const noexcept { return axes_.size(); }
    std::size_t points_per_axis() const noexcept { return axes_.empty() ? 0 : axes_[0].nodes.size(); }
    std::size_t size() const noexcept;
    const QuadAxis& axis(std::size_t k) const { return axes_.at(k); }
    Point node(std::size_t flat) const;
    Box bounds() const;

private:
    std::vector<QuadAxis> axes_;
};

/// Log of the terminal condition f(T, x). The default, from v(T, .) = 0, is
/// -nu(x) / sigma^2; a terminal cost phi gives -(phi + R nu) / (sigma^2 R).
using LogTerminal = std::function<double(std::span<const double>)>;

double terminal_log_f(const ControlProblem& problem, std::span<const double> x,
                      const std::function<double(std::span<const double>)>& terminal_cost = {});
double terminal_f(const ControlProblem& problem, std::span<const double> x,
                  const std::function<double(std::span<const double>)>& terminal_cost = {});

struct QuadratureOptions {
    std::size_t M = 20;
    double dt = 0.1;
    /// Horizon; defaults to problem.horizon.
    std::optional<double> T;
    double t0 = 0.0;
    /// Grid box; required for `build`.
    std::optional<Box> domain;
    /// Explicit grid, overriding `domain`.
    std::optional<QuadGrid> grid;
    std::size_t max_cells = 1'000'000;
    /// Overrides the default terminal condition.
    LogTerminal log_terminal;
};

/// Backward messages of the discrete Feynman-Kac recursion
///     f(t_n, x) ~ b_n^T Phi0(x),   b_{N-1} = gamma_N,   b_{n-1} = Gamma Phi~^T b_n
/// on a fixed tensor grid. Each b_n is stored scaled to unit maximum together
/// with the log of the removed factor.
class QuadratureSolution {
public:
    QuadratureSolution(ModifiedPotential V, QuadGrid grid, double t0, double dt, std::size_t steps,
                       std::vector<std::vector<double>> messages, std::vector<double> log_scales);

    const ControlProblem& problem() const noexcept { return V_.problem(); }
    const ModifiedPotential& potential() const noexcept { return V_; }
    const QuadGrid& grid() const noexcept { return grid_; }
    double dt() const noexcept { return dt_; }
    std::size_t steps() const noexcept { return steps_; }
    double t0() const noexcept { return t0_; }
    double horizon() const noexcept { return t0_ + dt_ * static_cast<double>(steps_); }
    double time(std::size_t n) const { return t0_ + dt_ * static_cast<double>(n); }
    const std::vector<double>& message(std::size_t n) const { return messages_.at(n); }
    double log_scale(std::size_t n) const { return log_scales_.at(n); }

    /// Index n with t == t_n (within 1e-9 dt); usage error otherwise.
    std::size_t step_index(double t) const;
    /// Index of the step whose interval [t_n, t_{n+1}) contains t.
    std::size_t step_index_floor(double t) const;

    double evaluate_log_f(std::size_t n, std::span<const double> x) const;
    /// grad log f at step n.
    Point evaluate_grad_log_f(std::size_t n, std::span<const double> x, double* log_f = nullptr) const;

    /// True if x lies in the grid box inflated by 10% per side.
    bool in_domain(std::span<const double> x) const;

private:
    void check_query(std::span<const double> x) const;

    ModifiedPotential V_;
    QuadGrid grid_;
    double t0_;
    double dt_;
    std::size_t steps_;
    std::vector<std::vector<double>> messages_;
    std::vector<double> log_scales_;
};

QuadratureSolution build(const ControlProblem& problem, const QuadratureOptions& options);

/// f(t, x) at a grid time t in {t_0, ..., t_{N-1}}.
double evaluate_f(const QuadratureSolution& sol, double t, std::span<const double> x);
double evaluate_log_f(const QuadratureSolution& sol, double t, std::span<const double> x);

/// u*(t, x) = sigma^2 grad f / f + grad nu, with the gradient of Phi0 taken
/// analytically.
Point evaluate_control(const QuadratureSolution& sol, double t, std::span<const double> x);

/// Integrator-dynamics control u^ = sigma^2 grad f / f (the closed-loop drift).
Point evaluate_integrator_control(const QuadratureSolution& sol, double t, std::span<const double> x);

/// CSV with header "t,x1..xd,f,log_f,v_hat,v" over the nodes of `grid`, where
/// v_hat = -sigma^2 R log f and v = v_hat - R nu.
void write_value_surface(const QuadratureSolution& sol, double t, const RectGrid& grid, std::ostream& os);

/// Width of the per-query grid: 4 sigma (T - t) / sqrt(dt) per dimension,
/// floored at 4 sigma sqrt(dt).
double local_grid_width(const ControlProblem& problem, double t, double T, double dt);

/// Builds a grid of local_grid_width centered at x, runs the recursion from T
/// back to t and returns u*(t, x). At t == T the terminal control is returned.
Point local_control(const ControlProblem& problem, double t, std::span<const double> x, std::size_t M, double T,
                    double dt, const LogTerminal& log_terminal = {});
Point local_integrator_control(const ControlProblem& problem, double t, std::span<const double> x, std::size_t M,
                               double T, double dt, const LogTerminal& log_terminal = {});

}  // namespace popctl
