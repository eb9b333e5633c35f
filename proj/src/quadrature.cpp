#include "popctl/quadrature.hpp"

#include "popctl/errors.hpp"
#include "popctl/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace popctl {

namespace {

QuadAxis make_axis(const GaussHermiteRule& rule, double center, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(center)) {
        fail(ErrorKind::configuration, "quadrature axis needs a finite center and positive scale");
    }
    QuadAxis a;
    a.center = center;
    a.scale = scale;
    const std::size_t m = rule.nodes.size();
    a.nodes.resize(m);
    a.weights.resize(m);
    a.log_weights.resize(m);
    a.gaussian_weights.resize(m);
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    for (std::size_t i = 0; i < m; ++i) {
        const double y = rule.nodes[i];
        a.nodes[i] = center + scale * y;
        a.log_weights[i] = std::log(scale) + rule.log_weights[i] + y * y;
        a.weights[i] = std::exp(a.log_weights[i]);
        a.gaussian_weights[i] = rule.weights[i] * inv_sqrt_pi;
    }
    return a;
}

double log_sum_exp(std::span<const double> terms) {
    double peak = -std::numeric_limits<double>::infinity();
    for (double t : terms) {
        peak = std::max(peak, t);
    }
    if (!std::isfinite(peak)) {
        return peak;
    }
    double sum = 0.0;
    for (double t : terms) {
        sum += std::exp(t - peak);
    }
    return peak + std::log(sum);
}

// Gradient of an arbitrary log-terminal by 4th-order central differences.
Point fd_gradient(const std::function<double(std::span<const double>)>& fn, std::span<const double> x) {
    Point g(x.size());
    Point xp(x.begin(), x.end());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double h = 1e-3 * std::max(1.0, std::abs(x[k]));
        auto at = [&](double off) {
            xp[k] = x[k] + off;
            return fn(xp);
        };
        g[k] = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
        xp[k] = x[k];
    }
    return g;
}

std::size_t horizon_steps(double T, double t0, double dt) {
    if (!(dt > 0.0)) {
        fail(ErrorKind::configuration, "quadrature timestep dt must be positive");
    }
    const double span = T - t0;
    if (!(span > 0.0)) {
        fail(ErrorKind::configuration, "quadrature horizon must exceed the start time");
    }
    const double ratio = span / dt;
    const double steps = std::round(ratio);
    if (steps < 1.0 || std::abs(steps * dt - span) > 1e-12 * std::max(1.0, std::abs(T))) {
        std::ostringstream os;
        os.precision(17);
        os << "dt = " << dt << " does not divide the horizon " << span;
        fail(ErrorKind::configuration, os.str());
    }
    return static_cast<std::size_t>(steps);
}

}  // namespace

QuadGrid::QuadGrid(std::vector<QuadAxis> axes) : axes_(std::move(axes)) {
    for (const auto& a : axes_) {
        if (a.nodes.size() != axes_.front().nodes.size()) {
            fail(ErrorKind::configuration, "quadrature axes must have the same number of points");
        }
    }
}

QuadGrid QuadGrid::spanning(const Box& box, std::size_t m) {
    const GaussHermiteRule rule = gauss_hermite(m);
    const double ymax = rule.nodes.back();
    std::vector<QuadAxis> axes;
    for (std::size_t k = 0; k < box.dim(); ++k) {
        const double half = 0.5 * (box.hi[k] - box.lo[k]);
        if (!(half > 0.0)) {
            fail(ErrorKind::configuration, "quadrature box is empty along axis " + std::to_string(k));
        }
        axes.push_back(make_axis(rule, 0.5 * (box.lo[k] + box.hi[k]), half / ymax));
    }
    return QuadGrid(std::move(axes));
}

QuadGrid QuadGrid::centered(std::span<const double> center, std::span<const double> scale, std::size_t m) {
    const GaussHermiteRule rule = gauss_hermite(m);
    std::vector<QuadAxis> axes;
    for (std::size_t k = 0; k < center.size(); ++k) {
        axes.push_back(make_axis(rule, center[k], scale[k]));
    }
    return QuadGrid(std::move(axes));
}

std::size_t QuadGrid::size() const noexcept {
    std::size_t n = axes_.empty() ? 0 : 1;
    for (const auto& a : axes_) {
        n *= a.nodes.size();
    }
    return n;
}

Point QuadGrid::node(std::size_t flat) const {
    Point p(axes_.size());
    for (std::size_t k = axes_.size(); k-- > 0;) {
        const std::size_t m = axes_[k].nodes.size();
        p[k] = axes_[k].nodes[flat % m];
        flat /= m;
    }
    return p;
}

Box QuadGrid::bounds() const {
    Box b;
    for (const auto& a : axes_) {
        b.lo.push_back(a.nodes.front());
        b.hi.push_back(a.nodes.back());
    }
    return b;
}

double terminal_log_f(const ControlProblem& problem, std::span<const double> x,
                      const std::function<double(std::span<const double>)>& terminal_cost) {
    const double phi = terminal_cost ? terminal_cost(x) : 0.0;
    return -(phi + problem.R * problem.nu.value(x)) / (problem.sigma * problem.sigma * problem.R);
}

double terminal_f(const ControlProblem& problem, std::span<const double> x,
                  const std::function<double(std::span<const double>)>& terminal_cost) {
    const double lf = terminal_log_f(problem, x, terminal_cost);
    const double f = std::exp(lf);
    if (!std::isfinite(f) || !(f > 0.0)) {
        std::ostringstream os;
        os.precision(17);
        os << "terminal f = exp(" << lf << ") is not representable; use terminal_log_f";
        fail(ErrorKind::range, os.str());
    }
    return f;
}

QuadratureSolution::QuadratureSolution(ModifiedPotential V, QuadGrid grid, double t0, double dt, std::size_t steps,
                                       std::vector<std::vector<double>> messages, std::vector<double> log_scales)
    : V_(std::move(V)), grid_(std::move(grid)), t0_(t0), dt_(dt), steps_(steps), messages_(std::move(messages)),
      log_scales_(std::move(log_scales)) {}

std::size_t QuadratureSolution::step_index(double t) const {
    const double r = (t - t0_) / dt_;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-9 || n < 0.0 || n >= static_cast<double>(steps_)) {
        std::ostringstream os;
        os.precision(17);
        os << "t = " << t << " is not one of the grid times t0 + n dt, n < " << steps_;
        fail(ErrorKind::usage, os.str());
    }
    return static_cast<std::size_t>(n);
}

std::size_t QuadratureSolution::step_index_floor(double t) const {
    const double r = std::floor((t - t0_) / dt_ + 1e-9);
    if (r <= 0.0) {
        return 0;
    }
    return std::min(static_cast<std::size_t>(r), steps_ - 1);
}

bool QuadratureSolution::in_domain(std::span<const double> x) const {
    return grid_.bounds().contains(x, 0.1);
}

void QuadratureSolution::check_query(std::span<const double> x) const {
    if (x.size() != grid_.dim()) {
        fail(ErrorKind::usage, "query point has the wrong dimension");
    }
    if (!in_domain(x)) {
        std::ostringstream os;
        os.precision(17);
        os << "query point (";
        for (std::size_t k = 0; k < x.size(); ++k) {
            os << (k ? ", " : "") << x[k];
        }
        os << ") is outside the quadrature domain; extrapolation refused";
        fail(ErrorKind::range, os.str());
    }
}

namespace {

struct Phi0Terms {
    std::vector<double> terms;  // log b_i + log p(xi_i | x)
    double log_w0;
};

}  // namespace

static Phi0Terms phi0_terms(const QuadGrid& grid, const ModifiedPotential& V, double dt,
                            const std::vector<double>& message, std::span<const double> x) {
    const ControlProblem& p = V.problem();
    const double s2 = p.sigma * p.sigma * dt;
    const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * s2);
    const std::size_t d = grid.dim();
    const std::size_t m = grid.points_per_axis();
    std::vector<std::vector<double>> lphi(d, std::vector<double>(m));
    for (std::size_t k = 0; k < d; ++k) {
        const auto& nodes = grid.axis(k).nodes;
        for (std::size_t i = 0; i < m; ++i) {
            const double r = nodes[i] - x[k];
            lphi[k][i] = -r * r / (2.0 * s2) + log_norm;
        }
    }
    Phi0Terms out;
    out.log_w0 = -V.value(x) * dt / (p.sigma * p.sigma * p.R);
    out.terms.resize(message.size());
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t flat = 0; flat < message.size(); ++flat) {
        double l = message[flat] > 0.0 ? std::log(message[flat]) : -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < d; ++k) {
            l += lphi[k][idx[k]];
        }
        out.terms[flat] = l;
        for (std::size_t k = d; k-- > 0;) {
            if (++idx[k] < m) {
                break;
            }
            idx[k] = 0;
        }
    }
    return out;
}

double QuadratureSolution::evaluate_log_f(std::size_t n, std::span<const double> x) const {
    check_query(x);
    const Phi0Terms t = phi0_terms(grid_, V_, dt_, messages_.at(n), x);
    const double lse = log_sum_exp(t.terms);
    if (!std::isfinite(lse)) {
        fail(ErrorKind::control, "f underflows at the query point (no quadrature node carries weight)");
    }
    return log_scales_[n] + t.log_w0 + lse;
}

Point QuadratureSolution::evaluate_grad_log_f(std::size_t n, std::span<const double> x, double* log_f) const {
    check_query(x);
    const ControlProblem& p = V_.problem();
    const Phi0Terms t = phi0_terms(grid_, V_, dt_, messages_.at(n), x);
    const double lse = log_sum_exp(t.terms);
    if (!std::isfinite(lse)) {
        fail(ErrorKind::control, "denominator of the control underflows at the query point");
    }
    if (log_f != nullptr) {
        *log_f = log_scales_[n] + t.log_w0 + lse;
    }
    const std::size_t d = grid_.dim();
    const std::size_t m = grid_.points_per_axis();
    Point mean(d, 0.0);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t flat = 0; flat < t.terms.size(); ++flat) {
        const double w = std::exp(t.terms[flat] - lse);
        if (w != 0.0) {
            for (std::size_t k = 0; k < d; ++k) {
                mean[k] += w * grid_.axis(k).nodes[idx[k]];
            }
        }
        for (std::size_t k = d; k-- > 0;) {
            if (++idx[k] < m) {
                break;
            }
            idx[k] = 0;
        }
    }
    const Point gradV = V_.gradient(x);
    const double s2 = p.sigma * p.sigma * dt_;
    Point g(d);
    for (std::size_t k = 0; k < d; ++k) {
        g[k] = -dt_ * gradV[k] / (p.sigma * p.sigma * p.R) + (mean[k] - x[k]) / s2;
    }
    return g;
}

QuadratureSolution build(const ControlProblem& problem, const QuadratureOptions& options) {
    if (options.M < 5) {
        fail(ErrorKind::configuration, "quadrature needs at least 5 points per dimension");
    }
    const std::optional<double> T = options.T ? options.T : problem.horizon;
    if (!T) {
        fail(ErrorKind::configuration, "finite-horizon solve needs a horizon T");
    }
    const std::size_t steps = horizon_steps(*T, options.t0, options.dt);
    QuadGrid grid;
    if (options.grid) {
        grid = *options.grid;
    } else if (options.domain) {
        if (options.domain->dim() != problem.dim) {
            fail(ErrorKind::configuration, "quadrature box dimension does not match the problem");
        }
        // M^d overflow guard before building anything.
        double cells = 1.0;
        for (std::size_t k = 0; k < problem.dim; ++k) {
            cells *= static_cast<double>(options.M);
        }
        if (cells > static_cast<double>(options.max_cells)) {
            std::ostringstream os;
            os << "grid of " << cells << " cells exceeds the cap of " << options.max_cells
               << "; use local mode (per-agent grids) or a smaller M";
            fail(ErrorKind::size, os.str());
        }
        grid = QuadGrid::spanning(*options.domain, options.M);
    } else {
        fail(ErrorKind::configuration, "quadrature build needs a domain box or an explicit grid");
    }
    if (grid.dim() != problem.dim) {
        fail(ErrorKind::configuration, "quadrature grid dimension does not match the problem");
    }
    if (grid.size() > options.max_cells) {
        fail(ErrorKind::size, "quadrature grid exceeds the cell cap; use local mode");
    }

    const ModifiedPotential V = modified_potential(problem);
    const double dt = options.dt;
    const std::size_t d = grid.dim();
    const std::size_t m = grid.points_per_axis();
    const std::size_t cells = grid.size();
    const double s2 = problem.sigma * problem.sigma * dt;
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * s2);

    // 1D transition factors (symmetric, so equal to their transpose).
    std::vector<std::vector<double>> trans(d, std::vector<double>(m * m));
    for (std::size_t k = 0; k < d; ++k) {
        const auto& nodes = grid.axis(k).nodes;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const double r = nodes[i] - nodes[j];
                trans[k][i * m + j] = norm * std::exp(-r * r / (2.0 * s2));
            }
        }
    }

    std::vector<double> log_alpha(cells);
    std::vector<double> log_gamma(cells);
    std::vector<double> log_terminal(cells);
    {
        std::vector<std::size_t> idx(d, 0);
        Point x(d);
        for (std::size_t flat = 0; flat < cells; ++flat) {
            double la = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                la += grid.axis(k).log_weights[idx[k]];
                x[k] = grid.axis(k).nodes[idx[k]];
            }
            log_alpha[flat] = la;
            log_gamma[flat] = la - V.value(x) * dt / (problem.sigma * problem.sigma * problem.R);
            log_terminal[flat] = la + (options.log_terminal ? options.log_terminal(x) : terminal_log_f(problem, x));
            for (std::size_t k = d; k-- > 0;) {
                if (++idx[k] < m) {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
    const double gamma_peak = *std::max_element(log_gamma.begin(), log_gamma.end());
    std::vector<double> gamma_hat(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        gamma_hat[i] = std::exp(log_gamma[i] - gamma_peak);
    }

    std::vector<std::vector<double>> messages(steps);
    std::vector<double> log_scales(steps);
    {
        const double peak = *std::max_element(log_terminal.begin(), log_terminal.end());
        if (!std::isfinite(peak)) {
            fail(ErrorKind::range, "terminal condition is not finite on the grid");
        }
        std::vector<double> b(cells);
        for (std::size_t i = 0; i < cells; ++i) {
            b[i] = std::exp(log_terminal[i] - peak);
        }
        messages[steps - 1] = std::move(b);
        log_scales[steps - 1] = peak;
    }
    const auto& kt = kernels::active();
    std::vector<double> buf_a(cells);
    std::vector<double> buf_b(cells);
    for (std::size_t n = steps - 1; n-- > 0;) {
        // Phi~^T b applied axis by axis, then the diagonal Gamma.
        std::copy(messages[n + 1].begin(), messages[n + 1].end(), buf_a.begin());
        std::size_t outer = 1;
        std::size_t inner = cells / m;
        for (std::size_t k = 0; k < d; ++k) {
            kernels::apply_along_axis(trans[k], m, outer, inner, buf_a, buf_b, kt);
            std::swap(buf_a, buf_b);
            outer *= m;
            inner /= m;
        }
        kt.hadamard(gamma_hat.data(), buf_a.data(), buf_a.data(), cells);
        const double peak = kt.max(buf_a.data(), cells);
        if (!(peak > 0.0) || !std::isfinite(peak)) {
            fail(ErrorKind::numerical, "backward message vanished despite log-scaling (internal invariant)");
        }
        kt.scale(1.0 / peak, buf_a.data(), cells);
        messages[n] = buf_a;
        log_scales[n] = log_scales[n + 1] + gamma_peak + std::log(peak);
    }
    return QuadratureSolution(V, std::move(grid), options.t0, dt, steps, std::move(messages), std::move(log_scales));
}

double evaluate_log_f(const QuadratureSolution& sol, double t, std::span<const double> x) {
    return sol.evaluate_log_f(sol.step_index(t), x);
}

double evaluate_f(const QuadratureSolution& sol, double t, std::span<const double> x) {
    const double lf = evaluate_log_f(sol, t, x);
    const double f = std::exp(lf);
    if (!std::isfinite(f) || !(f > 0.0)) {
        fail(ErrorKind::range, "f is not representable at this point; use evaluate_log_f");
    }
    return f;
}

Point evaluate_integrator_control(const QuadratureSolution& sol, double t, std::span<const double> x) {
    Point g = sol.evaluate_grad_log_f(sol.step_index(t), x);
    const double s2 = sol.problem().sigma * sol.problem().sigma;
    for (double& gi : g) {
        gi *= s2;
    }
    return g;
}

Point evaluate_control(const QuadratureSolution& sol, double t, std::span<const double> x) {
    Point u = evaluate_integrator_control(sol, t, x);
    const Point gnu = sol.problem().nu.gradient(x);
    for (std::size_t k = 0; k < u.size(); ++k) {
        u[k] += gnu[k];
    }
    return u;
}

void write_value_surface(const QuadratureSolution& sol, double t, const RectGrid& grid, std::ostream& os) {
    const std::size_t n = sol.step_index(t);
    const ControlProblem& p = sol.problem();
    const double scale = p.sigma * p.sigma * p.R;
    os << "t";
    for (std::size_t k = 0; k < grid.dim(); ++k) {
        os << ",x" << (k + 1);
    }
    os << ",f,log_f,v_hat,v\n";
    os.precision(17);
    Point x(grid.dim());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.point(i, x);
        const double lf = sol.evaluate_log_f(n, x);
        const double v_hat = -scale * lf;
        os << t;
        for (double xk : x) {
            os << ',' << xk;
        }
        os << ',' << std::exp(lf) << ',' << lf << ',' << v_hat << ',' << v_hat - p.R * p.nu.value(x) << '\n';
    }
}

double local_grid_width(const ControlProblem& problem, double t, double T, double dt) {
    const double width = 4.0 * problem.sigma * (T - t) / std::sqrt(dt);
    const double floor = 4.0 * problem.sigma * std::sqrt(dt);
    return std::max(width, floor);
}

Point local_integrator_control(const ControlProblem& problem, double t, std::span<const double> x, std::size_t M,
                               double T, double dt, const LogTerminal& log_terminal) {
    const double s2 = problem.sigma * problem.sigma;
    if (std::abs(T - t) <= 1e-9 * dt) {
        const LogTerminal lt =
            log_terminal ? log_terminal : LogTerminal([&problem](std::span<const double> y) {
                return terminal_log_f(problem, y);
            });
        Point g = fd_gradient(lt, x);
        for (double& gi : g) {
            gi *= s2;
        }
        return g;
    }
    const double half = 0.5 * local_grid_width(problem, t, T, dt);
    const GaussHermiteRule rule = gauss_hermite(M);
    const double scale = half / rule.nodes.back();
    const Point scales(x.size(), scale);
    QuadratureOptions opt;
    opt.M = M;
    opt.dt = dt;
    opt.T = T;
    opt.t0 = t;
    opt.grid = QuadGrid::centered(x, scales, M);
    opt.log_terminal = log_terminal;
    const QuadratureSolution sol = build(problem, opt);
    Point g = sol.evaluate_grad_log_f(0, x);
    for (double& gi : g) {
        gi *= s2;
    }
    return g;
}

Point local_control(const ControlProblem& problem, double t, std::span<const double> x, std::size_t M, double T,
                    double dt, const LogTerminal& log_terminal) {
    Point u = local_integrator_control(problem, t, x, M, T, dt, log_terminal);
    const Point gnu = problem.nu.gradient(x);
    for (std::size_t k = 0; k < u.size(); ++k) {
        u[k] += gnu[k];
    }
    return u;
}

}  // namespace popctl
