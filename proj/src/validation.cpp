#include "popctl/validation.hpp"

#include "popctl/errors.hpp"
#include "popctl/gauss_hermite.hpp"
#include "popctl/quadrature.hpp"
#include "popctl/simulate.hpp"
#include "popctl/transforms.hpp"
#include "popctl/tridiagonal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace popctl {

namespace {

std::string num(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

using Check = std::function<bool(std::string&)>;

struct Spec {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime limit
    Check check;
};

// 1. Harmonic oscillator: V / (sigma^2 R) = x^2 / 2 has lambda_n = n + 1/2.
bool harmonic_oscillator(std::string& detail) {
    const ControlProblem qho("qho", ScalarField::constant(1, 0.0), ScalarField::polynomial_1d({0.0, 0.0, 0.5}, "q"),
                             1.0, 1.0);
    const SpectralSolution s = solve_eigen(qho, -10.0, 10.0, 2000, 4);
    const double l0 = s.eigenvalue(0);
    const double gap = s.gap();
    detail = "lambda0 = " + num(l0, 10) + ", gap = " + num(gap, 10);
    return std::abs(l0 - 0.5) <= 1e-4 && std::abs(gap - 1.0) <= 1e-4;
}

// 2. Gibbs density exp(-2 nu / sigma^2) / Z, zero stationary control.
bool gibbs_density(std::string& detail) {
    const ControlProblem p = uncontrolled_gibbs_1d();
    const SpectralSolution s = solve_eigen(p, -8.0, 8.0, 4000, 4);
    const GridFunction dens = stationary_density(s);
    const StationaryControl vu = stationary_value_and_control(s);
    const auto& xs = dens.grid().axis(0);
    const double s2 = p.sigma * p.sigma;
    const double Z = std::sqrt(std::numbers::pi * s2);
    double peak = 0.0;
    for (std::size_t i = 0; i < dens.size(); ++i) {
        peak = std::max(peak, dens[i]);
    }
    double linf = 0.0;
    double usup = 0.0;
    for (std::size_t i = 0; i < dens.size(); ++i) {
        const double gibbs = std::exp(-2.0 * p.nu.value(xs[i]) / s2) / Z;
        linf = std::max(linf, std::abs(dens[i] - gibbs));
        if (dens[i] > 1e-8 * peak) {
            usup = std::max(usup, std::abs(vu.u[i]));
        }
    }
    detail = "L_inf(p) = " + num(linf) + ", sup|u| on support = " + num(usup);
    return linf <= 1e-3 && usup <= 1e-4;
}

// 3. LQG: stationary u = -a x / R and finite-horizon u = -P(t) x / R.
bool lqg(std::string& detail) {
    const ControlProblem p = lqg_1d();
    const double states[] = {-1.8, -1.4, -1.0, -0.6, -0.2, 0.2, 0.6, 1.0, 1.4, 1.8};
    const double a = p.R * (-1.0 + std::sqrt(1.0 + 2.0 * 1.0 / p.R));

    const SpectralSolution s = solve_eigen(p, -8.0, 8.0, 2000, 4);
    const GridFunction u_inf = stationary_value_and_control(s).u;
    double stat_err = 0.0;
    for (double x : states) {
        stat_err = std::max(stat_err, std::abs(u_inf.interpolate(x) + a * x / p.R) / std::abs(a * x / p.R));
    }

    const double T = 1.0;
    QuadratureOptions opt;
    opt.M = 300;
    opt.dt = 0.002;
    opt.T = T;
    opt.domain = Box{{-4.0}, {4.0}};
    const QuadratureSolution q = build(p, opt);
    double fh_err = 0.0;
    double alt_err = 0.0;
    for (double t : {0.0, 0.2, 0.4, 0.6, 0.8}) {
        const double P = riccati_oracle(1.0, p.R, 1.0, T, t);
        for (double x : states) {
            const double xs[1] = {x};
            const double exact = -P * x / p.R;
            const double u = evaluate_control(q, t, xs)[0];
            // The law without the grad nu term.
            const double u_alt = evaluate_integrator_control(q, t, xs)[0];
            fh_err = std::max(fh_err, std::abs(u - exact) / std::abs(exact));
            alt_err = std::max(alt_err, std::abs(u_alt - exact) / std::abs(exact));
        }
    }
    detail = "stationary rel = " + num(stat_err) + ", finite-horizon rel = " + num(fh_err) +
             ", without grad nu rel = " + num(alt_err);
    return stat_err <= 1e-2 && fh_err <= 1e-2;
}

// 4. Uniform agents on [-2, 2] converge to p_inf under u_inf.
bool fig1(std::string& detail) {
    const SpectralSolution s = solve_stationary(cubic_1d());
    StationaryExperiment cfg;
    const ExperimentReport r = run_stationary_experiment(s, cfg);
    bool monotone = true;
    for (std::size_t i = 2; i < r.l1_series.size(); ++i) {
        monotone = monotone && r.l1_series[i] <= r.l1_series[i - 1];
    }
    detail = "samples = " + std::to_string(cfg.agents * cfg.realizations) + ", L1 series =";
    for (double l : r.l1_series) {
        detail += " " + num(l);
    }
    detail += ", escape = " + num(r.escape_fraction);
    return r.pass && monotone;
}

// 5. A single-mode perturbation decays at the spectral gap.
bool perturbation_decay(std::string& detail) {
    const SpectralSolution s = solve_stationary(cubic_1d());
    const double gap = s.gap();
    const double rate = fokker_planck_decay_rate(s, 0.02, 3.0, 1e-3, 0.5 / gap, 4.0 / gap);
    detail = "fitted rate = " + num(rate, 6) + ", gap = " + num(gap, 6) + ", rel = " + num(std::abs(rate - gap) / gap);
    return std::abs(rate - gap) <= 0.05 * gap;
}

// 6. Clusters without control, goal concentration with control.
bool fig2(std::string& detail) {
    const ControlProblem p = double_goal_2d(0.1, 0.2, 1.0, 4.0);
    QuadratureOptions opt;
    opt.M = 20;
    opt.dt = 0.1;
    opt.T = 4.0;
    opt.domain = Box{{-2.0, -2.0}, {2.0, 2.0}};
    auto sol = std::make_shared<const QuadratureSolution>(build(p, opt));
    FiniteHorizonExperiment cfg;
    const ExperimentReport r = run_finite_horizon_experiment(p, quadrature_policy(sol), cfg, 4.0);

    bool clusters = true;
    for (double c : r.baseline_cluster_fractions) {
        clusters = clusters && c >= 0.15;
    }
    const double gain = r.goal_fractions.back() - r.baseline_goal_fractions.back();

    double worst_min = 0.0;
    for (double t : {0.0, 1.0, 2.0, 3.0}) {
        const std::size_t n = sol->step_index(t);
        for (const Point& goal : cfg.goals) {
            double best = std::numeric_limits<double>::infinity();
            Point arg;
            for (int i = 0; i <= 80; ++i) {
                for (int j = 0; j <= 80; ++j) {
                    const Point x{-2.0 + 0.05 * i, -2.0 + 0.05 * j};
                    // The half plane on the goal's side of x1 + x2 = 0.
                    if ((x[0] + x[1]) * (goal[0] + goal[1]) <= 0.0) {
                        continue;
                    }
                    const double v = -sol->evaluate_log_f(n, x);
                    if (v < best) {
                        best = v;
                        arg = x;
                    }
                }
            }
            worst_min = std::max(worst_min, std::hypot(arg[0] - goal[0], arg[1] - goal[1]));
        }
    }
    detail = "uncontrolled clusters =";
    for (double c : r.baseline_cluster_fractions) {
        detail += " " + num(c, 3);
    }
    detail += ", goal fraction = " + num(r.goal_fractions.back(), 3) +
              " vs baseline " + num(r.baseline_goal_fractions.back(), 3) + ", surface minima within " +
              num(worst_min, 3) + " of goals, escape = " + num(r.escape_fraction);
    return clusters && gain >= 0.2 && worst_min <= 0.3 && r.escape_fraction <= 0.01;
}

// 7. Quadrature micro-oracles.
bool quadrature_micro(std::string& detail) {
    const auto zero = ScalarField::constant(1, 0.0);

    // V = 0 with unit terminal value.
    double unit_err = 0.0;
    {
        const ControlProblem p("free", zero, zero, 0.5, 1.0);
        QuadratureOptions opt;
        opt.M = 80;
        opt.dt = 0.05;
        opt.T = 0.5;
        opt.domain = Box{{-4.0}, {4.0}};
        opt.log_terminal = [](std::span<const double>) { return 0.0; };
        const QuadratureSolution q = build(p, opt);
        for (std::size_t n = 0; n < q.steps(); ++n) {
            for (int i = 0; i <= 40; ++i) {
                const double x[1] = {-2.0 + 0.1 * i};
                unit_err = std::max(unit_err, std::abs(std::exp(q.evaluate_log_f(n, x)) - 1.0));
            }
        }
    }

    // One step, f(T, x) = x^2, kernel-aligned grid.
    double step_err = 0.0;
    {
        const double sigma = 1.0;
        const double dt = 0.1;
        const ControlProblem p("free", zero, zero, sigma, 1.0);
        for (double xbar : {-1.3, 0.0, 0.4, 2.0}) {
            const double c[1] = {xbar};
            const double sc[1] = {std::sqrt(2.0) * sigma * std::sqrt(dt)};
            QuadratureOptions opt;
            opt.dt = dt;
            opt.T = dt;
            opt.grid = QuadGrid::centered(c, sc, 10);
            opt.log_terminal = [](std::span<const double> x) { return std::log(x[0] * x[0]); };
            const QuadratureSolution q = build(p, opt);
            const double f = std::exp(q.evaluate_log_f(0, c));
            step_err = std::max(step_err, std::abs(f - (xbar * xbar + sigma * sigma * dt)));
        }
    }

    // Analytic control gradient against central differences of log f.
    double grad_err = 0.0;
    {
        const ControlProblem p = double_goal_2d();
        QuadratureOptions opt;
        opt.M = 20;
        opt.dt = 0.1;
        opt.T = 4.0;
        opt.domain = Box{{-2.0, -2.0}, {2.0, 2.0}};
        const QuadratureSolution q = build(p, opt);
        const NormalStream pts(11);
        for (std::uint64_t i = 0; i < 10; ++i) {
            const Point x{-1.5 + 3.0 * pts.uniform(i, 0, 0), -1.5 + 3.0 * pts.uniform(i, 0, 1)};
            const std::size_t n = static_cast<std::size_t>(pts.uniform(i, 0, 2) * static_cast<double>(q.steps()));
            const Point g = q.evaluate_grad_log_f(n, x);
            const double h = 1e-5;
            double diff = 0.0;
            double norm = 0.0;
            for (std::size_t k = 0; k < 2; ++k) {
                auto at = [&](double off) {
                    Point y = x;
                    y[k] += off;
                    return q.evaluate_log_f(n, y);
                };
                const double fd = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
                diff += (g[k] - fd) * (g[k] - fd);
                norm += fd * fd;
            }
            grad_err = std::max(grad_err, std::sqrt(diff / norm));
        }
    }

    // Gauss-Hermite moments of N(0, 1/2) up to degree 2M - 1.
    double moment_err = 0.0;
    for (std::size_t m : {5, 10, 20, 40}) {
        const GaussHermiteRule rule = gauss_hermite(m);
        double exact = 1.0;  // E[Y^k] for even k
        for (std::size_t k = 0; k <= 2 * m - 1; ++k) {
            double sum = 0.0;
            double scale = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double term = rule.weights[i] / std::sqrt(std::numbers::pi) * std::pow(rule.nodes[i], k);
                sum += term;
                scale += std::abs(term);
            }
            if (k % 2 == 1) {
                moment_err = std::max(moment_err, std::abs(sum) / scale);
            } else {
                if (k > 0) {
                    exact *= static_cast<double>(k - 1) / 2.0;
                }
                moment_err = std::max(moment_err, std::abs(sum - exact) / exact);
            }
        }
    }

    detail = "|f - 1| = " + num(unit_err) + ", one-step err = " + num(step_err) + ", gradient rel = " +
             num(grad_err) + ", GH moment rel = " + num(moment_err);
    return unit_err <= 1e-6 && step_err <= 1e-9 && grad_err <= 1e-5 && moment_err <= 1e-12;
}

// 8. Langevin with u* and integrator with u^ give the same trajectories.
bool p1_p2(std::string& detail) {
    const ControlProblem p = double_goal_2d();
    QuadratureOptions opt;
    opt.M = 20;
    opt.dt = 0.1;
    opt.T = 4.0;
    opt.domain = Box{{-2.0, -2.0}, {2.0, 2.0}};
    auto sol = std::make_shared<const QuadratureSolution>(build(p, opt));
    const Policy langevin = quadrature_policy(sol, Dynamics::langevin);
    const Policy integrator = quadrature_policy(sol, Dynamics::integrator);
    Ensemble a = uniform_ensemble(400, *opt.domain, 3);
    Ensemble b = a;
    double worst = 0.0;
    for (std::size_t s = 0; s < sol->steps(); ++s) {
        step(a, p, langevin, opt.dt, Dynamics::langevin);
        step(b, p, integrator, opt.dt, Dynamics::integrator);
        for (std::size_t i = 0; i < a.states.size(); ++i) {
            worst = std::max(worst, std::abs(a.states[i] - b.states[i]));
        }
    }
    detail = "max deviation = " + num(worst) + " over " + std::to_string(sol->steps()) + " steps";
    return worst <= 1e-12;
}

// 9. Transform round trips and design-constraint fixtures.
bool transforms(std::string& detail) {
    const ControlProblem cubic = cubic_1d();
    const RectGrid grid = RectGrid::uniform_1d(-2.0, 2.0, 401);
    const GridFunction v = GridFunction::sample(grid, [](std::span<const double> x) {
        return std::sin(3.0 * x[0]) + 0.25 * x[0] * x[0];
    });
    const GridFunction v2 = f_to_value(value_to_f(v, cubic), cubic);
    double value_err = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        value_err = std::max(value_err, std::abs(v2[i] - v[i]) / std::max(1.0, std::abs(v[i])));
    }
    const GridFunction p = GridFunction::sample(grid, [](std::span<const double> x) {
        return std::exp(-x[0] * x[0] / 0.5) / std::sqrt(0.5 * std::numbers::pi);
    });
    const GridFunction f = GridFunction::sample(grid, [](std::span<const double> x) {
        return std::exp(-std::pow(x[0] - 0.3, 2) / 0.8);
    });
    const GridFunction p2 = dehermitize(hermitize(p, f), f);
    double density_err = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        density_err = std::max(density_err, std::abs(p2[i] - p[i]) / p[i]);
    }

    const Box box{{-3.0}, {3.0}};
    const auto zero = ScalarField::constant(1, 0.0);
    const DesignReport rc = check_design_constraints(modified_potential(cubic), box, 2001);
    const ControlProblem qpos("q_pos", zero, ScalarField::polynomial_1d({0.0, 0.0, 1.0}, "q"), 1.0, 1.0);
    const ControlProblem qneg("q_neg", zero, ScalarField::polynomial_1d({0.0, 0.0, -1.0}, "q"), 1.0, 1.0);
    const DesignReport rp = check_design_constraints(modified_potential(qpos), box, 2001);
    const DesignReport rn = check_design_constraints(modified_potential(qneg), box, 2001);
    const bool cubic_ok = rc.a1_pass && !rc.a2_pass && rc.required_shift > 0.0;
    const bool pos_ok = rp.a1_pass && rp.a2_pass;
    const bool neg_ok = !rn.a1_pass;

    detail = "value round trip = " + num(value_err) + ", density round trip = " + num(density_err) +
             ", cubic_1d A1 " + (rc.a1_pass ? "pass" : "fail") + " shift " + num(rc.required_shift, 6) +
             ", q = x^2 " + (pos_ok ? "pass" : "fail") + ", q = -x^2 A1 " + (rn.a1_pass ? "pass" : "fail");
    return value_err <= 1e-12 && density_err <= 1e-12 && cubic_ok && pos_ok && neg_ok;
}

const std::vector<Spec>& specs() {
    static const std::vector<Spec> all = {
        {1, "harmonic oscillator spectrum", 5.0, harmonic_oscillator},
        {2, "Gibbs stationary density", 0.0, gibbs_density},
        {3, "LQG Riccati control", 0.0, lqg},
        {4, "cubic ensemble convergence", 60.0, fig1},
        {5, "perturbation decay rate", 0.0, perturbation_decay},
        {6, "two-goal control", 120.0, fig2},
        {7, "quadrature micro-oracles", 0.0, quadrature_micro},
        {8, "P1/P2 trajectory identity", 0.0, p1_p2},
        {9, "transforms and design checks", 0.0, transforms},
    };
    return all;
}

}  // namespace

std::vector<int> criterion_ids() {
    std::vector<int> ids;
    for (const auto& s : specs()) {
        ids.push_back(s.id);
    }
    return ids;
}

CriterionResult run_criterion(int id) {
    auto it = std::find_if(specs().begin(), specs().end(), [id](const Spec& s) { return s.id == id; });
    if (it == specs().end()) {
        fail(ErrorKind::usage, "no acceptance criterion " + std::to_string(id));
    }
    CriterionResult r;
    r.id = id;
    r.name = it->name;
    const auto start = std::chrono::steady_clock::now();
    try {
        r.pass = it->check(r.detail);
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (it->limit_s > 0.0 && r.seconds >= it->limit_s) {
        r.pass = false;
        r.detail += ", runtime limit " + num(it->limit_s) + " s exceeded";
    }
    return r;
}

std::string format_result(const CriterionResult& r) {
    std::ostringstream os;
    os << (r.pass ? "PASS" : "FAIL") << ' ' << r.id << ' ' << r.name << " (" << num(r.seconds, 3) << " s): "
       << r.detail;
    return os.str();
}

double riccati_oracle(double beta, double R, double c, double T, double t, double dt) {
    if (t > T) {
        fail(ErrorKind::usage, "riccati_oracle needs t <= T");
    }
    const auto steps = static_cast<long>(std::ceil((T - t) / dt - 1e-9));
    if (steps == 0) {
        return 0.0;
    }
    const double h = (T - t) / static_cast<double>(steps);
    // In reversed time tau = T - t: dP/dtau = 2 beta - P^2 / R - 2 c P.
    const auto rhs = [&](double P) { return 2.0 * beta - P * P / R - 2.0 * c * P; };
    double P = 0.0;
    for (long i = 0; i < steps; ++i) {
        const double k1 = rhs(P);
        const double k2 = rhs(P + 0.5 * h * k1);
        const double k3 = rhs(P + 0.5 * h * k2);
        const double k4 = rhs(P + h * k3);
        P += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return P;
}

double fokker_planck_decay_rate(const SpectralSolution& sol, double eps, double half_width, double dt,
                                double t_fit_lo, double t_fit_hi) {
    const ControlProblem& problem = sol.problem();
    const auto& x_all = sol.discretization().x;
    const double h = sol.h();
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < x_all.size(); ++i) {
        if (std::abs(x_all[i]) <= half_width) {
            idx.push_back(i);
        }
    }
    const std::size_t n = idx.size();
    if (n < 10) {
        fail(ErrorKind::usage, "Fokker-Planck window holds too few grid points");
    }
    const GridFunction u = stationary_value_and_control(sol).u;
    const auto& e0 = sol.eigenfunction(0);
    const auto& e1 = sol.eigenfunction(1);
    std::vector<double> p(n);
    double mass = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        p[j] = e0[idx[j]] * e0[idx[j]] + eps * e0[idx[j]] * e1[idx[j]];
        mass += p[j] * h;
    }
    for (double& v : p) {
        v /= mass;
    }

    // Face drifts b_{j+1/2} = -nu' + u_inf at the cell interfaces.
    std::vector<double> b(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double xm = 0.5 * (x_all[idx[j]] + x_all[idx[j + 1]]);
        b[j] = -problem.nu.derivative(xm) + u.interpolate(xm);
    }
    const double D = 0.5 * problem.sigma * problem.sigma;
    // dp/dt = A p with flux F_{j+1/2} = b (p_j + p_{j+1}) / 2 - D (p_{j+1} - p_j) / h.
    std::vector<double> lower(n - 1, 0.0), diag(n, 0.0), upper(n - 1, 0.0);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double dFj = 0.5 * b[j] + D / h;       // dF_{j+1/2} / dp_j
        const double dFj1 = 0.5 * b[j] - D / h;      // dF_{j+1/2} / dp_{j+1}
        diag[j] -= dFj / h;
        upper[j] -= dFj1 / h;
        lower[j] += dFj / h;
        diag[j + 1] += dFj1 / h;
    }
    std::vector<double> lo_l(n - 1), di_l(n), up_l(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        di_l[j] = 1.0 - 0.5 * dt * diag[j];
    }
    for (std::size_t j = 0; j + 1 < n; ++j) {
        lo_l[j] = -0.5 * dt * lower[j];
        up_l[j] = -0.5 * dt * upper[j];
    }
    std::vector<double> ts, logs;
    std::vector<double> rhs(n);
    const auto steps = static_cast<std::size_t>(std::ceil(t_fit_hi / dt));
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t j = 0; j < n; ++j) {
            double ap = diag[j] * p[j];
            if (j > 0) {
                ap += lower[j - 1] * p[j - 1];
            }
            if (j + 1 < n) {
                ap += upper[j] * p[j + 1];
            }
            rhs[j] = p[j] + 0.5 * dt * ap;
        }
        const std::vector<double> next = solve_tridiagonal(lo_l, di_l, up_l, rhs);
        const double t = static_cast<double>(s) * dt;
        if (t >= t_fit_lo && t <= t_fit_hi) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                d2 += (next[j] - p[j]) * (next[j] - p[j]) * h;
            }
            ts.push_back(t);
            logs.push_back(0.5 * std::log(d2));
        }
        p = next;
    }
    if (ts.size() < 2) {
        fail(ErrorKind::usage, "empty fit window");
    }
    const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / static_cast<double>(ts.size());
    const double lm = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(logs.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sxy += (ts[i] - tm) * (logs[i] - lm);
        sxx += (ts[i] - tm) * (ts[i] - tm);
    }
    return -sxy / sxx;
}

}  // namespace popctl
