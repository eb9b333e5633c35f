#include "popctl/simulate.hpp"

#include "popctl/errors.hpp"
#include "popctl/kernels/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace popctl {

namespace {

constexpr std::uint64_t kInitStep = std::numeric_limits<std::uint64_t>::max();

std::string format_point(std::span<const double> x) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t k = 0; k < x.size(); ++k) {
        os << (k ? ", " : "") << x[k];
    }
    os << ')';
    return os.str();
}

Point clamp_to(const Box& box, std::span<const double> x) {
    Point y(x.begin(), x.end());
    for (std::size_t k = 0; k < y.size(); ++k) {
        y[k] = std::clamp(y[k], box.lo[k], box.hi[k]);
    }
    return y;
}

std::size_t flat_bin(const BinEdges& edges, std::span<const double> x) {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        if (!(x[k] >= e.front()) || x[k] > e.back()) {
            return std::numeric_limits<std::size_t>::max();
        }
        auto it = std::upper_bound(e.begin(), e.end(), x[k]);
        std::size_t b = static_cast<std::size_t>(it - e.begin());
        b = b == 0 ? 0 : b - 1;
        b = std::min(b, e.size() - 2);
        flat = flat * (e.size() - 1) + b;
    }
    return flat;
}

std::size_t bin_count(const BinEdges& edges) {
    std::size_t n = 1;
    for (const auto& e : edges) {
        n *= e.size() - 1;
    }
    return n;
}

}  // namespace

Policy zero_policy(std::size_t dim) {
    Policy p;
    p.name = "zero";
    p.control = [dim](double, std::span<const double>, std::span<double> u) {
        std::fill(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(dim), 0.0);
    };
    p.in_domain = [](std::span<const double>) { return true; };
    return p;
}

Policy stationary_policy(const SpectralSolution& sol) {
    auto u = std::make_shared<const GridFunction>(stationary_value_and_control(sol).u);
    const double lo = u->grid().axis(0).front();
    const double hi = u->grid().axis(0).back();
    Policy p;
    p.name = "stationary";
    p.control = [u](double, std::span<const double> x, std::span<double> out) { out[0] = u->interpolate(x); };
    p.in_domain = [lo, hi](std::span<const double> x) { return x[0] >= lo && x[0] <= hi; };
    return p;
}

Policy quadrature_policy(std::shared_ptr<const QuadratureSolution> sol, Dynamics dynamics) {
    const Box box = sol->grid().bounds();
    Policy p;
    p.name = dynamics == Dynamics::langevin ? "quadrature" : "quadrature_integrator";
    p.control = [sol, box, dynamics](double t, std::span<const double> x, std::span<double> out) {
        const Point y = clamp_to(box, x);
        const Point g = sol->evaluate_grad_log_f(sol->step_index_floor(t), y);
        const double s2 = sol->problem().sigma * sol->problem().sigma;
        for (std::size_t k = 0; k < g.size(); ++k) {
            out[k] = s2 * g[k];
        }
        if (dynamics == Dynamics::langevin) {
            const Point gnu = sol->problem().nu.gradient(x);
            for (std::size_t k = 0; k < g.size(); ++k) {
                out[k] += gnu[k];
            }
        }
    };
    p.in_domain = [box](std::span<const double> x) { return box.contains(x); };
    return p;
}

Policy local_policy(const ControlProblem& problem, std::size_t M, double T, double dt, Dynamics dynamics,
                    std::optional<Box> domain) {
    auto prob = std::make_shared<const ControlProblem>(problem);
    Policy p;
    p.name = dynamics == Dynamics::langevin ? "local" : "local_integrator";
    p.control = [prob, M, T, dt, dynamics, domain](double t, std::span<const double> x, std::span<double> out) {
        const Point y = domain ? clamp_to(*domain, x) : Point(x.begin(), x.end());
        // Align t to the step grid so the local recursion has an integral number of steps.
        const double tn = T - dt * std::round((T - t) / dt);
        const Point u = local_integrator_control(*prob, tn, y, M, T, dt);
        std::copy(u.begin(), u.end(), out.begin());
        if (dynamics == Dynamics::langevin) {
            const Point gnu = prob->nu.gradient(x);
            for (std::size_t k = 0; k < u.size(); ++k) {
                out[k] += gnu[k];
            }
        }
    };
    p.in_domain = [domain](std::span<const double> x) { return !domain || domain->contains(x); };
    return p;
}

double Ensemble::escape_fraction() const {
    if (escaped.empty()) {
        return 0.0;
    }
    const auto n = std::count(escaped.begin(), escaped.end(), static_cast<unsigned char>(1));
    return static_cast<double>(n) / static_cast<double>(escaped.size());
}

Ensemble make_ensemble(std::vector<double> states, std::size_t dim, std::uint64_t seed) {
    if (dim == 0 || states.size() % dim != 0) {
        fail(ErrorKind::usage, "state array size is not a multiple of the dimension");
    }
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (!std::isfinite(states[i])) {
            fail(ErrorKind::usage, "initial state of agent " + std::to_string(i / dim) + " is not finite");
        }
    }
    Ensemble e;
    e.dim = dim;
    e.states = std::move(states);
    e.noise = NormalStream(seed);
    e.escaped.assign(e.states.size() / dim, 0);
    return e;
}

Ensemble uniform_ensemble(std::size_t n, const Box& box, std::uint64_t seed) {
    const NormalStream s(seed);
    const std::size_t d = box.dim();
    std::vector<double> x(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            x[i * d + k] = box.lo[k] + (box.hi[k] - box.lo[k]) * s.uniform(i, kInitStep, k);
        }
    }
    return make_ensemble(std::move(x), d, seed);
}

Ensemble density_ensemble(std::size_t n, const GridFunction& density, std::uint64_t seed) {
    if (density.grid().dim() != 1) {
        fail(ErrorKind::usage, "density_ensemble needs a 1D density");
    }
    const auto& xs = density.grid().axis(0);
    std::vector<double> cdf(xs.size(), 0.0);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double a = std::max(density[i - 1], 0.0);
        const double b = std::max(density[i], 0.0);
        cdf[i] = cdf[i - 1] + 0.5 * (a + b) * (xs[i] - xs[i - 1]);
    }
    const double total = cdf.back();
    if (!(total > 0.0)) {
        fail(ErrorKind::usage, "density has no mass");
    }
    const NormalStream s(seed);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double target = s.uniform(i, kInitStep, 0) * total;
        auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
        std::size_t j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - cdf.begin(), 1));
        j = std::min(j, xs.size() - 1);
        const double w = cdf[j] - cdf[j - 1];
        const double frac = w > 0.0 ? (target - cdf[j - 1]) / w : 0.5;
        x[i] = xs[j - 1] + frac * (xs[j] - xs[j - 1]);
    }
    return make_ensemble(std::move(x), 1, seed);
}

void step(Ensemble& ens, const ControlProblem& problem, const Policy& policy, double dt, Dynamics dynamics) {
    if (!(dt > 0.0)) {
        fail(ErrorKind::usage, "dt must be positive");
    }
    if (ens.dim != problem.dim) {
        fail(ErrorKind::usage, "ensemble and problem dimensions differ");
    }
    const std::size_t n = ens.size();
    const std::size_t d = ens.dim;
    std::vector<double> drift_buf(n * d);
    std::vector<double> eps(n * d);
    const double t = ens.time;
    const std::uint64_t stepno = ens.step_index;
    std::size_t clamped = 0;
    std::ptrdiff_t failed = -1;
    std::string failure;

#pragma omp parallel for reduction(+ : clamped) schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        const std::span<const double> x(ens.states.data() + i * d, d);
        const std::span<double> out(drift_buf.data() + i * d, d);
        try {
            if (!policy.in_domain(x)) {
                ++clamped;
                ens.escaped[i] = 1;
            }
            policy.control(t, x, out);
            if (dynamics == Dynamics::langevin) {
                const Point g = problem.nu.gradient(x);
                for (std::size_t k = 0; k < d; ++k) {
                    out[k] = -g[k] + out[k];
                }
            }
            for (std::size_t k = 0; k < d; ++k) {
                eps[i * d + k] = ens.noise.normal(i, stepno, k);
            }
        } catch (const std::exception& e) {
#pragma omp critical(popctl_step_failure)
            {
                if (failed < 0 || static_cast<std::ptrdiff_t>(i) < failed) {
                    failed = static_cast<std::ptrdiff_t>(i);
                    failure = e.what();
                }
            }
        }
    }
    if (failed >= 0) {
        const auto i = static_cast<std::size_t>(failed);
        fail(ErrorKind::control, "controller failed for agent " + std::to_string(i) + " at state " +
                                     format_point(ens.state(i)) + ": " + failure);
    }
    kernels::active().em_update(ens.states.data(), drift_buf.data(), eps.data(), dt, problem.sigma * std::sqrt(dt),
                                n * d);
    for (std::size_t i = 0; i < n * d; ++i) {
        if (!std::isfinite(ens.states[i])) {
            fail(ErrorKind::numerical, "state of agent " + std::to_string(i / d) + " became non-finite at step " +
                                           std::to_string(stepno));
        }
    }
    ens.clamped_queries += clamped;
    ++ens.step_index;
    ens.time = t + dt;
}

BinEdges uniform_bins(std::span<const double> lo, std::span<const double> hi, std::size_t bins_per_axis) {
    if (bins_per_axis == 0 || lo.size() != hi.size()) {
        fail(ErrorKind::usage, "bad bin specification");
    }
    BinEdges edges(lo.size());
    for (std::size_t k = 0; k < lo.size(); ++k) {
        if (!(hi[k] > lo[k])) {
            fail(ErrorKind::usage, "bin range is empty");
        }
        edges[k].resize(bins_per_axis + 1);
        for (std::size_t i = 0; i <= bins_per_axis; ++i) {
            edges[k][i] = lo[k] + (hi[k] - lo[k]) * static_cast<double>(i) / static_cast<double>(bins_per_axis);
        }
    }
    return edges;
}

double DensityEstimate::bin_volume(std::size_t flat) const {
    double vol = 1.0;
    for (std::size_t k = edges.size(); k-- > 0;) {
        const std::size_t nb = edges[k].size() - 1;
        const std::size_t b = flat % nb;
        flat /= nb;
        vol *= edges[k][b + 1] - edges[k][b];
    }
    return vol;
}

double DensityEstimate::mass() const {
    double m = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) {
        m += density[i] * bin_volume(i);
    }
    return m;
}

void DensityEstimate::write_csv(std::ostream& os, double t) const {
    os.precision(17);
    for (std::size_t i = 0; i < density.size(); ++i) {
        os << t;
        std::size_t flat = i;
        std::vector<double> centers(edges.size());
        for (std::size_t k = edges.size(); k-- > 0;) {
            const std::size_t nb = edges[k].size() - 1;
            const std::size_t b = flat % nb;
            flat /= nb;
            centers[k] = 0.5 * (edges[k][b] + edges[k][b + 1]);
        }
        for (double c : centers) {
            os << ',' << c;
        }
        os << ',' << density[i] << '\n';
    }
}

DensityEstimate estimate_density(const Ensemble& ensemble, const BinEdges& edges) {
    if (edges.size() != ensemble.dim) {
        fail(ErrorKind::usage, "bin dimension does not match the ensemble");
    }
    DensityEstimate est;
    est.edges = edges;
    est.density.assign(bin_count(edges), 0.0);
    est.samples = ensemble.size();
    std::size_t inside = 0;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const std::size_t b = flat_bin(edges, ensemble.state(i));
        if (b != std::numeric_limits<std::size_t>::max()) {
            est.density[b] += 1.0;
            ++inside;
        }
    }
    if (est.samples > 0) {
        est.outside_fraction = static_cast<double>(est.samples - inside) / static_cast<double>(est.samples);
    }
    if (inside > 0) {
        for (std::size_t i = 0; i < est.density.size(); ++i) {
            est.density[i] /= static_cast<double>(inside) * est.bin_volume(i);
        }
    }
    return est;
}

DensityEstimate bin_density(const GridFunction& density, const BinEdges& edges) {
    if (density.grid().dim() != 1 || edges.size() != 1) {
        fail(ErrorKind::usage, "bin_density supports 1D densities");
    }
    constexpr int kSub = 64;
    DensityEstimate est;
    est.edges = edges;
    const auto& e = edges[0];
    est.density.assign(e.size() - 1, 0.0);
    double mass = 0.0;
    for (std::size_t b = 0; b + 1 < e.size(); ++b) {
        const double w = (e[b + 1] - e[b]) / kSub;
        double s = 0.0;
        for (int j = 0; j < kSub; ++j) {
            const double x = e[b] + (j + 0.5) * w;
            s += std::max(density.interpolate(x), 0.0) * w;
        }
        est.density[b] = s;
        mass += s;
    }
    if (!(mass > 0.0)) {
        fail(ErrorKind::usage, "density has no mass inside the bins");
    }
    for (std::size_t b = 0; b < est.density.size(); ++b) {
        est.density[b] /= mass * (e[b + 1] - e[b]);
    }
    return est;
}

double l1_distance(const DensityEstimate& a, const DensityEstimate& b) {
    if (a.edges != b.edges) {
        fail(ErrorKind::usage, "L1 distance needs identical bin layouts");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.density.size(); ++i) {
        s += std::abs(a.density[i] - b.density[i]) * a.bin_volume(i);
    }
    return s;
}

nlohmann::json ExperimentReport::to_json() const {
    nlohmann::json j;
    j["kind"] = kind;
    j["seed"] = seed;
    j["times"] = times;
    j["l1_series"] = l1_series;
    j["goal_fractions"] = goal_fractions;
    j["baseline_goal_fractions"] = baseline_goal_fractions;
    j["baseline_cluster_fractions"] = baseline_cluster_fractions;
    j["cluster_fractions"] = cluster_fractions;
    j["escape_fraction"] = escape_fraction;
    j["wall_clock_s"] = wall_clock_s;
    j["pass"] = pass;
    j["failures"] = failures;
    return j;
}

double fraction_near(const Ensemble& ensemble, const std::vector<Point>& points, double radius) {
    if (ensemble.size() == 0) {
        return 0.0;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const auto x = ensemble.state(i);
        for (const auto& p : points) {
            double r2 = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                r2 += (x[k] - p[k]) * (x[k] - p[k]);
            }
            if (r2 <= radius * radius) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(ensemble.size());
}

void write_states_csv(std::ostream& os, const Ensemble& ensemble) {
    os.precision(17);
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        os << i << ',' << ensemble.time;
        for (double v : ensemble.state(i)) {
            os << ',' << v;
        }
        os << '\n';
    }
}

ExperimentReport run_stationary_experiment(const SpectralSolution& sol, const StationaryExperiment& cfg) {
    const ControlProblem& problem = sol.problem();
    if (!(cfg.dt > 0.0) || cfg.agents == 0 || cfg.realizations == 0) {
        fail(ErrorKind::configuration, "stationary experiment needs dt > 0 and a positive agent count");
    }
    const double T = cfg.T ? *cfg.T : 5.0 / sol.gap();
    const auto steps = static_cast<std::size_t>(std::llround(T / cfg.dt));
    std::vector<std::size_t> snap_steps;
    for (double f : cfg.snapshot_fractions) {
        if (f < 0.0 || f > 1.0) {
            fail(ErrorKind::configuration, "snapshot fractions must lie in [0, 1]");
        }
        snap_steps.push_back(static_cast<std::size_t>(std::llround(f * static_cast<double>(steps))));
    }

    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = cfg.agents * cfg.realizations;
    const GridFunction p_inf = stationary_density(sol);
    Ensemble ens = cfg.init == InitialDensity::uniform ? uniform_ensemble(n, cfg.init_box, cfg.seed)
                                                       : density_ensemble(n, p_inf, cfg.seed);
    const Policy policy = stationary_policy(sol);
    const double lo[1] = {cfg.hist_lo};
    const double hi[1] = {cfg.hist_hi};
    const BinEdges edges = uniform_bins(lo, hi, cfg.bins);
    const DensityEstimate reference = bin_density(p_inf, edges);

    ExperimentReport report;
    report.kind = "stationary";
    report.seed = cfg.seed;
    for (std::size_t s = 0; s <= steps; ++s) {
        for (std::size_t j = 0; j < snap_steps.size(); ++j) {
            if (snap_steps[j] == s) {
                DensityEstimate est = estimate_density(ens, edges);
                report.times.push_back(static_cast<double>(s) * cfg.dt);
                report.l1_series.push_back(l1_distance(est, reference));
                report.snapshots.push_back(std::move(est));
            }
        }
        if (s < steps) {
            step(ens, problem, policy, cfg.dt);
        }
    }
    report.snapshots.push_back(reference);
    report.escape_fraction = ens.escape_fraction();
    report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (report.escape_fraction > cfg.max_escape) {
        report.failures.push_back("escape fraction " + std::to_string(report.escape_fraction) + " exceeds " +
                                  std::to_string(cfg.max_escape));
    }
    if (report.l1_series.empty() || !(report.l1_series.back() <= cfg.l1_threshold)) {
        report.failures.push_back("terminal L1 distance above threshold " + std::to_string(cfg.l1_threshold));
    }
    report.pass = report.failures.empty();
    return report;
}

ExperimentReport run_finite_horizon_experiment(const ControlProblem& problem, const Policy& policy,
                                               const FiniteHorizonExperiment& cfg, double T) {
    if (!(cfg.dt > 0.0) || cfg.agents == 0) {
        fail(ErrorKind::configuration, "finite-horizon experiment needs dt > 0 and a positive agent count");
    }
    if (cfg.init_box.dim() != problem.dim) {
        fail(ErrorKind::configuration, "initial box dimension does not match the problem");
    }
    const auto steps = static_cast<std::size_t>(std::llround(T / cfg.dt));
    if (std::abs(static_cast<double>(steps) * cfg.dt - T) > 1e-9 * std::max(1.0, T)) {
        fail(ErrorKind::configuration, "dt does not divide the horizon");
    }
    std::vector<std::size_t> snap_steps;
    for (double t : cfg.snapshot_times) {
        const double r = t / cfg.dt;
        if (t < 0.0 || t > T + 1e-9 || std::abs(r - std::round(r)) > 1e-9) {
            fail(ErrorKind::configuration, "snapshot times must be multiples of dt within [0, T]");
        }
        snap_steps.push_back(static_cast<std::size_t>(std::llround(r)));
    }

    ExperimentReport report;
    report.kind = "finite_horizon";
    report.seed = cfg.seed;

    const auto start = std::chrono::steady_clock::now();
    Ensemble ens = uniform_ensemble(cfg.agents, cfg.init_box, cfg.seed);
    for (std::size_t s = 0; s <= steps; ++s) {
        for (std::size_t j = 0; j < snap_steps.size(); ++j) {
            if (snap_steps[j] == s) {
                report.times.push_back(static_cast<double>(s) * cfg.dt);
                report.goal_fractions.push_back(fraction_near(ens, cfg.goals, cfg.radius));
                report.snapshot_states.push_back(ens.states);
            }
        }
        if (s < steps) {
            step(ens, problem, policy, cfg.dt);
        }
    }
    report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.escape_fraction = ens.escape_fraction();
    for (const auto& a : cfg.attractors) {
        report.cluster_fractions.push_back(fraction_near(ens, {a}, cfg.radius));
    }

    if (cfg.baseline && cfg.controlled) {
        Ensemble base = uniform_ensemble(cfg.agents, cfg.init_box, cfg.seed);
        const Policy zero = zero_policy(problem.dim);
        for (std::size_t s = 0; s <= steps; ++s) {
            for (std::size_t j = 0; j < snap_steps.size(); ++j) {
                if (snap_steps[j] == s) {
                    report.baseline_goal_fractions.push_back(fraction_near(base, cfg.goals, cfg.radius));
                }
            }
            if (s < steps) {
                step(base, problem, zero, cfg.dt);
            }
        }
        for (const auto& a : cfg.attractors) {
            report.baseline_cluster_fractions.push_back(fraction_near(base, {a}, cfg.radius));
        }
    }

    if (report.escape_fraction > cfg.max_escape) {
        report.failures.push_back("escape fraction " + std::to_string(report.escape_fraction) + " exceeds " +
                                  std::to_string(cfg.max_escape));
    }
    if (!cfg.controlled) {
        for (std::size_t a = 0; a < report.cluster_fractions.size(); ++a) {
            if (report.cluster_fractions[a] < cfg.min_cluster_fraction) {
                report.failures.push_back("cluster " + std::to_string(a) + " holds only " +
                                          std::to_string(report.cluster_fractions[a]));
            }
        }
    } else if (cfg.baseline && !report.goal_fractions.empty()) {
        const double gain = report.goal_fractions.back() - report.baseline_goal_fractions.back();
        if (gain < cfg.min_improvement) {
            report.failures.push_back("terminal goal fraction gain " + std::to_string(gain) + " below " +
                                      std::to_string(cfg.min_improvement));
        }
        for (std::size_t a = 0; a < report.baseline_cluster_fractions.size(); ++a) {
            if (report.baseline_cluster_fractions[a] < cfg.min_cluster_fraction) {
                report.failures.push_back("uncontrolled cluster " + std::to_string(a) + " holds only " +
                                          std::to_string(report.baseline_cluster_fractions[a]));
            }
        }
    }
    report.pass = report.failures.empty();
    return report;
}

}  // namespace popctl
