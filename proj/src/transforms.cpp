#include "popctl/transforms.hpp"

#include "popctl/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace popctl {

namespace {

std::string where(const RectGrid& grid, std::size_t i) {
    std::ostringstream os;
    os.precision(17);
    os << "grid point " << i << " (x = ";
    const Point p = grid.point(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
        os << (k ? ", " : "") << p[k];
    }
    os << ")";
    return os.str();
}

void require_same_grid(const GridFunction& a, const GridFunction& b) {
    if (!(a.grid() == b.grid())) {
        fail(ErrorKind::usage, "grid functions live on different grids");
    }
}

}  // namespace

ModifiedPotential::ModifiedPotential(ControlProblem problem, double shift)
    : problem_(std::move(problem)), shift_(shift) {}

double ModifiedPotential::value(std::span<const double> x) const {
    const ControlProblem& p = problem_;
    double grad_sq = 0.0;
    double g[8];
    Point heap;
    std::span<double> grad;
    if (p.dim <= 8) {
        grad = std::span<double>(g, p.dim);
    } else {
        heap.resize(p.dim);
        grad = heap;
    }
    p.nu.gradient(x, grad);
    for (double gi : grad) {
        grad_sq += gi * gi;
    }
    return p.q.value(x) + 0.5 * p.R * grad_sq - 0.5 * p.sigma * p.sigma * p.R * p.nu.laplacian(x) + shift_;
}

void ModifiedPotential::gradient(std::span<const double> x, std::span<double> out) const {
    Point xp(x.begin(), x.end());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double h = 1e-3 * std::max(1.0, std::abs(x[k]));
        auto at = [&](double offset) {
            xp[k] = x[k] + offset;
            return value(xp);
        };
        const double d = -at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h);
        xp[k] = x[k];
        out[k] = d / (12.0 * h);
    }
}

Point ModifiedPotential::gradient(std::span<const double> x) const {
    Point out(x.size());
    gradient(x, out);
    return out;
}

ModifiedPotential modified_potential(const ControlProblem& problem) {
    return ModifiedPotential(problem, 0.0);
}

GridFunction value_to_f(const GridFunction& v, const ControlProblem& problem) {
    const double scale = problem.sigma * problem.sigma * problem.R;
    std::vector<double> out(v.size());
    Point x(v.grid().dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!std::isfinite(v[i])) {
            fail(ErrorKind::range, "value function is not finite at " + where(v.grid(), i));
        }
        v.grid().point(i, x);
        const double exponent = -(v[i] + problem.R * problem.nu.value(x)) / scale;
        const double f = std::exp(exponent);
        if (!std::isfinite(f)) {
            fail(ErrorKind::range, "exp overflow in value_to_f at " + where(v.grid(), i));
        }
        if (!(f > 0.0)) {
            fail(ErrorKind::range, "exp underflow in value_to_f at " + where(v.grid(), i));
        }
        out[i] = f;
    }
    return GridFunction(v.grid(), std::move(out));
}

GridFunction f_to_value(const GridFunction& f, const ControlProblem& problem) {
    const double scale = problem.sigma * problem.sigma * problem.R;
    std::vector<double> out(f.size());
    Point x(f.grid().dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(f[i] > 0.0) || !std::isfinite(f[i])) {
            fail(ErrorKind::domain, "f must be positive and finite; violated at " + where(f.grid(), i));
        }
        f.grid().point(i, x);
        out[i] = -scale * std::log(f[i]) - problem.R * problem.nu.value(x);
    }
    return GridFunction(f.grid(), std::move(out));
}

GridFunction hermitize(const GridFunction& p, const GridFunction& f) {
    require_same_grid(p, f);
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (p[i] < 0.0) {
            fail(ErrorKind::domain, "density is negative at " + where(p.grid(), i));
        }
        if (!(f[i] > kPositivityFloor)) {
            fail(ErrorKind::range, "f underflows the positivity floor at " + where(f.grid(), i));
        }
        out[i] = p[i] / f[i];
    }
    return GridFunction(p.grid(), std::move(out));
}

GridFunction dehermitize(const GridFunction& g, const GridFunction& f) {
    require_same_grid(g, f);
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(f[i] > 0.0)) {
            fail(ErrorKind::domain, "f must be positive; violated at " + where(f.grid(), i));
        }
        out[i] = f[i] * g[i];
    }
    return GridFunction(g.grid(), std::move(out));
}

Point control_from_f(double f, std::span<const double> grad_f, const ControlProblem& problem,
                     std::span<const double> x) {
    if (!(f > kPositivityFloor)) {
        fail(ErrorKind::control, "f is below the positivity floor");
    }
    Point u = problem.nu.gradient(x);
    const double s2 = problem.sigma * problem.sigma;
    for (std::size_t k = 0; k < u.size(); ++k) {
        u[k] += s2 * grad_f[k] / f;
    }
    return u;
}

std::vector<GridFunction> gradient(const GridFunction& f) {
    std::vector<GridFunction> g;
    for (std::size_t k = 0; k < f.grid().dim(); ++k) {
        g.push_back(f.partial(k));
    }
    return g;
}

Point control_from_f(const GridFunction& f, const std::vector<GridFunction>& grad_f,
                     const ControlProblem& problem, std::span<const double> x) {
    const double fx = f.interpolate(x);
    Point g(grad_f.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        g[k] = grad_f[k].interpolate(x);
    }
    return control_from_f(fx, g, problem, x);
}

Point control_from_f(const GridFunction& f, const ControlProblem& problem, std::span<const double> x) {
    return control_from_f(f, gradient(f), problem, x);
}

bool Box::contains(std::span<const double> x, double inflate) const {
    for (std::size_t k = 0; k < lo.size(); ++k) {
        const double pad = inflate * (hi[k] - lo[k]);
        if (x[k] < lo[k] - pad || x[k] > hi[k] + pad) {
            return false;
        }
    }
    return true;
}

DesignReport check_design_constraints(const ModifiedPotential& Vp, const Box& domain, std::size_t n) {
    const std::size_t d = domain.dim();
    if (d == 0 || n < 2) {
        fail(ErrorKind::usage, "design check needs a nonempty box and n >= 2");
    }
    for (std::size_t k = 0; k < d; ++k) {
        if (!(domain.hi[k] > domain.lo[k])) {
            fail(ErrorKind::usage, "design check box is empty along axis " + std::to_string(k));
        }
    }
    DesignReport report;

    // A2: minimum over the tensor grid.
    const RectGrid grid = RectGrid::uniform(domain.lo, domain.hi, n);
    report.min_V = std::numeric_limits<double>::infinity();
    Point x(d);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.point(i, x);
        const double v = Vp.value(x);
        if (v < report.min_V) {
            report.min_V = v;
            report.argmin_V = x;
        }
    }
    // Polish the grid minimum by golden-section sweeps within one cell per axis.
    for (int sweep = 0; sweep < 4; ++sweep) {
        for (std::size_t k = 0; k < d; ++k) {
            const double step = grid.uniform_spacing(k);
            double a = std::max(domain.lo[k], report.argmin_V[k] - step);
            double b = std::min(domain.hi[k], report.argmin_V[k] + step);
            Point y = report.argmin_V;
            auto at = [&](double t) {
                y[k] = t;
                return Vp.value(y);
            };
            const double g = 0.5 * (std::sqrt(5.0) - 1.0);
            double c = b - g * (b - a);
            double e = a + g * (b - a);
            double fc = at(c);
            double fe = at(e);
            for (int it = 0; it < 60; ++it) {
                if (fc < fe) {
                    b = e;
                    e = c;
                    fe = fc;
                    c = b - g * (b - a);
                    fc = at(c);
                } else {
                    a = c;
                    c = e;
                    fc = fe;
                    e = a + g * (b - a);
                    fe = at(e);
                }
            }
            const double t = fc < fe ? c : e;
            const double ft = std::min(fc, fe);
            if (ft < report.min_V) {
                report.min_V = ft;
                report.argmin_V[k] = t;
            }
        }
    }
    report.a2_pass = report.min_V >= 0.0;
    report.required_shift = report.a2_pass ? 0.0 : -report.min_V;

    // A1: outward rays from the center along axes and corner diagonals.
    Point center(d);
    Point half(d);
    for (std::size_t k = 0; k < d; ++k) {
        center[k] = 0.5 * (domain.lo[k] + domain.hi[k]);
        half[k] = 0.5 * (domain.hi[k] - domain.lo[k]);
    }
    std::vector<std::pair<std::string, Point>> directions;
    for (std::size_t k = 0; k < d; ++k) {
        for (double s : {1.0, -1.0}) {
            Point dir(d, 0.0);
            dir[k] = s;
            directions.emplace_back((s > 0 ? "+e" : "-e") + std::to_string(k), dir);
        }
    }
    if (d > 1) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
            Point dir(d);
            std::string label = "corner(";
            for (std::size_t k = 0; k < d; ++k) {
                dir[k] = ((mask >> k) & 1U) ? -half[k] : half[k];
                label += ((mask >> k) & 1U) ? '-' : '+';
            }
            directions.emplace_back(label + ")", dir);
        }
    }
    const std::size_t ray_points = std::max<std::size_t>(n / 5, 10);
    report.a1_pass = true;
    for (const auto& [label, dir] : directions) {
        // Largest t with center + t*dir inside the box.
        double t_max = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < d; ++k) {
            if (dir[k] != 0.0) {
                t_max = std::min(t_max, half[k] / std::abs(dir[k]));
            }
        }
        auto at_point = [&](double s) -> std::span<const double> {
            for (std::size_t k = 0; k < d; ++k) {
                x[k] = center[k] + s * t_max * dir[k];
            }
            return x;
        };
        auto at = [&](double s) { return Vp.value(at_point(s)); };
        double inner = -std::numeric_limits<double>::infinity();
        double outer = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j <= ray_points; ++j) {
            const double frac = static_cast<double>(j) / static_cast<double>(ray_points);
            inner = std::max(inner, at(0.5 * frac));
            outer = std::min(outer, at(0.8 + 0.2 * frac));
        }
        const bool ok = outer > inner;
        const double q_mid = std::abs(Vp.problem().q.value(at_point(0.5)));
        const double q_end = std::abs(Vp.problem().q.value(at_point(1.0)));
        report.q_growth_exponent = std::max(report.q_growth_exponent, std::log2((1.0 + q_end) / (1.0 + q_mid)));
        if (!ok) {
            report.a1_pass = false;
            report.a1_failed_directions.push_back(label);
        }
    }
    report.q_at_most_quadratic = report.q_growth_exponent <= 2.25;
    return report;
}

}  // namespace popctl
