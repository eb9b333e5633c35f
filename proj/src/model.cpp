#include "popctl/model.hpp"

#include "popctl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace popctl {

namespace {

std::string describe_point(std::span<const double> x) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t i = 0; i < x.size(); ++i) {
        os << (i ? ", " : "") << x[i];
    }
    os << ')';
    return os.str();
}

[[noreturn]] void non_finite(const std::string& field, std::string_view what, std::span<const double> x) {
    fail(ErrorKind::evaluation,
         "field '" + field + "' " + std::string(what) + " is not finite at x = " + describe_point(x));
}

}  // namespace

ScalarField::ScalarField(std::size_t dim, std::string name, ValueFn value, GradientFn gradient,
                         LaplacianFn laplacian)
    : dim_(dim), name_(std::move(name)), value_(std::move(value)), gradient_(std::move(gradient)),
      laplacian_(std::move(laplacian)) {
    if (dim_ == 0) {
        fail(ErrorKind::configuration, "scalar field '" + name_ + "' must have dimension >= 1");
    }
}

ScalarField ScalarField::from_value(std::size_t dim, std::string name, ValueFn value) {
    // Central differences; step sizes balance truncation against roundoff.
    auto grad = [value, dim](std::span<const double> x, std::span<double> out) {
        Point xp(x.begin(), x.end());
        for (std::size_t k = 0; k < dim; ++k) {
            const double h = 1e-5 * std::max(1.0, std::abs(x[k]));
            xp[k] = x[k] + h;
            const double fp = value(xp);
            xp[k] = x[k] - h;
            const double fm = value(xp);
            xp[k] = x[k];
            out[k] = (fp - fm) / (2.0 * h);
        }
    };
    auto lap = [value, dim](std::span<const double> x) {
        Point xp(x.begin(), x.end());
        const double f0 = value(x);
        double sum = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double h = 1e-4 * std::max(1.0, std::abs(x[k]));
            xp[k] = x[k] + h;
            const double fp = value(xp);
            xp[k] = x[k] - h;
            const double fm = value(xp);
            xp[k] = x[k];
            sum += (fp - 2.0 * f0 + fm) / (h * h);
        }
        return sum;
    };
    ScalarField field(dim, std::move(name), std::move(value), std::move(grad), std::move(lap));
    field.analytic_ = false;
    return field;
}

ScalarField ScalarField::constant(std::size_t dim, double c) {
    std::ostringstream os;
    os.precision(17);
    os << "const(" << c << ")";
    return ScalarField(
        dim, os.str(), [c](std::span<const double>) { return c; },
        [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); },
        [](std::span<const double>) { return 0.0; });
}

ScalarField ScalarField::polynomial_1d(std::vector<double> coeffs, std::string name) {
    if (coeffs.empty()) {
        coeffs.push_back(0.0);
    }
    std::vector<double> d1;
    std::vector<double> d2;
    for (std::size_t k = 1; k < coeffs.size(); ++k) {
        d1.push_back(static_cast<double>(k) * coeffs[k]);
    }
    for (std::size_t k = 1; k < d1.size(); ++k) {
        d2.push_back(static_cast<double>(k) * d1[k]);
    }
    auto horner = [](const std::vector<double>& c, double x) {
        double acc = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) {
            acc = acc * x + *it;
        }
        return acc;
    };
    return ScalarField(
        1, std::move(name), [coeffs, horner](std::span<const double> x) { return horner(coeffs, x[0]); },
        [d1, horner](std::span<const double> x, std::span<double> out) { out[0] = horner(d1, x[0]); },
        [d2, horner](std::span<const double> x) { return horner(d2, x[0]); });
}

double ScalarField::value(std::span<const double> x) const {
    const double v = value_(x);
    if (!std::isfinite(v)) {
        non_finite(name_, "value", x);
    }
    return v;
}

void ScalarField::gradient(std::span<const double> x, std::span<double> out) const {
    gradient_(x, out);
    for (double g : out) {
        if (!std::isfinite(g)) {
            non_finite(name_, "gradient", x);
        }
    }
}

Point ScalarField::gradient(std::span<const double> x) const {
    Point out(dim_);
    gradient(x, out);
    return out;
}

double ScalarField::laplacian(std::span<const double> x) const {
    const double v = laplacian_(x);
    if (!std::isfinite(v)) {
        non_finite(name_, "laplacian", x);
    }
    return v;
}

double ScalarField::derivative(double x) const {
    double g = 0.0;
    gradient(std::span<const double>(&x, 1), std::span<double>(&g, 1));
    return g;
}

ControlProblem::ControlProblem(std::string name_in, ScalarField nu_in, ScalarField q_in, double sigma_in,
                               double R_in, std::optional<double> horizon_in)
    : name(std::move(name_in)), nu(std::move(nu_in)), q(std::move(q_in)), sigma(sigma_in), R(R_in),
      dim(nu.dim()), horizon(horizon_in) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        fail(ErrorKind::configuration, "noise intensity sigma must be positive and finite");
    }
    if (!(R > 0.0) || !std::isfinite(R)) {
        fail(ErrorKind::configuration, "control cost R must be positive and finite");
    }
    if (q.dim() != nu.dim()) {
        fail(ErrorKind::configuration, "nu and q have different dimensions");
    }
    if (horizon && !(*horizon > 0.0)) {
        fail(ErrorKind::configuration, "horizon T must be positive");
    }
}

ControlProblem ControlProblem::with_noise(double sigma_new) const {
    return ControlProblem(name, nu, q, sigma_new, R, horizon);
}

ControlProblem ControlProblem::with_control_cost(double R_new) const {
    return ControlProblem(name, nu, q, sigma, R_new, horizon);
}

ControlProblem ControlProblem::with_horizon(std::optional<double> T) const {
    return ControlProblem(name, nu, q, sigma, R, T);
}

void drift(const ControlProblem& problem, std::span<const double> x, std::span<double> out) {
    for (double xi : x) {
        if (!std::isfinite(xi)) {
            fail(ErrorKind::evaluation, "drift queried at a non-finite state " + describe_point(x));
        }
    }
    problem.nu.gradient(x, out);
    for (double& g : out) {
        g = -g;
    }
}

Point drift(const ControlProblem& problem, std::span<const double> x) {
    Point out(problem.dim);
    drift(problem, x, out);
    return out;
}

std::vector<std::string> builtin_names() {
    return {"cubic_1d", "lqg_1d", "uncontrolled_gibbs_1d", "double_goal_2d"};
}

ControlProblem builtin_problem(std::string_view name) {
    if (name == "cubic_1d") {
        return cubic_1d();
    }
    if (name == "lqg_1d") {
        return lqg_1d();
    }
    if (name == "uncontrolled_gibbs_1d") {
        return uncontrolled_gibbs_1d();
    }
    if (name == "double_goal_2d") {
        return double_goal_2d();
    }
    std::string valid;
    for (const auto& n : builtin_names()) {
        valid += (valid.empty() ? "" : ", ") + n;
    }
    fail(ErrorKind::configuration, "unknown builtin problem '" + std::string(name) + "' (valid: " + valid + ")");
}

ControlProblem cubic_1d() {
    return ControlProblem("cubic_1d", ScalarField::polynomial_1d({0.0, 0.0, 0.0, -1.0 / 3.0}, "nu"),
                          ScalarField::polynomial_1d({0.0, 0.0, 2.5}, "q"), 0.5, 0.5);
}

ControlProblem lqg_1d(double beta, double sigma, double R) {
    return ControlProblem("lqg_1d", ScalarField::polynomial_1d({0.0, 0.0, 0.5}, "nu"),
                          ScalarField::polynomial_1d({0.0, 0.0, beta}, "q"), sigma, R);
}

ControlProblem uncontrolled_gibbs_1d(double c0, double sigma, double R) {
    return ControlProblem("uncontrolled_gibbs_1d", ScalarField::polynomial_1d({0.0, 0.0, 0.5}, "nu"),
                          ScalarField::polynomial_1d({c0}, "q"), sigma, R);
}

ControlProblem double_goal_2d(double Q, double sigma, double R, double T) {
    // nu = cos(s)^2/2 + (x1^4 + x2^4)/24 with s = x1 x2; its negative gradient is
    // (cos(s) sin(s) x2 - x1^3/6, cos(s) sin(s) x1 - x2^3/6).
    ScalarField nu(
        2, "nu",
        [](std::span<const double> x) {
            const double c = std::cos(x[0] * x[1]);
            return 0.5 * c * c + (std::pow(x[0], 4) + std::pow(x[1], 4)) / 24.0;
        },
        [](std::span<const double> x, std::span<double> out) {
            const double s = x[0] * x[1];
            const double cs = std::cos(s) * std::sin(s);
            out[0] = -cs * x[1] + x[0] * x[0] * x[0] / 6.0;
            out[1] = -cs * x[0] + x[1] * x[1] * x[1] / 6.0;
        },
        [](std::span<const double> x) {
            const double r2 = x[0] * x[0] + x[1] * x[1];
            return -std::cos(2.0 * x[0] * x[1]) * r2 + 0.5 * r2;
        });
    ScalarField q(
        2, "q",
        [Q](std::span<const double> x) {
            const double a = (x[0] - 1) * (x[0] - 1) + (x[1] - 1) * (x[1] - 1);
            const double b = (x[0] + 1) * (x[0] + 1) + (x[1] + 1) * (x[1] + 1);
            return 0.5 * Q * a * b;
        },
        [Q](std::span<const double> x, std::span<double> out) {
            const double a = (x[0] - 1) * (x[0] - 1) + (x[1] - 1) * (x[1] - 1);
            const double b = (x[0] + 1) * (x[0] + 1) + (x[1] + 1) * (x[1] + 1);
            for (std::size_t k = 0; k < 2; ++k) {
                out[k] = Q * ((x[k] - 1) * b + (x[k] + 1) * a);
            }
        },
        [Q](std::span<const double> x) {
            const double a = (x[0] - 1) * (x[0] - 1) + (x[1] - 1) * (x[1] - 1);
            const double b = (x[0] + 1) * (x[0] + 1) + (x[1] + 1) * (x[1] + 1);
            const double cross = (x[0] - 1) * (x[0] + 1) + (x[1] - 1) * (x[1] + 1);
            return 0.5 * Q * (4.0 * b + 8.0 * cross + 4.0 * a);
        });
    return ControlProblem("double_goal_2d", std::move(nu), std::move(q), sigma, R, T);
}

}  // namespace popctl
