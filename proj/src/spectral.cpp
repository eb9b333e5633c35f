#include "popctl/spectral.hpp"

#include "popctl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace popctl {

SchrodingerDiscretization SchrodingerDiscretization::build(const ModifiedPotential& V, double a, double b,
                                                           std::size_t n) {
    const ControlProblem& p = V.problem();
    if (p.dim != 1) {
        fail(ErrorKind::configuration, "the Schrodinger eigensolver is one-dimensional; problem '" + p.name +
                                           "' has dimension " + std::to_string(p.dim));
    }
    if (!(b > a)) {
        fail(ErrorKind::configuration, "spectral domain [a, b] is empty");
    }
    SchrodingerDiscretization d;
    d.a = a;
    d.b = b;
    d.n = n;
    d.h = (b - a) / static_cast<double>(n + 1);
    const double s2 = p.sigma * p.sigma;
    const double scale = s2 * p.R;
    const double kinetic = s2 / (d.h * d.h);  // (sigma^2/2) * 2/h^2
    d.x.resize(n);
    d.potential.resize(n);
    d.matrix.diag.resize(n);
    d.matrix.off.assign(n > 0 ? n - 1 : 0, -0.5 * kinetic);
    for (std::size_t i = 0; i < n; ++i) {
        d.x[i] = a + static_cast<double>(i + 1) * d.h;
        d.potential[i] = V.value(d.x[i]) / scale;
        d.matrix.diag[i] = d.potential[i] + kinetic;
    }
    return d;
}

SpectralSolution::SpectralSolution(ControlProblem problem, SchrodingerDiscretization disc,
                                   std::vector<double> eigenvalues, std::vector<std::vector<double>> eigenfunctions,
                                   std::vector<double> log_e0, std::vector<double> residuals, double boundary_mass)
    : problem_(std::move(problem)), disc_(std::move(disc)), eigenvalues_(std::move(eigenvalues)),
      eigenfunctions_(std::move(eigenfunctions)), log_e0_(std::move(log_e0)), residuals_(std::move(residuals)),
      boundary_mass_(boundary_mass) {}

RectGrid SpectralSolution::grid() const {
    return RectGrid({disc_.x});
}

GridFunction SpectralSolution::eigenfunction_grid(std::size_t k) const {
    return GridFunction(grid(), eigenfunctions_.at(k));
}

double SpectralSolution::optimal_cost() const {
    return problem_.sigma * problem_.sigma * problem_.R * eigenvalues_.at(0);
}

double SpectralSolution::gap() const {
    if (eigenvalues_.size() < 2) {
        fail(ErrorKind::usage, "spectral gap needs at least two modes");
    }
    return eigenvalues_[1] - eigenvalues_[0];
}

SpectralSolution solve_eigen(const ControlProblem& problem, double a, double b, std::size_t n, std::size_t m,
                             bool strict, double boundary_mass_tol) {
    if (n < 100) {
        fail(ErrorKind::configuration, "spectral solve needs n >= 100 interior points");
    }
    if (m == 0 || m >= n) {
        fail(ErrorKind::configuration, "number of modes must satisfy 0 < m < n");
    }
    SchrodingerDiscretization disc = SchrodingerDiscretization::build(modified_potential(problem), a, b, n);
    const double h = disc.h;
    std::vector<double> lambdas = smallest_eigenvalues(disc.matrix, m);
    for (std::size_t k = 1; k < m; ++k) {
        if (!(lambdas[k] > lambdas[k - 1])) {
            fail(ErrorKind::numerical, "eigenvalues " + std::to_string(k - 1) + " and " + std::to_string(k) +
                                           " are not separated");
        }
    }

    std::vector<std::vector<double>> vectors(m);
    std::vector<double> residuals(m);
    std::vector<double> log_e0;
    std::vector<double> work(n);
    bool ground_state_positive = true;
#pragma omp parallel for schedule(dynamic) firstprivate(work)
    for (long kk = 0; kk < static_cast<long>(m); ++kk) {
        const auto k = static_cast<std::size_t>(kk);
        LogVector z = twisted_eigenvector(disc.matrix, lambdas[k]);
        const double peak = *std::max_element(z.log_abs.begin(), z.log_abs.end());
        double sum = 0.0;
        for (double la : z.log_abs) {
            sum += std::exp(2.0 * (la - peak));
        }
        const double log_norm = peak + 0.5 * std::log(sum * h);
        // Sign: e0 positive at its peak; other modes positive on their first significant lobe.
        int flip = 1;
        if (k == 0) {
            const auto imax = static_cast<std::size_t>(
                std::max_element(z.log_abs.begin(), z.log_abs.end()) - z.log_abs.begin());
            flip = z.sign[imax];
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                if (z.log_abs[i] - peak > std::log(1e-6)) {
                    flip = z.sign[i];
                    break;
                }
            }
        }
        std::vector<double> e(n);
        for (std::size_t i = 0; i < n; ++i) {
            e[i] = flip * z.sign[i] * std::exp(z.log_abs[i] - log_norm);
        }
        if (k == 0) {
            for (std::size_t i = 0; i < n; ++i) {
                if (flip * z.sign[i] <= 0) {
                    ground_state_positive = false;
                }
            }
            log_e0.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                log_e0[i] = z.log_abs[i] - log_norm;
            }
        }
        disc.matrix.multiply(e, work);
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = work[i] - lambdas[k] * e[i];
            r2 += r * r;
        }
        residuals[k] = std::sqrt(r2 * h);  // ||e|| = 1 under measure h
        vectors[k] = std::move(e);
    }
    if (!ground_state_positive) {
        fail(ErrorKind::numerical, "ground state is not strictly positive");
    }
    for (std::size_t k = 0; k < m; ++k) {
        if (!(residuals[k] <= 1e-8)) {
            std::ostringstream os;
            os << "eigenpair " << k << " did not converge (relative residual " << residuals[k] << ")";
            fail(ErrorKind::numerical, os.str());
        }
    }

    // The higher modes are orthogonal to e0 only up to roundoff scaled by the
    // operator norm; one projection makes the mass-preserving class exact.
    for (std::size_t k = 1; k < m; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            proj += vectors[k][i] * vectors[0][i];
        }
        proj *= h;
        double norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            vectors[k][i] -= proj * vectors[0][i];
            norm2 += vectors[k][i] * vectors[k][i];
        }
        const double inv = 1.0 / std::sqrt(norm2 * h);
        for (double& v : vectors[k]) {
            v *= inv;
        }
    }

    const double strip = 0.01 * (b - a);
    double boundary_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (disc.x[i] - a <= strip || b - disc.x[i] <= strip) {
            boundary_mass += vectors[0][i] * vectors[0][i] * h;
        }
    }
    if (strict && boundary_mass > boundary_mass_tol) {
        std::ostringstream os;
        os << "domain [" << a << ", " << b << "] truncates the ground state (boundary mass " << boundary_mass
           << ")";
        fail(ErrorKind::numerical, os.str());
    }
    return SpectralSolution(problem, std::move(disc), std::move(lambdas), std::move(vectors), std::move(log_e0),
                            std::move(residuals), boundary_mass);
}

SpectralSolution solve_stationary(const ControlProblem& problem, const SpectralOptions& options) {
    double a = options.a;
    double b = options.b;
    std::size_t n = options.n;
    for (std::size_t attempt = 0;; ++attempt) {
        const bool last = !options.auto_widen || attempt == options.max_widenings;
        SpectralSolution sol = solve_eigen(problem, a, b, n, options.modes, options.strict && last,
                                           options.boundary_mass_tol);
        if (last || sol.boundary_mass() <= options.boundary_mass_tol) {
            return sol;
        }
        const double center = 0.5 * (a + b);
        const double half = b - a;
        a = center - half;
        b = center + half;
        n = 2 * n + 1;  // keeps h = (b - a) / (n + 1) unchanged
    }
}

GridFunction stationary_density(const SpectralSolution& sol) {
    const auto& e0 = sol.eigenfunction(0);
    const double h = sol.h();
    double mass = 0.0;
    for (double e : e0) {
        mass += e * e * h;
    }
    std::vector<double> p(e0.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = e0[i] * e0[i] / mass;
    }
    return GridFunction(sol.grid(), std::move(p));
}

GridFunction stationary_f(const SpectralSolution& sol) {
    return sol.eigenfunction_grid(0);
}

StationaryControl stationary_value_and_control(const SpectralSolution& sol) {
    const ControlProblem& p = sol.problem();
    const auto& x = sol.discretization().x;
    const auto& log_e0 = sol.log_ground_state();
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        v[i] = -p.sigma * p.sigma * p.R * log_e0[i] - p.R * p.nu.value(x[i]);
    }
    GridFunction vf(sol.grid(), std::move(v));
    GridFunction u = vf.partial(0);
    for (double& ui : u.values()) {
        ui = -ui / p.R;
    }
    return {std::move(vf), std::move(u)};
}

PerturbationEvolution evolve_perturbation(const SpectralSolution& sol, const GridFunction& p0,
                                          const std::vector<double>& times, double min_captured_energy) {
    const std::size_t n = sol.discretization().n;
    const double h = sol.h();
    if (p0.size() != n) {
        fail(ErrorKind::usage, "initial density must live on the spectral grid");
    }
    const auto& e0 = sol.eigenfunction(0);
    double mass = 0.0;
    double overlap = 0.0;  // <g~(0), e0> = sum (p0 - e0^2) h
    for (std::size_t i = 0; i < n; ++i) {
        if (p0[i] < 0.0) {
            fail(ErrorKind::perturbation, "initial density is negative at grid point " + std::to_string(i));
        }
        mass += p0[i] * h;
        overlap += (p0[i] - e0[i] * e0[i]) * h;
    }
    if (std::abs(mass - 1.0) > 1e-6) {
        fail(ErrorKind::perturbation, "initial density does not have unit mass");
    }
    if (std::abs(overlap) > 1e-6) {
        fail(ErrorKind::perturbation, "initial perturbation is not mass preserving (<g~, e0> = " +
                                          std::to_string(overlap) + ")");
    }
    std::vector<double> gtilde(n);
    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (p0[i] > 0.0 && !(e0[i] > kPositivityFloor)) {
            fail(ErrorKind::range, "initial density has mass where the ground state underflows (grid point " +
                                       std::to_string(i) + ")");
        }
        gtilde[i] = (p0[i] > 0.0 ? p0[i] / e0[i] : 0.0) - e0[i];
        energy += gtilde[i] * gtilde[i] * h;
    }
    const std::size_t m = sol.modes();
    PerturbationEvolution out;
    out.times = times;
    out.initial_coefficients.assign(m, 0.0);
    double captured = 0.0;
    for (std::size_t k = 1; k < m; ++k) {
        const auto& ek = sol.eigenfunction(k);
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            c += gtilde[i] * ek[i];
        }
        c *= h;
        out.initial_coefficients[k] = c;
        captured += c * c;
    }
    out.captured_energy = energy > 0.0 ? captured / energy : 1.0;
    if (out.captured_energy < min_captured_energy) {
        std::ostringstream os;
        os << m << " modes capture only " << out.captured_energy << " of the perturbation energy";
        fail(ErrorKind::numerical, os.str());
    }
    const double lambda0 = sol.eigenvalue(0);
    for (double t : times) {
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i) {
            g[i] = e0[i];
        }
        double norm2 = 0.0;
        for (std::size_t k = 1; k < m; ++k) {
            const double coeff = out.initial_coefficients[k] * std::exp(-(sol.eigenvalue(k) - lambda0) * t);
            norm2 += coeff * coeff;
            if (coeff == 0.0) {
                continue;
            }
            const auto& ek = sol.eigenfunction(k);
            for (std::size_t i = 0; i < n; ++i) {
                g[i] += coeff * ek[i];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            g[i] *= e0[i];
        }
        out.densities.emplace_back(sol.grid(), std::move(g));
        out.perturbation_norms.push_back(std::sqrt(norm2));
    }
    return out;
}

}  // namespace popctl
