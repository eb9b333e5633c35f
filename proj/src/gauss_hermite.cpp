#include "popctl/gauss_hermite.hpp"

#include "popctl/errors.hpp"
#include "popctl/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace popctl {

namespace {

struct HermitePair {
    double pm;        // p_m(y) / exp(log_scale)
    double pm1;       // p_{m-1}(y) / exp(log_scale)
    double log_scale;
};

// Orthonormal Hermite p_m and p_{m-1}, rescaled to stay finite far out.
HermitePair hermite_pair(std::size_t m, double y) {
    double p1 = 1.0 / std::pow(std::numbers::pi, 0.25);
    double p2 = 0.0;
    double log_scale = 0.0;
    for (std::size_t j = 1; j <= m; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = y * std::sqrt(2.0 / jd) * p2 - std::sqrt((jd - 1.0) / jd) * p3;
        if (std::abs(p1) > 1e150) {
            p1 *= 1e-150;
            p2 *= 1e-150;
            log_scale += 150.0 * std::numbers::ln10;
        }
    }
    return {p1, p2, log_scale};
}

}  // namespace

GaussHermiteRule gauss_hermite(std::size_t m) {
    if (m == 0 || m > 400) {
        fail(ErrorKind::configuration, "Gauss-Hermite order must be in [1, 400]");
    }
    const double md = static_cast<double>(m);
    // Nodes are the eigenvalues of the Jacobi matrix (zero diagonal,
    // off-diagonal sqrt(k/2)); bisection locates them, Newton polishes.
    SymTridiagonal jacobi;
    jacobi.diag.assign(m, 0.0);
    for (std::size_t k = 1; k < m; ++k) {
        jacobi.off.push_back(std::sqrt(static_cast<double>(k) / 2.0));
    }
    GaussHermiteRule rule;
    rule.nodes = smallest_eigenvalues(jacobi, m);
    rule.log_weights.resize(m);
    rule.weights.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double z = rule.nodes[i];
        for (int iter = 0; iter < 3; ++iter) {
            const HermitePair h = hermite_pair(m, z);
            const double step = h.pm / (std::sqrt(2.0 * md) * h.pm1);
            if (!std::isfinite(step)) {
                break;
            }
            z -= step;
        }
        const HermitePair h = hermite_pair(m, z);
        rule.nodes[i] = z;
        const double log_pp = std::log(std::sqrt(2.0 * md) * std::abs(h.pm1)) + h.log_scale;
        rule.log_weights[i] = std::log(2.0) - 2.0 * log_pp;
        rule.weights[i] = std::exp(rule.log_weights[i]);
    }
    // Exact symmetry.
    for (std::size_t i = 0; i < m / 2; ++i) {
        const std::size_t j = m - 1 - i;
        const double y = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        rule.nodes[i] = -y;
        rule.nodes[j] = y;
        const double lw = 0.5 * (rule.log_weights[i] + rule.log_weights[j]);
        rule.log_weights[i] = rule.log_weights[j] = lw;
        rule.weights[i] = rule.weights[j] = std::exp(lw);
    }
    if (m % 2 == 1) {
        rule.nodes[m / 2] = 0.0;
    }
    return rule;
}

}  // namespace popctl
