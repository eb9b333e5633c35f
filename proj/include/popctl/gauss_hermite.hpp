#pragma once

#include <cstddef>
#include <vector>

namespace popctl {

/// Physicists' Gauss-Hermite rule: integral e^{-y^2} g(y) dy ~ sum w_i g(y_i).
/// Nodes ascending. log_weights is accurate even where the weights underflow.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> log_weights;
};

/// Jacobi-matrix eigenvalues by bisection, polished by Newton on the rescaled
/// orthonormal recurrence; valid for 1 <= m <= 400.
GaussHermiteRule gauss_hermite(std::size_t m);

}  // namespace popctl
