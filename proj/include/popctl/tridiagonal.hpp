#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace popctl {

/// Symmetric tridiagonal matrix: diag has n entries, off has n-1.
struct SymTridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const noexcept { return diag.size(); }
    void multiply(std::span<const double> x, std::span<double> y) const;
};

/// Number of eigenvalues strictly below `shift` (Sturm sequence / LDL^T inertia).
std::size_t sturm_count(const SymTridiagonal& t, double shift);

/// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
double bisect_eigenvalue(const SymTridiagonal& t, std::size_t k);

/// The m smallest eigenvalues, ascending.
std::vector<double> smallest_eigenvalues(const SymTridiagonal& t, std::size_t m);

/// Eigenvector for an accurate eigenvalue from a twisted factorization.
/// Components are returned as log|z_i| and sign so that exponentially small
/// tails keep full relative accuracy. Not normalized.
struct LogVector {
    std::vector<double> log_abs;
    std::vector<signed char> sign;
    /// |gamma_r| / ||z||, the relative residual ||(T - lambda) z|| / ||z||.
    double relative_residual = 0.0;
};

LogVector twisted_eigenvector(const SymTridiagonal& t, double lambda);

/// Solve a general tridiagonal system (Thomas algorithm). lower/upper have n-1
/// entries. Throws a numerical error on a zero pivot.
std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs);

}  // namespace popctl
