#pragma once

// Data-parallel inner loops used by the quadrature recursion and the ensemble
// integrator. Every kernel has a portable scalar reference; an AVX2/FMA variant
// is compiled when the toolchain allows and chosen at runtime from CPUID.

#include <cstddef>
#include <span>
#include <string_view>

namespace popctl::kernels {

struct KernelTable {
    std::string_view name;

    /// sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    /// out[i] = a[i] * b[i]   (out may alias a or b)
    void (*hadamard)(const double* a, const double* b, double* out, std::size_t n);
    /// x[i] *= alpha
    void (*scale)(double alpha, double* x, std::size_t n);
    /// max_i x[i]; -inf for n == 0
    double (*max)(const double* x, std::size_t n);
    /// x[i] += drift[i] * dt + noise_scale * eps[i]
    void (*em_update)(double* x, const double* drift, const double* eps, double dt,
                      double noise_scale, std::size_t n);
};

const KernelTable& scalar_table();

/// nullptr when the AVX2 variant was not compiled or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// Table selected at first call. POPCTL_SIMD=scalar in the environment forces
/// the reference path.
const KernelTable& active();

// Convenience wrappers over the active table.
inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void hadamard(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    active().hadamard(a.data(), b.data(), out.data(), a.size());
}
inline void scale(double alpha, std::span<double> x) {
    active().scale(alpha, x.data(), x.size());
}
inline double max(std::span<const double> x) {
    return active().max(x.data(), x.size());
}

/// Applies the square matrix `a` (row-major, m x m) along one axis of a
/// row-major tensor viewed as [outer, m, inner]:
///     out[o, i, k] = sum_j a[i, j] * in[o, j, k]
/// `in` and `out` must not alias.
void apply_along_axis(std::span<const double> a, std::size_t m, std::size_t outer,
                      std::size_t inner, std::span<const double> in, std::span<double> out,
                      const KernelTable& table = active());

}  // namespace popctl::kernels
