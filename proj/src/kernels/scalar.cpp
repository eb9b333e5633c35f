#include "popctl/kernels/kernels.hpp"

#include <limits>

namespace popctl::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void hadamard_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = a[i] * b[i];
    }
}

void scale_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        x[i] *= alpha;
    }
}

double max_scalar(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > m) {
            m = x[i];
        }
    }
    return m;
}

void em_update_scalar(double* x, const double* drift, const double* eps, double dt,
                      double noise_scale, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        x[i] += drift[i] * dt + noise_scale * eps[i];
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        "scalar", dot_scalar, axpy_scalar, hadamard_scalar, scale_scalar, max_scalar, em_update_scalar,
    };
    return table;
}

}  // namespace popctl::kernels
