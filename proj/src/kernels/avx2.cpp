// Compiled with -mavx2 -mfma; only reached through avx2_table() after a CPUID check.

#include "popctl/kernels/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <limits>

namespace popctl::kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void hadamard_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) {
        out[i] = a[i] * b[i];
    }
}

void scale_avx2(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) {
        x[i] *= alpha;
    }
}

double max_avx2(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d vm = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4) {
            vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
        }
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, vm);
        m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    }
    for (; i < n; ++i) {
        if (x[i] > m) {
            m = x[i];
        }
    }
    return m;
}

void em_update_avx2(double* x, const double* drift, const double* eps, double dt,
                    double noise_scale, std::size_t n) {
    const __m256d vdt = _mm256_set1_pd(dt);
    const __m256d vs = _mm256_set1_pd(noise_scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // Same association as the scalar loop: x + (drift*dt + s*eps).
        __m256d inc = _mm256_add_pd(_mm256_mul_pd(_mm256_loadu_pd(drift + i), vdt),
                                    _mm256_mul_pd(vs, _mm256_loadu_pd(eps + i)));
        _mm256_storeu_pd(x + i, _mm256_add_pd(_mm256_loadu_pd(x + i), inc));
    }
    for (; i < n; ++i) {
        x[i] += drift[i] * dt + noise_scale * eps[i];
    }
}

}  // namespace

const KernelTable& avx2_table_unchecked() {
    static const KernelTable table{
        "avx2", dot_avx2, axpy_avx2, hadamard_avx2, scale_avx2, max_avx2, em_update_avx2,
    };
    return table;
}

}  // namespace popctl::kernels
