#include "doctest.h"
#include "oracles.hpp"

#include "popctl/kernels/kernels.hpp"

#include <cmath>
#include <limits>
#include <vector>

using namespace popctl::kernels;

namespace {

// Exact reference, summed in long double.
double dot_ref(const std::vector<double>& a, const std::vector<double>& b) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += static_cast<long double>(a[i]) * b[i];
    }
    return static_cast<double>(s);
}

std::vector<const KernelTable*> tables() {
    std::vector<const KernelTable*> t{&scalar_table()};
    if (const KernelTable* v = avx2_table()) {
        t.push_back(v);
    }
    return t;
}

}  // namespace

TEST_CASE("active table is one of the known tables") {
    const KernelTable& a = active();
    CHECK((a.name == scalar_table().name || (avx2_table() && a.name == avx2_table()->name)));
}

TEST_CASE("dot matches an extended-precision reference for every length") {
    oracle::Gen gen(1);
    for (const KernelTable* t : tables()) {
        for (std::size_t n = 0; n < 70; ++n) {
            const auto a = gen.vec(n, -1.0, 1.0);
            const auto b = gen.vec(n, -1.0, 1.0);
            double scale = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                scale += std::abs(a[i] * b[i]);
            }
            CHECK(std::abs(t->dot(a.data(), b.data(), n) - dot_ref(a, b)) <= 4e-16 * (scale + 1e-300) * (n + 1));
        }
    }
}

TEST_CASE("SIMD kernels agree with the scalar reference") {
    const KernelTable* simd = avx2_table();
    if (simd == nullptr) {
        MESSAGE("no AVX2 variant on this machine; equivalence not exercised");
        return;
    }
    const KernelTable& ref = scalar_table();
    oracle::Gen gen(2);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = gen.size(0, 131);
        const auto x = gen.vec(n, -3.0, 3.0);
        const auto y = gen.vec(n, -3.0, 3.0);
        const double alpha = gen.uniform(-2.0, 2.0);

        std::vector<double> y1 = y, y2 = y;
        ref.axpy(alpha, x.data(), y1.data(), n);
        simd->axpy(alpha, x.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (std::abs(alpha * x[i]) + std::abs(y[i])));
        }

        std::vector<double> h1(n), h2(n);
        ref.hadamard(x.data(), y.data(), h1.data(), n);
        simd->hadamard(x.data(), y.data(), h2.data(), n);
        CHECK(h1 == h2);

        std::vector<double> s1 = x, s2 = x;
        ref.scale(alpha, s1.data(), n);
        simd->scale(alpha, s2.data(), n);
        CHECK(s1 == s2);

        CHECK(ref.max(x.data(), n) == simd->max(x.data(), n));

        const auto eps = gen.vec(n, -3.0, 3.0);
        std::vector<double> e1 = x, e2 = x;
        ref.em_update(e1.data(), y.data(), eps.data(), 0.01, 0.1, n);
        simd->em_update(e2.data(), y.data(), eps.data(), 0.01, 0.1, n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(e1[i] - e2[i]) <= 1e-15 * (std::abs(x[i]) + 1.0));
        }
    }
}

TEST_CASE("max of an empty range is -inf") {
    for (const KernelTable* t : tables()) {
        CHECK(t->max(nullptr, 0) == -std::numeric_limits<double>::infinity());
    }
}

TEST_CASE("apply_along_axis equals the explicit tensor contraction") {
    oracle::Gen gen(3);
    for (const KernelTable* t : tables()) {
        const std::size_t shapes[][3] = {{1, 7, 1}, {3, 5, 1}, {1, 6, 4}, {2, 9, 3}};
        for (const auto& [outer, m, inner] : shapes) {
            const auto a = gen.vec(m * m, -1.0, 1.0);
            const auto in = gen.vec(outer * m * inner, -1.0, 1.0);
            std::vector<double> out(in.size());
            apply_along_axis(a, m, outer, inner, in, out, *t);
            for (std::size_t o = 0; o < outer; ++o) {
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t k = 0; k < inner; ++k) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < m; ++j) {
                            s += a[i * m + j] * in[(o * m + j) * inner + k];
                        }
                        CHECK(out[(o * m + i) * inner + k] == doctest::Approx(s).epsilon(1e-13));
                    }
                }
            }
        }
    }
}
