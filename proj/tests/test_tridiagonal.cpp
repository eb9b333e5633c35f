#include "doctest.h"
#include "oracles.hpp"

#include "popctl/errors.hpp"
#include "popctl/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace popctl;

namespace {

SymTridiagonal laplacian(std::size_t n) {
    return {std::vector<double>(n, 2.0), std::vector<double>(n - 1, -1.0)};
}

double toeplitz_eigenvalue(std::size_t k, std::size_t n) {
    return 2.0 - 2.0 * std::cos((k + 1) * std::numbers::pi / (n + 1));
}

}  // namespace

TEST_CASE("Toeplitz eigenvalues") {
    for (std::size_t n : {1u, 2u, 7u, 100u, 1000u}) {
        const auto t = laplacian(n);
        const auto ev = smallest_eigenvalues(t, std::min<std::size_t>(n, 6));
        for (std::size_t k = 0; k < ev.size(); ++k) {
            CHECK(std::abs(ev[k] - toeplitz_eigenvalue(k, n)) <= 1e-13);
        }
    }
}

TEST_CASE("Sturm count brackets every eigenvalue") {
    const std::size_t n = 50;
    const auto t = laplacian(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double lam = toeplitz_eigenvalue(k, n);
        CHECK(sturm_count(t, lam - 1e-9) == k);
        CHECK(sturm_count(t, lam + 1e-9) == k + 1);
    }
}

TEST_CASE("twisted eigenvectors have small residuals on random matrices") {
    oracle::Gen gen(30);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = gen.size(2, 200);
        SymTridiagonal t{gen.vec(n, -2.0, 5.0), gen.vec(n - 1, -1.0, -0.1)};
        const std::size_t m = std::min<std::size_t>(n, 4);
        const auto ev = smallest_eigenvalues(t, m);
        CHECK(std::is_sorted(ev.begin(), ev.end()));
        for (std::size_t k = 0; k < m; ++k) {
            const LogVector z = twisted_eigenvector(t, ev[k]);
            const double peak = *std::max_element(z.log_abs.begin(), z.log_abs.end());
            std::vector<double> v(n), tv(n);
            double norm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                v[i] = z.sign[i] * std::exp(z.log_abs[i] - peak);
                norm += v[i] * v[i];
            }
            t.multiply(v, tv);
            double res = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                res += (tv[i] - ev[k] * v[i]) * (tv[i] - ev[k] * v[i]);
            }
            CHECK(std::sqrt(res / norm) <= 1e-10 * (1.0 + std::abs(ev[k])));
        }
    }
}

TEST_CASE("Thomas solve against a dense residual") {
    oracle::Gen gen(31);
    const std::size_t n = 64;
    const auto lo = gen.vec(n - 1, -1.0, 1.0);
    const auto up = gen.vec(n - 1, -1.0, 1.0);
    auto d = gen.vec(n, 3.0, 4.0);
    const auto b = gen.vec(n, -1.0, 1.0);
    const auto x = solve_tridiagonal(lo, d, up, b);
    for (std::size_t i = 0; i < n; ++i) {
        double r = d[i] * x[i] - b[i];
        if (i > 0) {
            r += lo[i - 1] * x[i - 1];
        }
        if (i + 1 < n) {
            r += up[i] * x[i + 1];
        }
        CHECK(std::abs(r) <= 1e-13);
    }
    std::vector<double> zero(2, 0.0);
    CHECK_THROWS_AS(solve_tridiagonal(std::vector<double>{1.0}, zero, std::vector<double>{1.0}, zero), Error);
}
