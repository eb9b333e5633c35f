#pragma once

// Independent reference values for the tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

// Backward RK4 for -dP/dt = 2 beta - P^2 / R - 2 c P, P(T) = 0, together with
// -ds/dt = sigma^2 P / 2, s(T) = 0 (value v = P x^2 / 2 + s).
struct Riccati {
    double P;
    double s;
};

inline Riccati riccati(double beta, double R, double c, double sigma, double T, double t, double dt = 1e-4) {
    const long n = std::lround((T - t) / dt);
    const double h = n > 0 ? (T - t) / static_cast<double>(n) : 0.0;
    auto fP = [&](double P) { return 2.0 * beta - P * P / R - 2.0 * c * P; };
    auto fs = [&](double P) { return 0.5 * sigma * sigma * P; };
    double P = 0.0;
    double s = 0.0;
    for (long i = 0; i < n; ++i) {
        const double k1 = fP(P), l1 = fs(P);
        const double k2 = fP(P + 0.5 * h * k1), l2 = fs(P + 0.5 * h * k1);
        const double k3 = fP(P + 0.5 * h * k2), l3 = fs(P + 0.5 * h * k2);
        const double k4 = fP(P + h * k3), l4 = fs(P + h * k3);
        P += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        s += h / 6.0 * (l1 + 2 * l2 + 2 * l3 + l4);
    }
    return {P, s};
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// E[Y^k] for Y ~ N(0, v).
inline double gaussian_moment(int k, double v) {
    if (k % 2 == 1) {
        return 0.0;
    }
    double m = 1.0;
    for (int j = k - 1; j > 0; j -= 2) {
        m *= j * v;
    }
    return m;
}

// Hand-rolled generators for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    std::size_t size(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }
    std::vector<double> vec(std::size_t n, double lo, double hi) {
        std::vector<double> v(n);
        for (double& x : v) {
            x = uniform(lo, hi);
        }
        return v;
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace oracle
