#include "popctl/tridiagonal.hpp"

#include "popctl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace popctl {

void SymTridiagonal::multiply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = diag.size();
    for (std::size_t i = 0; i < n; ++i) {
        double s = diag[i] * x[i];
        if (i > 0) {
            s += off[i - 1] * x[i - 1];
        }
        if (i + 1 < n) {
            s += off[i] * x[i + 1];
        }
        y[i] = s;
    }
}

namespace {

double pivot_floor(const SymTridiagonal& t) {
    double scale = 0.0;
    for (double b : t.off) {
        scale = std::max(scale, std::abs(b));
    }
    return std::numeric_limits<double>::epsilon() * std::max(scale, std::numeric_limits<double>::min());
}

std::pair<double, double> gershgorin(const SymTridiagonal& t) {
    const std::size_t n = t.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) {
            r += std::abs(t.off[i - 1]);
        }
        if (i + 1 < n) {
            r += std::abs(t.off[i]);
        }
        lo = std::min(lo, t.diag[i] - r);
        hi = std::max(hi, t.diag[i] + r);
    }
    const double pad = std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)) * n + 1e-300;
    return {lo - pad, hi + pad};
}

}  // namespace

std::size_t sturm_count(const SymTridiagonal& t, double shift) {
    const double floor = pivot_floor(t);
    std::size_t count = 0;
    double q = t.diag[0] - shift;
    for (std::size_t i = 0;; ++i) {
        if (std::abs(q) < floor) {
            q = -floor;
        }
        if (q < 0.0) {
            ++count;
        }
        if (i + 1 == t.size()) {
            break;
        }
        q = (t.diag[i + 1] - shift) - t.off[i] * t.off[i] / q;
    }
    return count;
}

double bisect_eigenvalue(const SymTridiagonal& t, std::size_t k) {
    if (k >= t.size()) {
        fail(ErrorKind::usage, "eigenvalue index out of range");
    }
    auto [lo, hi] = gershgorin(t);
    const double tol_scale = std::max(std::abs(lo), std::abs(hi));
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi || (hi - lo) <= 2.0 * std::numeric_limits<double>::epsilon() * tol_scale * 0.25) {
            return mid;
        }
        if (sturm_count(t, mid) > k) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<double> smallest_eigenvalues(const SymTridiagonal& t, std::size_t m) {
    std::vector<double> out(m);
    // Intervals are independent; OpenMP spreads them when available.
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < static_cast<long>(m); ++k) {
        out[static_cast<std::size_t>(k)] = bisect_eigenvalue(t, static_cast<std::size_t>(k));
    }
    return out;
}

LogVector twisted_eigenvector(const SymTridiagonal& t, double lambda) {
    const std::size_t n = t.size();
    const double floor = pivot_floor(t);
    auto guard = [floor](double v) { return std::abs(v) < floor ? (v < 0 ? -floor : floor) : v; };

    // T - lambda = L+ D+ L+^T (top-down) and U- D- U-^T (bottom-up).
    std::vector<double> dplus(n), lplus(n > 0 ? n - 1 : 0);
    std::vector<double> dminus(n), uminus(n > 0 ? n - 1 : 0);
    dplus[0] = guard(t.diag[0] - lambda);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        lplus[i] = t.off[i] / dplus[i];
        dplus[i + 1] = guard(t.diag[i + 1] - lambda - lplus[i] * t.off[i]);
    }
    dminus[n - 1] = guard(t.diag[n - 1] - lambda);
    for (std::size_t i = n - 1; i-- > 0;) {
        uminus[i] = t.off[i] / dminus[i + 1];
        dminus[i] = guard(t.diag[i] - lambda - uminus[i] * t.off[i]);
    }
    std::size_t r = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const double gamma = dplus[k] + dminus[k] - (t.diag[k] - lambda);
        if (std::abs(gamma) < best) {
            best = std::abs(gamma);
            r = k;
        }
    }

    LogVector z;
    z.log_abs.assign(n, 0.0);
    z.sign.assign(n, 1);
    for (std::size_t i = r; i-- > 0;) {
        const double ratio = -lplus[i];
        z.log_abs[i] = z.log_abs[i + 1] + std::log(std::abs(ratio));
        z.sign[i] = static_cast<signed char>(z.sign[i + 1] * (ratio < 0 ? -1 : 1));
    }
    for (std::size_t i = r; i + 1 < n; ++i) {
        const double ratio = -uminus[i];
        z.log_abs[i + 1] = z.log_abs[i] + std::log(std::abs(ratio));
        z.sign[i + 1] = static_cast<signed char>(z.sign[i] * (ratio < 0 ? -1 : 1));
    }
    // ||z||^2 with z_r = 1, accumulated stably in log space.
    const double peak = *std::max_element(z.log_abs.begin(), z.log_abs.end());
    double sum = 0.0;
    for (double la : z.log_abs) {
        sum += std::exp(2.0 * (la - peak));
    }
    const double log_norm = peak + 0.5 * std::log(sum);
    z.relative_residual = best * std::exp(-log_norm);
    return z;
}

std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c(n), d(n), x(n);
    double denom = diag[0];
    if (denom == 0.0) {
        fail(ErrorKind::numerical, "zero pivot in tridiagonal solve");
    }
    c[0] = n > 1 ? upper[0] / denom : 0.0;
    d[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = diag[i] - lower[i - 1] * c[i - 1];
        if (denom == 0.0) {
            fail(ErrorKind::numerical, "zero pivot in tridiagonal solve");
        }
        c[i] = i + 1 < n ? upper[i] / denom : 0.0;
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    return x;
}

}  // namespace popctl
