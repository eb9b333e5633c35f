#include "popctl/grid_function.hpp"

#include "popctl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace popctl {

RectGrid::RectGrid(std::vector<std::vector<double>> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) {
        fail(ErrorKind::usage, "grid needs at least one axis");
    }
    for (std::size_t k = 0; k < axes_.size(); ++k) {
        const auto& a = axes_[k];
        if (a.size() < 2) {
            fail(ErrorKind::usage, "grid axis " + std::to_string(k) + " needs at least two points");
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!std::isfinite(a[i]) || (i > 0 && !(a[i] > a[i - 1]))) {
                fail(ErrorKind::usage, "grid axis " + std::to_string(k) + " is not strictly increasing");
            }
        }
    }
}

RectGrid RectGrid::uniform(std::span<const double> lo, std::span<const double> hi, std::size_t n) {
    std::vector<std::vector<double>> axes;
    for (std::size_t k = 0; k < lo.size(); ++k) {
        std::vector<double> a(n);
        const double h = (hi[k] - lo[k]) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = lo[k] + h * static_cast<double>(i);
        }
        a.back() = hi[k];
        axes.push_back(std::move(a));
    }
    return RectGrid(std::move(axes));
}

RectGrid RectGrid::uniform_1d(double lo, double hi, std::size_t n) {
    return uniform(std::span<const double>(&lo, 1), std::span<const double>(&hi, 1), n);
}

std::size_t RectGrid::size() const noexcept {
    if (axes_.empty()) {
        return 0;
    }
    std::size_t n = 1;
    for (const auto& a : axes_) {
        n *= a.size();
    }
    return n;
}

void RectGrid::point(std::size_t flat, std::span<double> out) const {
    for (std::size_t k = axes_.size(); k-- > 0;) {
        const std::size_t nk = axes_[k].size();
        out[k] = axes_[k][flat % nk];
        flat /= nk;
    }
}

Point RectGrid::point(std::size_t flat) const {
    Point p(axes_.size());
    point(flat, p);
    return p;
}

double RectGrid::uniform_spacing(std::size_t k) const {
    const auto& a = axes_.at(k);
    const double h = (a.back() - a.front()) / static_cast<double>(a.size() - 1);
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (std::abs((a[i] - a[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) {
            fail(ErrorKind::usage, "axis " + std::to_string(k) + " is not uniformly spaced");
        }
    }
    return h;
}

GridFunction::GridFunction(RectGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        fail(ErrorKind::usage, "grid function has " + std::to_string(values_.size()) + " values for " +
                                   std::to_string(grid_.size()) + " grid points");
    }
}

GridFunction GridFunction::sample(RectGrid grid, const std::function<double(std::span<const double>)>& fn) {
    std::vector<double> values(grid.size());
    Point x(grid.dim());
    for (std::size_t i = 0; i < values.size(); ++i) {
        grid.point(i, x);
        values[i] = fn(x);
    }
    return GridFunction(std::move(grid), std::move(values));
}

GridFunction GridFunction::partial(std::size_t k) const {
    const std::size_t d = grid_.dim();
    if (k >= d) {
        fail(ErrorKind::usage, "partial derivative along a missing axis");
    }
    const double h = grid_.uniform_spacing(k);
    const std::size_t n = grid_.axis(k).size();
    if (n < 5) {
        fail(ErrorKind::usage, "gradient rule needs at least 5 points per axis");
    }
    std::size_t inner = 1;
    for (std::size_t j = k + 1; j < d; ++j) {
        inner *= grid_.axis(j).size();
    }
    const std::size_t outer = values_.size() / (n * inner);
    std::vector<double> out(values_.size());
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            auto f = [&](std::size_t i) { return values_[(o * n + i) * inner + in]; };
            auto g = [&](std::size_t i) -> double& { return out[(o * n + i) * inner + in]; };
            g(0) = (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
            g(n - 1) = (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h);
            g(1) = (f(2) - f(0)) / (2.0 * h);
            g(n - 2) = (f(n - 1) - f(n - 3)) / (2.0 * h);
            for (std::size_t i = 2; i + 2 < n; ++i) {
                g(i) = (-f(i + 2) + 8.0 * f(i + 1) - 8.0 * f(i - 1) + f(i - 2)) / (12.0 * h);
            }
        }
    }
    return GridFunction(grid_, std::move(out));
}

double GridFunction::interpolate(std::span<const double> x, bool* clamped) const {
    const std::size_t d = grid_.dim();
    if (x.size() != d) {
        fail(ErrorKind::usage, "interpolation point has the wrong dimension");
    }
    bool was_clamped = false;
    std::vector<std::size_t> lo(d);
    std::vector<double> t(d);
    for (std::size_t k = 0; k < d; ++k) {
        const auto& a = grid_.axis(k);
        double xk = x[k];
        if (!(xk >= a.front())) {
            xk = a.front();
            was_clamped = true;
        } else if (xk > a.back()) {
            xk = a.back();
            was_clamped = true;
        }
        auto it = std::upper_bound(a.begin(), a.end(), xk);
        std::size_t i = (it == a.begin()) ? 0 : static_cast<std::size_t>(it - a.begin()) - 1;
        i = std::min(i, a.size() - 2);
        lo[k] = i;
        t[k] = (xk - a[i]) / (a[i + 1] - a[i]);
    }
    if (clamped != nullptr) {
        *clamped = was_clamped;
    }
    double acc = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
        double w = 1.0;
        std::size_t flat = 0;
        for (std::size_t k = 0; k < d; ++k) {
            const bool up = (corner >> k) & 1U;
            w *= up ? t[k] : (1.0 - t[k]);
            flat = flat * grid_.axis(k).size() + lo[k] + (up ? 1 : 0);
        }
        if (w != 0.0) {
            acc += w * values_[flat];
        }
    }
    return acc;
}

double GridFunction::integrate() const {
    const std::size_t d = grid_.dim();
    std::vector<std::vector<double>> weights(d);
    for (std::size_t k = 0; k < d; ++k) {
        const auto& a = grid_.axis(k);
        auto& w = weights[k];
        w.assign(a.size(), 0.0);
        for (std::size_t i = 0; i + 1 < a.size(); ++i) {
            const double h = a[i + 1] - a[i];
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
    }
    double sum = 0.0;
    for (std::size_t flat = 0; flat < values_.size(); ++flat) {
        std::size_t rem = flat;
        double w = 1.0;
        for (std::size_t k = d; k-- > 0;) {
            const std::size_t nk = grid_.axis(k).size();
            w *= weights[k][rem % nk];
            rem /= nk;
        }
        sum += w * values_[flat];
    }
    return sum;
}

double GridFunction::max_abs() const {
    double m = 0.0;
    for (double v : values_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

void GridFunction::write_csv(std::ostream& os) const {
    os << std::setprecision(17);
    os << "dims," << grid_.dim() << '\n';
    for (std::size_t k = 0; k < grid_.dim(); ++k) {
        const auto& a = grid_.axis(k);
        os << "axis," << k << ',' << a.size() << '\n';
        for (double c : a) {
            os << c << '\n';
        }
    }
    os << "values," << values_.size() << '\n';
    for (double v : values_) {
        os << v << '\n';
    }
}

void GridFunction::write_csv(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) {
        fail(ErrorKind::usage, "cannot open " + path.string() + " for writing");
    }
    write_csv(os);
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
        parts.push_back(item);
    }
    return parts;
}

std::size_t parse_count(const std::string& s) {
    try {
        return static_cast<std::size_t>(std::stoull(s));
    } catch (const std::exception&) {
        fail(ErrorKind::usage, "malformed count '" + s + "' in grid function CSV");
    }
}

double parse_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::usage, "malformed number '" + s + "' in grid function CSV");
    }
}

}  // namespace

GridFunction GridFunction::read_csv(std::istream& is) {
    std::string line;
    auto next = [&]() -> std::string {
        if (!std::getline(is, line)) {
            fail(ErrorKind::usage, "truncated grid function CSV");
        }
        return line;
    };
    auto header = split_commas(next());
    if (header.size() != 2 || header[0] != "dims") {
        fail(ErrorKind::usage, "grid function CSV must start with 'dims,<d>'");
    }
    const std::size_t d = parse_count(header[1]);
    std::vector<std::vector<double>> axes(d);
    for (std::size_t k = 0; k < d; ++k) {
        auto ah = split_commas(next());
        if (ah.size() != 3 || ah[0] != "axis" || parse_count(ah[1]) != k) {
            fail(ErrorKind::usage, "expected 'axis," + std::to_string(k) + ",<n>' in grid function CSV");
        }
        const std::size_t n = parse_count(ah[2]);
        axes[k].reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            axes[k].push_back(parse_double(next()));
        }
    }
    auto vh = split_commas(next());
    if (vh.size() != 2 || vh[0] != "values") {
        fail(ErrorKind::usage, "expected 'values,<n>' in grid function CSV");
    }
    const std::size_t n = parse_count(vh[1]);
    std::vector<double> values;
    values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        values.push_back(parse_double(next()));
    }
    return GridFunction(RectGrid(std::move(axes)), std::move(values));
}

GridFunction GridFunction::read_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        fail(ErrorKind::usage, "cannot open " + path.string());
    }
    return read_csv(is);
}

}  // namespace popctl
