#include "doctest.h"
#include "oracles.hpp"

#include "popctl/errors.hpp"
#include "popctl/grid_function.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace popctl;

TEST_CASE("uniform grids and flat indexing") {
    const RectGrid g = RectGrid::uniform(std::vector<double>{-1.0, 0.0}, std::vector<double>{1.0, 2.0}, 5);
    CHECK(g.dim() == 2);
    CHECK(g.size() == 25);
    CHECK(g.uniform_spacing(0) == doctest::Approx(0.5));
    const Point p = g.point(7);  // row 1, column 2
    CHECK(p[0] == doctest::Approx(-0.5));
    CHECK(p[1] == doctest::Approx(1.0));
    CHECK_THROWS_AS(RectGrid({{0.0, 1.0, 0.5}}), Error);
    CHECK_THROWS_AS(RectGrid({{0.0, 1.0, 3.0}}).uniform_spacing(0), Error);
}

TEST_CASE("partial derivative converges at fourth order in the interior") {
    auto err_at = [](std::size_t n) {
        const GridFunction f = GridFunction::sample(RectGrid::uniform_1d(0.0, 1.0, n),
                                                    [](std::span<const double> x) { return std::sin(3 * x[0]); });
        const GridFunction d = f.partial(0);
        double err = 0.0;
        for (std::size_t i = 2; i + 2 < n; ++i) {
            const double x = f.grid().axis(0)[i];
            err = std::max(err, std::abs(d[i] - 3 * std::cos(3 * x)));
        }
        return err;
    };
    const double e1 = err_at(41), e2 = err_at(81);
    CHECK(std::log2(e1 / e2) > 3.7);
}

TEST_CASE("partial derivative is exact for quadratics along each axis") {
    const GridFunction f = GridFunction::sample(
        RectGrid::uniform(std::vector<double>{-1.0, -2.0}, std::vector<double>{1.0, 2.0}, 9),
        [](std::span<const double> x) { return x[0] * x[0] + 3 * x[0] * x[1] - x[1] * x[1]; });
    const GridFunction d1 = f.partial(1);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Point p = f.grid().point(i);
        CHECK(d1[i] == doctest::Approx(3 * p[0] - 2 * p[1]).epsilon(1e-10));
    }
}

TEST_CASE("multilinear interpolation reproduces bilinear functions and clamps") {
    const GridFunction f = GridFunction::sample(
        RectGrid::uniform(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 1.0}, 4),
        [](std::span<const double> x) { return 1 + 2 * x[0] - x[1] + 0.5 * x[0] * x[1]; });
    oracle::Gen gen(20);
    for (int i = 0; i < 50; ++i) {
        const double a = gen.uniform(0.0, 1.0), b = gen.uniform(0.0, 1.0);
        bool clamped = true;
        CHECK(f.interpolate(std::vector<double>{a, b}, &clamped) ==
              doctest::Approx(1 + 2 * a - b + 0.5 * a * b));
        CHECK_FALSE(clamped);
    }
    bool clamped = false;
    CHECK(f.interpolate(std::vector<double>{2.0, -1.0}, &clamped) == doctest::Approx(3.0));
    CHECK(clamped);
}

TEST_CASE("trapezoid integration") {
    const GridFunction f = GridFunction::sample(RectGrid::uniform_1d(-8.0, 8.0, 801), [](std::span<const double> x) {
        return std::exp(-x[0] * x[0] / 2) / std::sqrt(2 * std::numbers::pi);
    });
    CHECK(f.integrate() == doctest::Approx(1.0).epsilon(1e-12));
    const GridFunction g = GridFunction::sample(
        RectGrid::uniform(std::vector<double>{0.0, 0.0}, std::vector<double>{2.0, 3.0}, 7),
        [](std::span<const double> x) { return x[0] + x[1]; });
    CHECK(g.integrate() == doctest::Approx(2.0 * 3.0 * (1.0 + 1.5)));
}

TEST_CASE("CSV round trip is exact") {
    oracle::Gen gen(21);
    const RectGrid g({{-1.0, -0.3, 0.2, 1.0}, {0.0, 0.1, 0.7}});
    const GridFunction f(g, gen.vec(g.size(), -1e3, 1e3));
    std::stringstream ss;
    f.write_csv(ss);
    const GridFunction r = GridFunction::read_csv(ss);
    CHECK(r.grid() == f.grid());
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(r[i] == f[i]);
    }
}
