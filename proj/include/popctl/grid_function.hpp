#pragma once

#include "popctl/model.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace popctl {

/// Rectilinear grid: one strictly increasing coordinate list per dimension.
class RectGrid {
public:
    RectGrid() = default;
    explicit RectGrid(std::vector<std::vector<double>> axes);

    /// n equally spaced points on [lo, hi] (endpoints included).
    static RectGrid uniform(std::span<const double> lo, std::span<const double> hi, std::size_t n);
    static RectGrid uniform_1d(double lo, double hi, std::size_t n);

    std::size_t dim() const noexcept { return axes_.size(); }
    std::size_t size() const noexcept;
    const std::vector<double>& axis(std::size_t k) const { return axes_.at(k); }
    const std::vector<std::vector<double>>& axes() const noexcept { return axes_; }

    /// Coordinates of the flat (row-major) index.
    Point point(std::size_t flat) const;
    void point(std::size_t flat, std::span<double> out) const;

    /// Spacing of a uniform axis; throws a usage error if the axis is not uniform.
    double uniform_spacing(std::size_t k) const;

    bool operator==(const RectGrid& other) const = default;

private:
    std::vector<std::vector<double>> axes_;
};

/// Values on a RectGrid, row-major (last axis fastest).
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(RectGrid grid, std::vector<double> values);

    static GridFunction sample(RectGrid grid, const std::function<double(std::span<const double>)>& fn);

    const RectGrid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    /// Partial derivative along axis k on a uniform axis: 4th-order central
    /// differences in the interior, 2nd-order central next to the boundary,
    /// 2nd-order one-sided at the boundary points.
    GridFunction partial(std::size_t k) const;

    /// Multilinear interpolation. Points outside the grid are clamped to the
    /// nearest grid point; `clamped` (if given) reports whether that happened.
    double interpolate(std::span<const double> x, bool* clamped = nullptr) const;
    double interpolate(double x, bool* clamped = nullptr) const {
        return interpolate(std::span<const double>(&x, 1), clamped);
    }

    /// Tensor-product trapezoid rule.
    double integrate() const;

    double max_abs() const;

    void write_csv(std::ostream& os) const;
    void write_csv(const std::filesystem::path& path) const;
    static GridFunction read_csv(std::istream& is);
    static GridFunction read_csv(const std::filesystem::path& path);

private:
    RectGrid grid_;
    std::vector<double> values_;
};

}  // namespace popctl
