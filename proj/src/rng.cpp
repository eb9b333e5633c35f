#include "popctl/rng.hpp"

#include <cmath>
#include <numbers>

namespace popctl {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t key(std::uint64_t seed, std::uint64_t agent, std::uint64_t step, std::uint64_t slot) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ agent);
    h = splitmix64(h ^ step);
    return splitmix64(h ^ slot);
}

// 53 random bits mapped to the open interval (0, 1).
double to_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double NormalStream::uniform(std::uint64_t agent, std::uint64_t step, std::uint64_t component) const noexcept {
    return to_unit(key(seed_, agent, step, 2 * component + 0x8000000000000000ULL));
}

double NormalStream::normal(std::uint64_t agent, std::uint64_t step, std::uint64_t component) const noexcept {
    const double u1 = to_unit(key(seed_, agent, step, 2 * component));
    const double u2 = to_unit(key(seed_, agent, step, 2 * component + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace popctl
