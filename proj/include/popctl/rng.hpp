#pragma once

#include <cstdint>

namespace popctl {

/// Counter-based normal stream: the draw for (seed, agent, step, component) is
/// a pure function of its coordinates, so trajectories do not depend on thread
/// scheduling or on how many agents run alongside.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    /// Standard normal variate.
    double normal(std::uint64_t agent, std::uint64_t step, std::uint64_t component) const noexcept;
    /// Uniform on (0, 1).
    double uniform(std::uint64_t agent, std::uint64_t step, std::uint64_t component) const noexcept;

private:
    std::uint64_t seed_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace popctl
