#pragma once

#include <cstdint>
#include <stdexcept>

namespace smallnoise {

// Uniform time grid on [0, T]. The last node is forced to T exactly so that
// accumulated roundoff in k*h can never move the terminal time.
struct TimeGrid {
    double T = 1.0;
    std::uint64_t n_steps = 1;

    TimeGrid() = default;
    TimeGrid(double horizon, std::uint64_t steps) : T(horizon), n_steps(steps) {
        if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: T must be > 0");
        if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
    }

    double h() const { return T / static_cast<double>(n_steps); }

    double t(std::uint64_t k) const {
        return (k >= n_steps) ? T : static_cast<double>(k) * h();
    }

    TimeGrid refined() const { return TimeGrid(T, 2 * n_steps); }

    bool operator==(const TimeGrid&) const = default;
};

} // namespace smallnoise
