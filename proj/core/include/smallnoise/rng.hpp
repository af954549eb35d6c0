#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>

#include "smallnoise/grid.hpp"

namespace smallnoise {

// Counter-based generator (Philox4x32-10). Every variate is a pure function
// of (seed, purpose, stream, step, component, level), so ensembles are
// reproducible under any scheduling and streams never overlap by
// construction.
namespace rng {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

// Stream purposes; distinct purposes give disjoint counter spaces.
enum class Purpose : std::uint32_t {
    brownian = 0,       // Brownian increments (level 0) and bridge refinements
    initial_state = 1,  // x0 samplers
    point_cloud = 2,    // condition-validator samplers
};

// Uniform in (0,1), never 0 or 1.
double uniform01(std::uint64_t seed, Purpose purpose, std::uint64_t stream,
                 std::uint64_t step, std::uint32_t component, std::uint32_t level = 0);

// Standard normal via inverse CDF (no rejection; one variate per counter).
double standard_normal(std::uint64_t seed, Purpose purpose, std::uint64_t stream,
                       std::uint64_t step, std::uint32_t component, std::uint32_t level = 0);

} // namespace rng

// One Brownian path's increment source on a time grid: increment k has
// distribution N(0, h I_l). refined() halves the step by a midpoint bridge
// split; the two child increments of step k sum back to the parent increment
// bit-exactly.
class BrownianDriver {
  public:
    BrownianDriver(std::uint64_t seed, std::uint64_t stream_id, int noise_dim,
                   TimeGrid grid);

    BrownianDriver refined() const;

    // Fills out[0..l) with the step-k increment.
    void increments(std::uint64_t k, std::span<double> out) const;
    double increment(std::uint64_t k, int component) const;

    const TimeGrid& grid() const { return grid_; }
    int noise_dim() const { return l_; }
    std::uint32_t level() const { return level_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    // Splits a parent increment into two child increments (f1, f2) with
    // f1 + f2 == parent exactly in double arithmetic. xi is the bridge
    // perturbation, distributed N(0, var(parent)/4).
    static std::pair<double, double> split_increment(double parent, double xi);

  private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    int l_;
    TimeGrid grid_;
    std::uint32_t level_;   // number of refinements below the base grid
    TimeGrid base_grid_;    // grid the level-0 entropy is keyed on
};

} // namespace smallnoise
