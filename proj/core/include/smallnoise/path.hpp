#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "smallnoise/grid.hpp"

namespace smallnoise {

inline constexpr double kNoExit = std::numeric_limits<double>::infinity();

// Blow-up is a recorded outcome, never an exception: expected for stiff
// dissipative drifts under plain Euler at coarse steps.
struct BlowUpRecord {
    bool blew_up = false;
    std::uint64_t first_bad_step = 0;
};

struct TruncationAttempt {
    double radius = 0.0;
    double exit_time = kNoExit;
};

// One trajectory on a grid. values is (n_steps+1) x r row-major with
// values[0..r) = x0. After a blow-up the state is frozen at the last finite
// value and the step recorded.
struct Path {
    TimeGrid grid;
    int r = 0;
    std::vector<double> values;
    BlowUpRecord blow_up;

    // Truncated runs: radius actually used, first grid time the running sup
    // exceeded it (kNoExit if never), and whether the doubling cap was hit.
    double radius = kNoExit;
    double exit_time = kNoExit;
    bool escaped = false;
    std::vector<TruncationAttempt> retries;

    std::span<const double> state(std::uint64_t k) const {
        return {values.data() + k * static_cast<std::size_t>(r), static_cast<std::size_t>(r)};
    }

    // First grid time with sup_{s<=t} |X(s)| > N, recomputed from values.
    double exit_time_for(double N) const;
};

// Coupled trajectories driven by the same Brownian increments, one per eps
// (common random numbers). Layout matches Path per variant.
struct PathSet {
    TimeGrid grid;
    int r = 0;
    std::vector<double> eps;
    std::vector<std::vector<double>> values; // [variant][(n+1)*r]
    std::vector<BlowUpRecord> blow_up;
    std::vector<double> exit_time;           // vs. the truncation radius, if any
    double truncation_radius = kNoExit;

    std::span<const double> state(std::size_t variant, std::uint64_t k) const {
        return {values[variant].data() + k * static_cast<std::size_t>(r),
                static_cast<std::size_t>(r)};
    }
};

// Streaming summary of an ensemble run.
struct EnsembleStats {
    std::uint64_t paths = 0;
    std::uint64_t blow_ups = 0;   // summed over variants
    std::uint64_t escapes = 0;
    std::uint64_t seed = 0;
    std::uint64_t field_hash = 0;
    std::string scheme;
};

} // namespace smallnoise
