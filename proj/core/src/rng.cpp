#include "smallnoise/rng.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "smallnoise/normal.hpp"

namespace smallnoise {

namespace rng {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// Counter layout. Fits (step, component, level, stream, purpose) into the
// 128-bit counter; the asserts document the supported ranges.
std::array<std::uint32_t, 4> make_counter(Purpose purpose, std::uint64_t stream,
                                          std::uint64_t step, std::uint32_t component,
                                          std::uint32_t level) {
    assert(step < (std::uint64_t{1} << 40));
    assert(component < (1u << 16));
    assert(level < 64u);
    assert(stream < (std::uint64_t{1} << 60));
    std::array<std::uint32_t, 4> ctr;
    ctr[0] = static_cast<std::uint32_t>(step);
    ctr[1] = static_cast<std::uint32_t>(step >> 32) |  // bits 0..7
             (component << 8) |                        // bits 8..23
             (level << 24);                            // bits 24..29
    ctr[2] = static_cast<std::uint32_t>(stream);
    ctr[3] = static_cast<std::uint32_t>(stream >> 32) |
             (static_cast<std::uint32_t>(purpose) << 28);
    return ctr;
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mul_hi_lo(kPhiloxM0, ctr[0], hi0, lo0);
        mul_hi_lo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

double uniform01(std::uint64_t seed, Purpose purpose, std::uint64_t stream,
                 std::uint64_t step, std::uint32_t component, std::uint32_t level) {
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                              static_cast<std::uint32_t>(seed >> 32)};
    const auto out = philox4x32(make_counter(purpose, stream, step, component, level), key);
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(out[0]) << 32) | static_cast<std::uint64_t>(out[1]);
    // 53 high bits, centered on the cell: strictly inside (0,1).
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(std::uint64_t seed, Purpose purpose, std::uint64_t stream,
                       std::uint64_t step, std::uint32_t component, std::uint32_t level) {
    return inverse_normal_cdf(uniform01(seed, purpose, stream, step, component, level));
}

} // namespace rng

BrownianDriver::BrownianDriver(std::uint64_t seed, std::uint64_t stream_id, int noise_dim,
                               TimeGrid grid)
    : seed_(seed), stream_(stream_id), l_(noise_dim), grid_(grid), level_(0), base_grid_(grid) {
    if (noise_dim < 1) throw std::invalid_argument("BrownianDriver: noise_dim must be >= 1");
}

BrownianDriver BrownianDriver::refined() const {
    BrownianDriver d = *this;
    d.grid_ = grid_.refined();
    d.level_ = level_ + 1;
    return d;
}

std::pair<double, double> BrownianDriver::split_increment(double parent, double xi) {
    // f1 ~ N(parent/2, var/4), f2 = parent - f1; independent N(0, h/2) pair.
    // The pair must sum back to the parent bit-exactly; nudge f2 by ulps
    // when the rounded sum misses, shrinking xi if no neighbour works.
    const double inf = std::numeric_limits<double>::infinity();
    while (true) {
        const double f1 = 0.5 * parent + xi;
        double f2 = parent - f1;
        for (int attempt = 0; attempt < 4; ++attempt) {
            const double s = f1 + f2;
            if (s == parent) return {f1, f2};
            f2 = std::nextafter(f2, (s > parent) ? -inf : inf);
        }
        if (xi == 0.0) {
            // Equal split: parent/2 + (parent - parent/2) is exact by Sterbenz.
            const double half = 0.5 * parent;
            return {half, parent - half};
        }
        xi *= 0.5;
    }
}

double BrownianDriver::increment(std::uint64_t k, int component) const {
    assert(component >= 0 && component < l_);
    const auto c = static_cast<std::uint32_t>(component);
    if (level_ == 0) {
        const double sqrt_h = std::sqrt(grid_.h());
        return sqrt_h * rng::standard_normal(seed_, rng::Purpose::brownian, stream_, k, c, 0);
    }
    // Recurse to the parent increment, then take this level's bridge split.
    BrownianDriver parent = *this;
    parent.grid_ = TimeGrid(grid_.T, grid_.n_steps / 2);
    parent.level_ = level_ - 1;
    const std::uint64_t pk = k / 2;
    const double dw = parent.increment(pk, component);
    const double half_sqrt_h = 0.5 * std::sqrt(parent.grid_.h());
    const double xi = half_sqrt_h *
        rng::standard_normal(seed_, rng::Purpose::brownian, stream_, pk, c, level_);
    const auto [f1, f2] = split_increment(dw, xi);
    return (k % 2 == 0) ? f1 : f2;
}

void BrownianDriver::increments(std::uint64_t k, std::span<double> out) const {
    assert(out.size() == static_cast<std::size_t>(l_));
    for (int c = 0; c < l_; ++c) out[c] = increment(k, c);
}

} // namespace smallnoise
