#pragma once

#include <functional>
#include <optional>
#include <variant>

#include "smallnoise/field.hpp"
#include "smallnoise/path.hpp"
#include "smallnoise/rng.hpp"

namespace smallnoise {

enum class OdeMethod { euler, rk4 };

// euler: X_{k+1} = X_k + h b + eps sigma dW (coefficients at the left node).
// tamed: drift increment h b / (1 + h |b|); same driver semantics.
enum class Scheme { euler, tamed };

std::string to_string(Scheme s);
std::string to_string(OdeMethod m);

// Unperturbed system dx/dt = b(t,x). The euler mode shares the perturbed
// stepper's float operations, so euler_maruyama with eps = 0 reproduces it
// bit-for-bit; rk4 is the high-accuracy reference.
Path solve_ode(const CoefficientField& field, std::span<const double> x0, const TimeGrid& grid,
               OdeMethod method);

Path euler_maruyama(const CoefficientField& field, std::span<const double> x0,
                    const TimeGrid& grid, double eps, const BrownianDriver& driver);

Path step_tamed(const CoefficientField& field, std::span<const double> x0, const TimeGrid& grid,
                double eps, const BrownianDriver& driver);

struct FixedRadius {
    double N = 1.0;
};
struct DoublingRadius {
    double N0 = 1.0;
    double cap_factor = 1048576.0; // N_max = cap_factor * N0
};
using TruncationPolicy = std::variant<FixedRadius, DoublingRadius>;

// Integrates the radius-N truncated field, recording tau_N. Under the
// doubling policy the same driver is re-run with N doubled until the path
// stays inside the ball or the cap is exceeded (an escape event, not an
// error). Pasting: the accepted path is unaffected by the radius used, up
// to its exit time.
Path simulate_truncated(const CoefficientField& field, std::span<const double> x0,
                        const TimeGrid& grid, double eps, const BrownianDriver& driver,
                        const TruncationPolicy& policy);

// Deterministic initial state or a per-path sampler with its own RNG stream
// (independent of every Brownian stream by construction).
struct X0Normal {
    std::vector<double> mean;
    std::vector<double> stddev;
};
struct X0UniformBall {
    double radius = 1.0;
};
using X0Spec = std::variant<std::vector<double>, X0Normal, X0UniformBall>;

void sample_x0(const X0Spec& spec, int r, std::uint64_t seed, std::uint64_t path_id,
               std::span<double> out);

struct EnsembleSpec {
    std::vector<double> eps;     // one coupled variant per entry (CRN)
    X0Spec x0;
    TimeGrid grid;
    std::uint64_t paths = 1;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::euler;
    std::optional<double> truncation_radius; // fixed-N truncated run
    int threads = 0;                         // 0: hardware concurrency
    std::size_t blocks = 32;
};

// Visits every simulated path. Calls within one block arrive in path order
// from a single thread; distinct blocks may run concurrently. Results must
// be written to per-path or per-block state so that ensemble statistics are
// a pure function of (spec, seed) under any thread count.
using PathVisitor =
    std::function<void(std::size_t block, std::uint64_t path_id, const PathSet& paths)>;

EnsembleStats simulate_ensemble(const CoefficientField& field, const EnsembleSpec& spec,
                                const PathVisitor& visit);

// Block boundaries used by simulate_ensemble and the jackknife.
std::size_t block_of(std::uint64_t path_id, std::uint64_t paths, std::size_t blocks);

} // namespace smallnoise
