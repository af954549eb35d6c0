#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smallnoise/field.hpp"

namespace smallnoise {

struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structural inequalities on (b, sigma) that the convergence theorems
// assume. Validators certify them on finite point clouds only; `value` has
// per-kind units:
//   linear_growth             |b|^2 + |sigma|^2 <= value (1 + |x|^2)   value = K_T^2
//   dissipativity             <x,b> + |sigma|^2 <= value (1 + |x|^2)   value = K_T^2
//   dissipativity_differences <x-y, b(t,x)-b(t,y)> <= value (1+|x-y|^2) value = K_T^2
//   local_lipschitz           |db| + |dsigma| <= value |x-y|           value = L_{N,T}
//   ellipticity               eigenvalues of sigma sigma* in [value^-2, value^2]
enum class ConditionKind {
    linear_growth,
    local_lipschitz,
    dissipativity,
    dissipativity_differences,
    ellipticity,
};

std::string to_string(ConditionKind kind);

struct Witness {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> y; // empty for single-point kinds
    double lhs = 0.0;
    double rhs = 0.0;
};

struct ConditionEstimate {
    ConditionKind kind;
    double value = 0.0;           // certified (or candidate) constant, per-kind units
    std::size_t sample_count = 0;
    std::size_t violation_count = 0;
    Witness worst_witness;

    bool certified() const { return violation_count == 0; }
};

// Point-cloud specification: a uniform grid in t crossed with quasi-random
// (Kronecker sequence) samples in the radius-R ball, deterministically
// scrambled by `seed`. Pair kinds draw the second point from a disjoint
// scramble of the same sequence.
struct SamplerSpec {
    std::size_t t_points = 33;
    std::size_t x_points = 4096;
    double radius = 10.0;
    std::uint64_t seed = 0;
};

// Generates the x-cloud of a SamplerSpec as a flat (x_points * r) array.
std::vector<double> sample_ball(const SamplerSpec& spec, int r, std::uint32_t scramble_tag = 0);

// Certifies `kind` over the sample. Without a candidate, returns the
// smallest constant that certifies the inequality on every sampled point
// (violation_count = 0 by construction). With a candidate, counts the
// points violating it and reports the worst one.
ConditionEstimate estimate_condition(const CoefficientField& field, ConditionKind kind,
                                     const SamplerSpec& sampler,
                                     std::optional<double> candidate_constant = std::nullopt);

// Uniform-ellipticity check: all eigenvalues of sigma sigma* within
// [k^-2, k^2] on the sample. Requires k >= 1.
ConditionEstimate check_ellipticity(const CoefficientField& field, const SamplerSpec& sampler,
                                    double k);

namespace detail {
// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n);
} // namespace detail

} // namespace smallnoise
