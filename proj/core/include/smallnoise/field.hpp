#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "smallnoise/expr.hpp"

namespace smallnoise {

struct ConfigurationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CoefficientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Drift/diffusion pair (b, sigma) on [0,T] x R^r with values in R^r and
// R^{r x l}. Evaluation targets are caller-provided buffers; diffusion is
// written row-major. Instances are immutable after construction and safe to
// share across threads.
class CoefficientField {
  public:
    using DriftFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
    using DiffusionFn =
        std::function<void(double t, std::span<const double> x, std::span<double> out)>;

    CoefficientField() = default;
    CoefficientField(int r, int l, double horizon, DriftFn drift, DiffusionFn diffusion,
                     std::string description = {});

    // Builds a field from expression strings (drift: r entries, diffusion:
    // r*l entries row-major).
    static CoefficientField from_expressions(int r, int l, double horizon,
                                             const std::vector<std::string>& drift,
                                             const std::vector<std::string>& diffusion);

    void drift(double t, std::span<const double> x, std::span<double> out) const;
    void diffusion(double t, std::span<const double> x, std::span<double> out) const;

    int r() const { return r_; }
    int l() const { return l_; }
    double horizon() const { return horizon_; }
    const std::string& description() const { return description_; }

    // FNV-1a hash of the description; tags ensembles with the field they
    // were generated from.
    std::uint64_t description_hash() const;

  private:
    int r_ = 0;
    int l_ = 0;
    double horizon_ = 0.0;
    DriftFn drift_;
    DiffusionFn diffusion_;
    std::string description_;
};

// Field frozen at the radius-N sphere: inside the ball it evaluates exactly
// like the base; outside, the state is replaced by its radial projection
// N*x/|x| before evaluation.
CoefficientField truncate(const CoefficientField& base, double radius);

// sigma(t,x) sigma*(t,x), an r x r symmetric positive semidefinite matrix
// (row-major). Throws ConfigurationError on dimension mismatch.
std::vector<double> diffusion_matrix(const CoefficientField& field, double t,
                                     std::span<const double> x);
void diffusion_matrix(const CoefficientField& field, double t, std::span<const double> x,
                      std::span<double> out, std::span<double> sigma_scratch);

// Scalar data (c, g, f) of the Cauchy problem, with declared sup-norm
// bounds. The potential c must be declared bounded; bounds for f and g may
// be infinity when unknown (the a-priori sanity gate is then skipped).
class ScalarField {
  public:
    using Fn = std::function<double(std::span<const double> x)>;

    ScalarField() = default;
    ScalarField(int r, Fn c, Fn g, Fn f, double c_bound, double g_bound, double f_bound);

    static ScalarField from_expressions(int r, const std::string& c, const std::string& g,
                                        const std::string& f, double c_bound, double g_bound,
                                        double f_bound);

    double c(std::span<const double> x) const { return c_(x); }
    double g(std::span<const double> x) const { return g_(x); }
    double f(std::span<const double> x) const { return f_(x); }

    double c_bound() const { return c_bound_; }
    double g_bound() const { return g_bound_; }
    double f_bound() const { return f_bound_; }
    int r() const { return r_; }

    // Spot-checks |c| <= c_bound on a point sample; throws CoefficientError
    // with the witness point on violation.
    void spot_check_c_bound(std::span<const double> flat_points) const;

  private:
    int r_ = 0;
    Fn c_, g_, f_;
    double c_bound_ = 0.0;
    double g_bound_ = 0.0;
    double f_bound_ = 0.0;
};

namespace detail {
// Radial projection onto the closed ball of radius N; identity inside.
void project_to_ball(std::span<const double> x, double radius, std::span<double> out);
std::uint64_t fnv1a(std::string_view s);
} // namespace detail

} // namespace smallnoise
