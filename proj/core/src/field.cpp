#include "smallnoise/field.hpp"

#include <cmath>
#include <sstream>

namespace smallnoise {

CoefficientField::CoefficientField(int r, int l, double horizon, DriftFn drift,
                                   DiffusionFn diffusion, std::string description)
    : r_(r), l_(l), horizon_(horizon), drift_(std::move(drift)),
      diffusion_(std::move(diffusion)), description_(std::move(description)) {
    if (r_ < 1) throw ConfigurationError("CoefficientField: r must be >= 1");
    if (l_ < 1) throw ConfigurationError("CoefficientField: l must be >= 1");
    if (!(horizon_ > 0.0)) throw ConfigurationError("CoefficientField: horizon must be > 0");
}

void CoefficientField::drift(double t, std::span<const double> x, std::span<double> out) const {
    if (x.size() != static_cast<std::size_t>(r_) || out.size() != static_cast<std::size_t>(r_))
        throw ConfigurationError("drift: dimension mismatch");
    drift_(t, x, out);
}

void CoefficientField::diffusion(double t, std::span<const double> x,
                                 std::span<double> out) const {
    if (x.size() != static_cast<std::size_t>(r_) ||
        out.size() != static_cast<std::size_t>(r_) * static_cast<std::size_t>(l_))
        throw ConfigurationError("diffusion: dimension mismatch");
    diffusion_(t, x, out);
}

CoefficientField CoefficientField::from_expressions(int r, int l, double horizon,
                                                    const std::vector<std::string>& drift,
                                                    const std::vector<std::string>& diffusion) {
    if (drift.size() != static_cast<std::size_t>(r))
        throw ConfigurationError("drift expression count must equal r");
    if (diffusion.size() != static_cast<std::size_t>(r) * static_cast<std::size_t>(l))
        throw ConfigurationError("diffusion expression count must equal r*l");
    auto b = std::make_shared<expr::VectorExpr>(expr::parse_vector(drift, r, 1));
    auto s = std::make_shared<expr::VectorExpr>(expr::parse_vector(diffusion, r, l));

    std::ostringstream desc;
    desc << "expr r=" << r << " l=" << l << " b=[";
    for (const auto& e : b->rows) desc << e.pretty() << ";";
    desc << "] sigma=[";
    for (const auto& e : s->rows) desc << e.pretty() << ";";
    desc << "]";

    return CoefficientField(
        r, l, horizon,
        [b](double t, std::span<const double> x, std::span<double> out) {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = b->rows[i].eval(t, x);
        },
        [s](double t, std::span<const double> x, std::span<double> out) {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = s->rows[i].eval(t, x);
        },
        desc.str());
}

namespace detail {

void project_to_ball(std::span<const double> x, double radius, std::span<double> out) {
    double norm_sq = 0.0;
    for (double v : x) norm_sq += v * v;
    const double norm = std::sqrt(norm_sq);
    if (norm <= radius) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
        return;
    }
    const double scale = radius / norm;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * scale;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace detail

std::uint64_t CoefficientField::description_hash() const {
    return detail::fnv1a(description_);
}

CoefficientField truncate(const CoefficientField& base, double radius) {
    if (!(radius > 0.0)) throw ConfigurationError("truncate: radius must be > 0");
    const int r = base.r();
    // Inside the ball the projection is the identity on the same buffer, so
    // evaluations agree with the base bit-for-bit.
    auto project_then = [base, radius, r](auto eval) {
        return [base, radius, r, eval](double t, std::span<const double> x,
                                       std::span<double> out) {
            double norm_sq = 0.0;
            for (double v : x) norm_sq += v * v;
            if (!(std::sqrt(norm_sq) > radius)) {
                eval(base, t, x, out);
                return;
            }
            std::vector<double> proj(static_cast<std::size_t>(r));
            detail::project_to_ball(x, radius, proj);
            eval(base, t, std::span<const double>(proj), out);
        };
    };
    std::ostringstream desc;
    desc << "truncate(N=" << radius << ") of " << base.description();
    return CoefficientField(
        base.r(), base.l(), base.horizon(),
        project_then([](const CoefficientField& f, double t, std::span<const double> x,
                        std::span<double> out) { f.drift(t, x, out); }),
        project_then([](const CoefficientField& f, double t, std::span<const double> x,
                        std::span<double> out) { f.diffusion(t, x, out); }),
        desc.str());
}

void diffusion_matrix(const CoefficientField& field, double t, std::span<const double> x,
                      std::span<double> out, std::span<double> sigma_scratch) {
    const std::size_t r = static_cast<std::size_t>(field.r());
    const std::size_t l = static_cast<std::size_t>(field.l());
    if (out.size() != r * r || sigma_scratch.size() != r * l)
        throw ConfigurationError("diffusion_matrix: dimension mismatch");
    field.diffusion(t, x, sigma_scratch);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < l; ++k)
                acc += sigma_scratch[i * l + k] * sigma_scratch[j * l + k];
            out[i * r + j] = acc;
            out[j * r + i] = acc; // symmetric by construction
        }
    }
}

std::vector<double> diffusion_matrix(const CoefficientField& field, double t,
                                     std::span<const double> x) {
    const std::size_t r = static_cast<std::size_t>(field.r());
    std::vector<double> out(r * r);
    std::vector<double> scratch(r * static_cast<std::size_t>(field.l()));
    diffusion_matrix(field, t, x, out, scratch);
    return out;
}

ScalarField::ScalarField(int r, Fn c, Fn g, Fn f, double c_bound, double g_bound, double f_bound)
    : r_(r), c_(std::move(c)), g_(std::move(g)), f_(std::move(f)), c_bound_(c_bound),
      g_bound_(g_bound), f_bound_(f_bound) {
    if (r_ < 1) throw ConfigurationError("ScalarField: r must be >= 1");
    if (!(c_bound_ >= 0.0) || std::isinf(c_bound_))
        throw ConfigurationError("ScalarField: c must be declared bounded (finite bound)");
    if (!(g_bound_ >= 0.0) || !(f_bound_ >= 0.0))
        throw ConfigurationError("ScalarField: bounds must be nonnegative");
}

ScalarField ScalarField::from_expressions(int r, const std::string& c, const std::string& g,
                                          const std::string& f, double c_bound, double g_bound,
                                          double f_bound) {
    auto ce = std::make_shared<expr::Expr>(expr::parse(c, r));
    auto ge = std::make_shared<expr::Expr>(expr::parse(g, r));
    auto fe = std::make_shared<expr::Expr>(expr::parse(f, r));
    return ScalarField(
        r, [ce](std::span<const double> x) { return ce->eval(0.0, x); },
        [ge](std::span<const double> x) { return ge->eval(0.0, x); },
        [fe](std::span<const double> x) { return fe->eval(0.0, x); }, c_bound, g_bound, f_bound);
}

void ScalarField::spot_check_c_bound(std::span<const double> flat_points) const {
    const std::size_t r = static_cast<std::size_t>(r_);
    for (std::size_t off = 0; off + r <= flat_points.size(); off += r) {
        std::span<const double> x = flat_points.subspan(off, r);
        const double v = c_(x);
        if (!std::isfinite(v) || std::abs(v) > c_bound_) {
            std::ostringstream msg;
            msg << "declared bound |c| <= " << c_bound_ << " violated: c = " << v << " at x = (";
            for (std::size_t i = 0; i < r; ++i) msg << (i ? "," : "") << x[i];
            msg << ")";
            throw CoefficientError(msg.str());
        }
    }
}

} // namespace smallnoise
