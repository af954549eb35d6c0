#include "smallnoise/sde.hpp"

#include <atomic>
#include <cassert>
#include <cmath>
#include <thread>

namespace smallnoise {

namespace {

constexpr double kBlowUpRadius = 1e12;

bool state_ok(std::span<const double> x) {
    double norm_sq = 0.0;
    for (double v : x) {
        if (!std::isfinite(v)) return false;
        norm_sq += v * v;
    }
    return norm_sq <= kBlowUpRadius * kBlowUpRadius;
}

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Shared stepper for every coupled variant. The eps == 0 variant skips the
// noise term entirely, which is what makes it arithmetic-identical to the
// plain Euler ODE path.
void integrate(const CoefficientField& field, std::span<const double> x0, const TimeGrid& grid,
               Scheme scheme, const BrownianDriver* driver, PathSet& out) {
    const int r = field.r();
    const int l = field.l();
    const std::size_t rs = static_cast<std::size_t>(r);
    const std::size_t E = out.eps.size();
    const std::uint64_t n = grid.n_steps;
    const double h = grid.h();

    out.grid = grid;
    out.r = r;
    out.values.resize(E);
    out.blow_up.assign(E, {});
    out.exit_time.assign(E, kNoExit);
    for (std::size_t e = 0; e < E; ++e) {
        out.values[e].resize((n + 1) * rs);
        for (std::size_t i = 0; i < rs; ++i) out.values[e][i] = x0[i];
    }

    const double N = out.truncation_radius;
    const bool track_exit = (N != kNoExit);
    std::vector<double> bbuf(rs), sbuf(rs * static_cast<std::size_t>(l)),
        dw(static_cast<std::size_t>(l));
    std::vector<char> dead(E, 0);

    for (std::size_t e = 0; e < E; ++e) {
        if (!state_ok(out.state(e, 0))) {
            out.blow_up[e] = {true, 0};
            dead[e] = 1;
        }
        if (track_exit && norm(out.state(e, 0)) > N) out.exit_time[e] = grid.t(0);
    }

    bool need_noise = false;
    for (std::size_t e = 0; e < E; ++e) need_noise |= (out.eps[e] != 0.0);

    for (std::uint64_t k = 0; k < n; ++k) {
        const double t = grid.t(k);
        if (need_noise && driver) driver->increments(k, dw);
        for (std::size_t e = 0; e < E; ++e) {
            double* cur = out.values[e].data() + k * rs;
            double* nxt = cur + rs;
            if (dead[e]) {
                for (std::size_t i = 0; i < rs; ++i) nxt[i] = cur[i];
                continue;
            }
            std::span<const double> x(cur, rs);
            const double eps = out.eps[e];

            field.drift(t, x, bbuf);
            if (scheme == Scheme::tamed) {
                const double denom = 1.0 + h * norm(bbuf);
                for (std::size_t i = 0; i < rs; ++i) nxt[i] = cur[i] + (h * bbuf[i]) / denom;
            } else {
                for (std::size_t i = 0; i < rs; ++i) nxt[i] = cur[i] + h * bbuf[i];
            }
            if (eps != 0.0) {
                field.diffusion(t, x, sbuf);
                for (std::size_t i = 0; i < rs; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < l; ++j)
                        acc += sbuf[i * static_cast<std::size_t>(l) +
                                    static_cast<std::size_t>(j)] *
                               dw[static_cast<std::size_t>(j)];
                    nxt[i] += eps * acc;
                }
            }
            if (!state_ok({nxt, rs})) {
                out.blow_up[e] = {true, k + 1};
                dead[e] = 1;
                for (std::size_t i = 0; i < rs; ++i) nxt[i] = cur[i]; // freeze
                continue;
            }
            if (out.exit_time[e] == kNoExit && norm({nxt, rs}) > N)
                out.exit_time[e] = grid.t(k + 1);
        }
    }
}

Path extract_single(PathSet&& set) {
    Path p;
    p.grid = set.grid;
    p.r = set.r;
    p.values = std::move(set.values[0]);
    p.blow_up = set.blow_up[0];
    p.exit_time = set.exit_time[0];
    p.radius = set.truncation_radius;
    return p;
}

Path run_single(const CoefficientField& field, std::span<const double> x0, const TimeGrid& grid,
                double eps, const BrownianDriver* driver, Scheme scheme,
                double truncation_radius = kNoExit) {
    PathSet set;
    set.eps = {eps};
    set.truncation_radius = truncation_radius;
    integrate(field, x0, grid, scheme, driver, set);
    return extract_single(std::move(set));
}

Path solve_rk4(const CoefficientField& field, std::span<const double> x0, const TimeGrid& grid) {
    const std::size_t rs = static_cast<std::size_t>(field.r());
    const std::uint64_t n = grid.n_steps;
    const double h = grid.h();

    Path p;
    p.grid = grid;
    p.r = field.r();
    p.values.resize((n + 1) * rs);
    for (std::size_t i = 0; i < rs; ++i) p.values[i] = x0[i];

    std::vector<double> k1(rs), k2(rs), k3(rs), k4(rs), tmp(rs);
    bool dead = !state_ok(p.state(0));
    if (dead) p.blow_up = {true, 0};

    for (std::uint64_t k = 0; k < n; ++k) {
        const double t = grid.t(k);
        const double* cur = p.values.data() + k * rs;
        double* nxt = p.values.data() + (k + 1) * rs;
        if (dead) {
            for (std::size_t i = 0; i < rs; ++i) nxt[i] = cur[i];
            continue;
        }
        std::span<const double> x(cur, rs);
        field.drift(t, x, k1);
        for (std::size_t i = 0; i < rs; ++i) tmp[i] = cur[i] + 0.5 * h * k1[i];
        field.drift(t + 0.5 * h, tmp, k2);
        for (std::size_t i = 0; i < rs; ++i) tmp[i] = cur[i] + 0.5 * h * k2[i];
        field.drift(t + 0.5 * h, tmp, k3);
        for (std::size_t i = 0; i < rs; ++i) tmp[i] = cur[i] + h * k3[i];
        field.drift(t + h, tmp, k4);
        for (std::size_t i = 0; i < rs; ++i)
            nxt[i] = cur[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!state_ok({nxt, rs})) {
            p.blow_up = {true, k + 1};
            dead = true;
            for (std::size_t i = 0; i < rs; ++i) nxt[i] = cur[i];
        }
    }
    return p;
}

} // namespace

std::string to_string(Scheme s) { return s == Scheme::euler ? "euler" : "tamed"; }
std::string to_string(OdeMethod m) { return m == OdeMethod::euler ? "euler" : "rk4"; }

double Path::exit_time_for(double N) const {
    for (std::uint64_t k = 0; k <= grid.n_steps; ++k) {
        double s = 0.0;
        for (double v : state(k)) s += v * v;
        if (std::sqrt(s) > N) return grid.t(k);
    }
    return kNoExit;
}

Path solve_ode(const CoefficientField& field, std::span<const double> x0, const TimeGrid& grid,
               OdeMethod method) {
    if (method == OdeMethod::rk4) return solve_rk4(field, x0, grid);
    return run_single(field, x0, grid, 0.0, nullptr, Scheme::euler);
}

Path euler_maruyama(const CoefficientField& field, std::span<const double> x0,
                    const TimeGrid& grid, double eps, const BrownianDriver& driver) {
    if (eps < 0.0) throw ConfigurationError("euler_maruyama: eps must be >= 0");
    if (driver.grid() != grid) throw ConfigurationError("euler_maruyama: driver grid mismatch");
    return run_single(field, x0, grid, eps, &driver, Scheme::euler);
}

Path step_tamed(const CoefficientField& field, std::span<const double> x0, const TimeGrid& grid,
                double eps, const BrownianDriver& driver) {
    if (eps < 0.0) throw ConfigurationError("step_tamed: eps must be >= 0");
    if (driver.grid() != grid) throw ConfigurationError("step_tamed: driver grid mismatch");
    return run_single(field, x0, grid, eps, &driver, Scheme::tamed);
}

Path simulate_truncated(const CoefficientField& field, std::span<const double> x0,
                        const TimeGrid& grid, double eps, const BrownianDriver& driver,
                        const TruncationPolicy& policy) {
    const double x0_norm = norm(x0);

    if (const auto* fixed = std::get_if<FixedRadius>(&policy)) {
        if (!(fixed->N > 0.0)) throw ConfigurationError("simulate_truncated: N must be > 0");
        Path p = run_single(truncate(field, fixed->N), x0, grid, eps, &driver, Scheme::euler,
                            fixed->N);
        p.escaped = p.exit_time != kNoExit;
        p.retries = {{fixed->N, p.exit_time}};
        return p;
    }

    const auto& doubling = std::get<DoublingRadius>(policy);
    if (!(doubling.N0 > x0_norm))
        throw ConfigurationError("simulate_truncated: N0 must exceed |x0|");
    const double cap = doubling.cap_factor * doubling.N0;

    std::vector<TruncationAttempt> retries;
    double N = doubling.N0;
    while (true) {
        Path p = run_single(truncate(field, N), x0, grid, eps, &driver, Scheme::euler, N);
        retries.push_back({N, p.exit_time});
        if (p.exit_time == kNoExit) {
            p.escaped = false;
            p.retries = std::move(retries);
            return p;
        }
        if (2.0 * N > cap) {
            // Cap exceeded: an escape event, contributes to the empirical
            // escape probability.
            p.escaped = true;
            p.retries = std::move(retries);
            return p;
        }
        N *= 2.0;
    }
}

void sample_x0(const X0Spec& spec, int r, std::uint64_t seed, std::uint64_t path_id,
               std::span<double> out) {
    if (const auto* fixed = std::get_if<std::vector<double>>(&spec)) {
        if (fixed->size() != out.size())
            throw ConfigurationError("x0 dimension mismatch");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*fixed)[i];
        return;
    }
    if (const auto* normal = std::get_if<X0Normal>(&spec)) {
        if (normal->mean.size() != out.size() || normal->stddev.size() != out.size())
            throw ConfigurationError("x0 sampler dimension mismatch");
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double z = rng::standard_normal(seed, rng::Purpose::initial_state, path_id, 0,
                                                  static_cast<std::uint32_t>(i));
            out[i] = normal->mean[i] + normal->stddev[i] * z;
        }
        return;
    }
    const auto& ball = std::get<X0UniformBall>(spec);
    double d2 = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = rng::standard_normal(seed, rng::Purpose::initial_state, path_id, 0,
                                      static_cast<std::uint32_t>(i));
        d2 += out[i] * out[i];
    }
    const double u = rng::uniform01(seed, rng::Purpose::initial_state, path_id, 1,
                                    static_cast<std::uint32_t>(r));
    const double radius = ball.radius * std::pow(u, 1.0 / r);
    const double scale = (d2 > 0.0) ? radius / std::sqrt(d2) : 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= scale;
}

std::size_t block_of(std::uint64_t path_id, std::uint64_t paths, std::size_t blocks) {
    const std::size_t B = std::min<std::size_t>(blocks, paths);
    return static_cast<std::size_t>((static_cast<unsigned __int128>(path_id) * B) / paths);
}

EnsembleStats simulate_ensemble(const CoefficientField& field, const EnsembleSpec& spec,
                                const PathVisitor& visit) {
    if (spec.paths < 1) throw ConfigurationError("simulate_ensemble: paths must be >= 1");
    if (spec.eps.empty()) throw ConfigurationError("simulate_ensemble: eps list empty");
    for (double e : spec.eps)
        if (e < 0.0) throw ConfigurationError("simulate_ensemble: eps must be >= 0");

    const CoefficientField* sim_field = &field;
    CoefficientField truncated_field;
    double radius = kNoExit;
    if (spec.truncation_radius) {
        radius = *spec.truncation_radius;
        truncated_field = truncate(field, radius);
        sim_field = &truncated_field;
    }

    const std::size_t B = std::min<std::size_t>(std::max<std::size_t>(spec.blocks, 1),
                                                static_cast<std::size_t>(spec.paths));
    int threads = spec.threads;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(B)));

    std::vector<std::uint64_t> block_blowups(B, 0), block_escapes(B, 0);
    std::atomic<std::size_t> next_block{0};

    auto worker = [&]() {
        PathSet set;
        std::vector<double> x0(static_cast<std::size_t>(field.r()));
        while (true) {
            const std::size_t b = next_block.fetch_add(1);
            if (b >= B) break;
            const std::uint64_t lo = spec.paths * b / B;
            const std::uint64_t hi = spec.paths * (b + 1) / B;
            for (std::uint64_t id = lo; id < hi; ++id) {
                sample_x0(spec.x0, field.r(), spec.seed, id, x0);
                BrownianDriver driver(spec.seed, id, field.l(), spec.grid);
                set.eps = spec.eps;
                set.truncation_radius = radius;
                integrate(*sim_field, x0, spec.grid, spec.scheme, &driver, set);
                for (std::size_t e = 0; e < set.eps.size(); ++e) {
                    if (set.blow_up[e].blew_up) ++block_blowups[b];
                    if (set.exit_time[e] != kNoExit) ++block_escapes[b];
                }
                if (visit) visit(b, id, set);
            }
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    EnsembleStats stats;
    stats.paths = spec.paths;
    stats.seed = spec.seed;
    stats.field_hash = field.description_hash();
    stats.scheme = to_string(spec.scheme);
    for (std::size_t b = 0; b < B; ++b) {
        stats.blow_ups += block_blowups[b];
        stats.escapes += block_escapes[b];
    }
    return stats;
}

} // namespace smallnoise
