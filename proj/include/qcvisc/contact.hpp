#pragma once
// Upper contact points and jets: grid certificates for the local contact
// inequality, global contact sets C(w, B, A), Monte-Carlo estimates of their
// measure, and witness sequences x_j -> x0 of twice-differentiable contact
// points.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "qcvisc/geometry.hpp"
#include "qcvisc/parallel.hpp"
#include "qcvisc/quasiconvex.hpp"

namespace qcvisc {

struct ContactQuery {
    Vector x0;
    Vector p;
    SymMatrix A;
    double rho = 0.5;
    std::size_t grid_per_axis = 41;
    double strict_margin = 0.0;  // > 0 selects the strict variant
    double tol = 1e-10;          // relative to 1 + |w(x0)|
    std::size_t near_probe_count = 64;
};

struct ContactResult {
    bool holds = false;
    double worst_violation = -std::numeric_limits<double>::infinity();
    Vector worst_point;
    std::size_t probes = 0;
};

namespace detail {

inline void validate(const ContactQuery& q) {
    require_same_dim(q.p.size(), q.x0.size(), "ContactQuery");
    require_same_dim(q.A.dim(), q.x0.size(), "ContactQuery");
    if (!(q.rho > 0.0)) throw UsageError("ContactQuery: rho must be positive");
    if (q.grid_per_axis < 3) throw UsageError("ContactQuery: grid_per_axis must be >= 3");
    if (q.strict_margin < 0.0) throw UsageError("ContactQuery: strict_margin must be non-negative");
}

// w(y) - [w(x) + <q, y-x> + 1/2 <A(y-x), y-x> - margin |y-x|^2]
template <QuasiConvexFunction W>
double contact_violation(const W& w, std::span<const double> x, double wx, std::span<const double> q,
                         const SymMatrix& A, double margin, std::span<const double> y, Vector& scratch) {
    scratch.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) scratch[i] = y[i] - x[i];
    const double d2 = dot(scratch, scratch);
    const double rhs = wx + dot(q, scratch) + 0.5 * A.quad_form(scratch) - margin * d2;
    return w.eval(y) - rhs;
}

}  // namespace detail

/// Checks w(y) <= w(x0) + <p, y-x0> + 1/2 <A(y-x0), y-x0> - margin |y-x0|^2
/// (+ tol) at every probe y of B_rho(x0). A violation is exact; a pass is a
/// certificate on the probe set only.
template <QuasiConvexFunction W>
ContactResult is_upper_contact_jet(const W& w, const ContactQuery& q) {
    detail::validate(q);
    require_same_dim(w.dim(), q.x0.size(), "is_upper_contact_jet");
    std::vector<Vector> probes = ball_probes(q.x0, q.rho, q.grid_per_axis);
    for (auto& y : near_probes(q.x0, q.rho, q.near_probe_count)) probes.push_back(std::move(y));

    const double wx = w.eval(q.x0);
    ContactResult res;
    res.probes = probes.size();
    Vector scratch;
    for (const auto& y : probes) {
        const double v = detail::contact_violation(w, q.x0, wx, q.p, q.A, q.strict_margin, y, scratch);
        if (v > res.worst_violation) {
            res.worst_violation = v;
            res.worst_point = y;
        }
    }
    res.holds = res.worst_violation <= q.tol * (1.0 + std::abs(wx));
    return res;
}

/// w + psi. Quadratic shifts keep the max-of-quadratics class closed.
inline MaxQuadFunction shift_by_quadratic(const MaxQuadFunction& w, const Quadratic& psi) {
    std::vector<Quadratic> out;
    out.reserve(w.pieces().size());
    for (const auto& q : w.pieces()) out.push_back(q + psi);
    return MaxQuadFunction(std::move(out));
}

/// The jet map (p, A) -> (p + D psi(x0), A + D^2 psi) matching shift_by_quadratic.
inline ContactQuery shift_query(const ContactQuery& q, const Quadratic& psi) {
    ContactQuery out = q;
    out.p = q.p + psi.gradient(q.x0);
    out.A = q.A + psi.A;
    return out;
}

/// Core of the global test: with q = Dw(x) (required to exist), checks the
/// contact inequality of type A at every probe.
template <QuasiConvexFunction W>
bool global_contact_test_probes(const W& w, const Vector& x, const SymMatrix& A,
                                std::span<const Vector> probes, double tol = 1e-10) {
    const auto jet = w.jet_at(x);
    if (!jet) return false;
    const double lim = tol * (1.0 + std::abs(jet->r));
    Vector scratch;
    for (const auto& y : probes) {
        if (detail::contact_violation(w, x, jet->r, jet->p, A, 0.0, y, scratch) > lim) return false;
    }
    return true;
}

namespace detail {

template <QuasiConvexFunction W>
bool global_contact_with_near(const W& w, const Vector& x, const SymMatrix& A, std::span<const Vector> probes,
                              double near_radius, const std::function<bool(const Vector&)>& inside, double tol) {
    if (!global_contact_test_probes(w, x, A, probes, tol)) return false;
    std::vector<Vector> local;
    for (auto& y : near_probes(x, near_radius))
        if (inside(y)) local.push_back(std::move(y));
    return global_contact_test_probes(w, x, A, local, tol);
}

}  // namespace detail

/// x in C(w, K, A) tested on the box grid plus near probes around x.
template <QuasiConvexFunction W>
bool global_contact_test(const W& w, const Vector& x, const SymMatrix& A, const Box& domain,
                         std::size_t grid_per_axis, double tol = 1e-10) {
    require_same_dim(x.size(), domain.dim(), "global_contact_test");
    std::vector<Vector> probes;
    for (auto& g : box_grid(domain, grid_per_axis)) probes.push_back(std::move(g.x));
    return detail::global_contact_with_near(
        w, x, A, probes, 0.5 * domain.min_side(), [&](const Vector& y) { return domain.contains(y); }, tol);
}

/// x in C(w, B_rho(center), A) tested on the ball probe set plus near probes.
template <QuasiConvexFunction W>
bool global_contact_test_ball(const W& w, const Vector& x, const SymMatrix& A, const Vector& center, double rho,
                              std::span<const Vector> ball_probe_set, double tol = 1e-10) {
    return detail::global_contact_with_near(
        w, x, A, ball_probe_set, rho, [&](const Vector& y) { return norm(y - center) <= rho; }, tol);
}

struct ContactSetEstimate {
    double fraction = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_hits = 0;
    std::vector<Vector> witnesses;  // lowest-index contact points, capped
    double rho = 0.0;
};

struct MeasureOptions {
    std::size_t grid_per_axis = 0;  // 0 selects default_ball_grid(n)
    double tol = 1e-10;
    unsigned threads = 0;
    std::size_t max_witnesses = 32;
};

/// Monte-Carlo estimate of |C(w, B_rho(x0), A0)| / |B_rho(x0)|.
template <QuasiConvexFunction W>
ContactSetEstimate contact_measure_fraction(const W& w, const Vector& x0, const SymMatrix& A0, double rho,
                                            std::size_t n_samples, std::uint64_t seed,
                                            const MeasureOptions& opt = {}) {
    if (!(rho > 0.0)) throw UsageError("contact_measure_fraction: rho must be positive");
    if (n_samples == 0) throw UsageError("contact_measure_fraction: n_samples must be positive");
    require_same_dim(x0.size(), w.dim(), "contact_measure_fraction");
    require_same_dim(A0.dim(), w.dim(), "contact_measure_fraction");
    const std::size_t grid = opt.grid_per_axis ? opt.grid_per_axis : default_ball_grid(x0.size());
    const std::vector<Vector> probes = ball_probes(x0, rho, grid);

    std::vector<char> hit(n_samples, 0);
    parallel_for(n_samples, opt.threads, [&](std::size_t i) {
        SplitMix64 rng(derive_seed(seed, i));
        const Vector x = uniform_in_ball(x0, rho, rng);
        hit[i] = global_contact_test_ball(w, x, A0, x0, rho, probes, opt.tol) ? 1 : 0;
    });

    ContactSetEstimate est;
    est.n_samples = n_samples;
    est.rho = rho;
    for (std::size_t i = 0; i < n_samples; ++i) {
        if (!hit[i]) continue;
        ++est.n_hits;
        if (est.witnesses.size() < opt.max_witnesses) {
            SplitMix64 rng(derive_seed(seed, i));
            est.witnesses.push_back(uniform_in_ball(x0, rho, rng));
        }
    }
    est.fraction = static_cast<double>(est.n_hits) / static_cast<double>(n_samples);
    return est;
}

// ------------------------------------------------------ witness sequences

struct Witness {
    double eps = 0.0;
    Vector x;
    Jet2 jet;
    double gradient_error = 0.0;  // |Dw(x_j) - p0|
    bool sandwich_ok = false;     // -lambda I <= D^2 w(x_j) <= A0 + eps I (slack 1e-8)
};

enum class WitnessStatus { complete, inconclusive, precondition_failed };

struct WitnessSequence {
    WitnessStatus status = WitnessStatus::complete;
    std::vector<Witness> witnesses;
    std::optional<Vector> best_candidate;  // set when the budget ran out
    double failed_eps = 0.0;
    std::size_t samples_used = 0;
    ContactResult precondition;
};

struct WitnessOptions {
    std::vector<double> eps_schedule;  // empty selects 2^-j, j = 1..12
    std::size_t budget = 100000;       // samples per eps_j
    std::size_t grid_per_axis = 0;     // 0 selects default_ball_grid(n)
    std::size_t batch = 256;
    double contact_tol = 1e-10;
    double sandwich_tol = 1e-8;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    bool check_precondition = true;
};

inline std::vector<double> default_eps_schedule() {
    std::vector<double> s;
    for (int j = 1; j <= 12; ++j) s.push_back(std::exp2(-j));
    return s;
}

/// For each eps_j, finds x_j in B_eps_j(x0) accepted by `in_E`, where w is
/// twice differentiable and x_j in C(w, B_eps_j(x0), A0 + eps_j I), by seeded
/// rejection sampling. Exhausting the budget yields an inconclusive result
/// carrying the best candidate seen.
template <QuasiConvexFunction W>
WitnessSequence witness_sequence(const W& w, const Vector& x0, const Vector& p0, const SymMatrix& A0,
                                 const std::function<bool(const Vector&)>& in_E, const WitnessOptions& opt = {}) {
    const std::size_t n = x0.size();
    require_same_dim(w.dim(), n, "witness_sequence");
    require_same_dim(p0.size(), n, "witness_sequence");
    require_same_dim(A0.dim(), n, "witness_sequence");
    const std::vector<double> schedule = opt.eps_schedule.empty() ? default_eps_schedule() : opt.eps_schedule;
    for (std::size_t j = 0; j < schedule.size(); ++j) {
        if (!(schedule[j] > 0.0) || (j > 0 && schedule[j] >= schedule[j - 1]))
            throw UsageError("witness_sequence: eps_schedule must be positive and decreasing");
    }
    const std::size_t grid = opt.grid_per_axis ? opt.grid_per_axis : default_ball_grid(n);
    const double lambda = w.quasiconvexity_constant();
    const SymMatrix I = SymMatrix::identity(n);

    WitnessSequence out;
    if (opt.check_precondition) {
        ContactQuery q{x0, p0, A0, schedule.front(), grid};
        out.precondition = is_upper_contact_jet(w, q);
        if (!out.precondition.holds) {
            out.status = WitnessStatus::precondition_failed;
            return out;
        }
    }

    for (std::size_t j = 0; j < schedule.size(); ++j) {
        const double eps = schedule[j];
        const SymMatrix Aj = A0 + eps * I;
        const std::vector<Vector> probes = ball_probes(x0, eps, grid);
        const std::uint64_t stream = derive_seed(opt.seed, j);

        std::optional<std::size_t> found;
        std::optional<Vector> best;
        double best_violation = std::numeric_limits<double>::infinity();
        std::size_t used = 0;
        while (!found && used < opt.budget) {
            const std::size_t count = std::min(opt.batch, opt.budget - used);
            std::vector<char> ok(count, 0);
            std::vector<double> viol(count, std::numeric_limits<double>::infinity());
            parallel_for(count, opt.threads, [&](std::size_t b) {
                SplitMix64 rng(derive_seed(stream, used + b));
                const Vector x = uniform_in_ball(x0, eps, rng);
                if (!in_E(x)) return;
                const auto jet = w.jet_at(x);
                if (!jet) return;
                if (global_contact_test_ball(w, x, Aj, x0, eps, probes, opt.contact_tol)) {
                    ok[b] = 1;
                    viol[b] = 0.0;
                    return;
                }
                Vector scratch;
                double worst = -std::numeric_limits<double>::infinity();
                for (const auto& y : probes)
                    worst = std::max(worst, detail::contact_violation(w, x, jet->r, jet->p, Aj, 0.0, y, scratch));
                viol[b] = worst;
            });
            for (std::size_t b = 0; b < count; ++b) {
                if (ok[b]) {
                    found = used + b;
                    break;
                }
                if (viol[b] < best_violation) {
                    best_violation = viol[b];
                    SplitMix64 rng(derive_seed(stream, used + b));
                    best = uniform_in_ball(x0, eps, rng);
                }
            }
            used += found ? (*found - used + 1) : count;
        }
        out.samples_used += used;

        if (!found) {
            out.status = WitnessStatus::inconclusive;
            out.failed_eps = eps;
            out.best_candidate = best;
            return out;
        }
        SplitMix64 rng(derive_seed(stream, *found));
        Witness wit;
        wit.eps = eps;
        wit.x = uniform_in_ball(x0, eps, rng);
        wit.jet = *w.jet_at(wit.x);
        wit.gradient_error = norm(wit.jet.p - p0);
        wit.sandwich_ok = loewner_leq(-lambda * I, wit.jet.A, opt.sandwich_tol) &&
                          loewner_leq(wit.jet.A, Aj, opt.sandwich_tol);
        out.witnesses.push_back(std::move(wit));
    }
    return out;
}

/// |Dw(x0 + t_k dir) - Dw(x0)| for t_k = t0 * 2^-k at points where both
/// gradients exist (NaN otherwise).
template <QuasiConvexFunction W>
std::vector<double> ray_gradient_errors(const W& w, const Vector& x0, const Vector& dir, std::size_t count,
                                        double t0 = 0.5) {
    std::vector<double> out;
    const auto g0 = w.gradient_at(x0);
    for (std::size_t k = 0; k < count; ++k) {
        const Vector x = x0 + (t0 * std::exp2(-static_cast<double>(k))) * dir;
        const auto g = w.gradient_at(x);
        out.push_back(g && g0 ? norm(*g - *g0) : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

}  // namespace qcvisc
