#pragma once
// Executable checks of the almost-everywhere theorem, the addition theorems
// and strict comparison. Each returns a Verdict whose witness can be
// re-checked with the operation that produced it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qcvisc/contact.hpp"
#include "qcvisc/geometry.hpp"
#include "qcvisc/parallel.hpp"
#include "qcvisc/quasiconvex.hpp"
#include "qcvisc/subequation.hpp"

namespace qcvisc {

enum class Status { holds, fails, inconclusive, precondition_failed };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::holds: return "holds";
        case Status::fails: return "fails";
        case Status::inconclusive: return "inconclusive";
        case Status::precondition_failed: return "precondition_failed";
    }
    return "inconclusive";
}

struct TracePoint {
    Vector x;
    double metric = 0.0;  // NaN when the point carried no constraint
};

struct Verdict {
    Status status = Status::holds;
    std::optional<FullJet> witness_jet;
    std::optional<Vector> witness_point;
    std::string message;
    std::vector<std::pair<std::string, double>> diagnostics;  // insertion-ordered
    std::vector<TracePoint> trace;

    void set(const std::string& key, double value) {
        for (auto& kv : diagnostics) {
            if (kv.first == key) {
                kv.second = value;
                return;
            }
        }
        diagnostics.emplace_back(key, value);
    }

    double get(const std::string& key) const {
        for (const auto& kv : diagnostics)
            if (kv.first == key) return kv.second;
        return std::numeric_limits<double>::quiet_NaN();
    }
};

struct ScanOptions {
    std::size_t grid = 0;  // points per axis; 0 selects default_grid(n)
    double tol = 1e-9;
    unsigned threads = 0;
    bool trace = false;
};

namespace detail {

inline std::vector<GridPoint> scan_grid(const Box& box, const ScanOptions& opt) {
    return box_grid(box, opt.grid ? opt.grid : default_grid(box.dim()));
}

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace detail

/// Scans the grid and requires J^2 w(x) in F_x wherever w is twice
/// differentiable; kinks are skipped and counted.
template <QuasiConvexFunction W>
Verdict ae_check(const W& w, const Subequation& F, const Box& domain, const ScanOptions& opt = {}) {
    require_same_dim(w.dim(), F.dim(), "ae_check");
    require_same_dim(w.dim(), domain.dim(), "ae_check");
    const auto grid = detail::scan_grid(domain, opt);
    std::vector<double> margin(grid.size(), detail::nan());
    parallel_for(grid.size(), opt.threads, [&](std::size_t i) {
        if (auto j = w.jet_at(grid[i].x)) margin[i] = F.value(grid[i].x, *j);
    });

    Verdict v;
    std::size_t skipped = 0;
    std::size_t failures = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (opt.trace) v.trace.push_back({grid[i].x, margin[i]});
        if (std::isnan(margin[i])) {
            ++skipped;
            continue;
        }
        worst = std::min(worst, margin[i]);
        if (margin[i] < -opt.tol) {
            if (failures++ == 0) v.witness_jet = FullJet{grid[i].x, *w.jet_at(grid[i].x)};
        }
    }
    v.status = failures ? Status::fails : Status::holds;
    v.set("points_scanned", static_cast<double>(grid.size()));
    v.set("points_skipped_nondifferentiable", static_cast<double>(skipped));
    v.set("points_failed", static_cast<double>(failures));
    v.set("worst_margin", skipped == grid.size() ? detail::nan() : worst);
    if (failures) v.message = "2-jet outside the subequation at a twice-differentiable point";
    return v;
}

/// Direct-definition oracle: tests every upper contact jet at each grid
/// point. Smooth points reduce to the minimal jet; points with distinct
/// active gradients carry no contact jet; second-order kinks test the
/// active Hessians (any member certifies the point by positivity, a
/// Loewner-maximal non-member is itself a failing contact jet).
inline Verdict viscosity_check(const MaxQuadFunction& w, const Subequation& F, const Box& domain,
                               const ScanOptions& opt = {}) {
    require_same_dim(w.dim(), F.dim(), "viscosity_check");
    require_same_dim(w.dim(), domain.dim(), "viscosity_check");
    enum Kind : int { smooth_ok, smooth_fail, kink, second_ok, second_fail, second_unknown };
    const auto grid = detail::scan_grid(domain, opt);
    std::vector<int> kind(grid.size(), kink);
    std::vector<double> margin(grid.size(), detail::nan());
    std::vector<std::optional<FullJet>> failing(grid.size());
    const JetTolerance jt;

    parallel_for(grid.size(), opt.threads, [&](std::size_t i) {
        const Vector& x = grid[i].x;
        if (auto j = w.jet_at(x, jt)) {
            margin[i] = F.value(x, *j);
            kind[i] = margin[i] >= -opt.tol ? smooth_ok : smooth_fail;
            if (kind[i] == smooth_fail) failing[i] = FullJet{x, *j};
            return;
        }
        const auto g = w.gradient_at(x, jt);
        if (!g) {
            kind[i] = kink;
            return;
        }
        const auto act = w.active_set(x, jt.tie);
        const double wx = w.eval(x);
        std::vector<SymMatrix> hess;
        for (std::size_t a : act) hess.push_back(w.pieces()[a].A);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& H : hess) best = std::max(best, F.value(x, Jet2{wx, *g, H}));
        margin[i] = best;
        if (best >= -opt.tol) {
            kind[i] = second_ok;
            return;
        }
        for (const auto& H : hess) {
            bool is_max = true;
            for (const auto& K : hess) is_max = is_max && loewner_leq(K, H, default_loewner_tol(K, H));
            if (is_max) {
                kind[i] = second_fail;
                failing[i] = FullJet{x, Jet2{wx, *g, H}};
                return;
            }
        }
        kind[i] = second_unknown;
    });

    Verdict v;
    std::size_t counts[6] = {0, 0, 0, 0, 0, 0};
    std::size_t first_fail = grid.size();
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ++counts[kind[i]];
        if (!std::isnan(margin[i])) worst = std::min(worst, margin[i]);
        if ((kind[i] == smooth_fail || kind[i] == second_fail) && first_fail == grid.size()) first_fail = i;
        if (opt.trace) v.trace.push_back({grid[i].x, margin[i]});
    }
    if (first_fail < grid.size()) {
        v.status = Status::fails;
        v.witness_jet = failing[first_fail];
        v.message = kind[first_fail] == smooth_fail ? "minimal upper contact jet outside the subequation"
                                                    : "Loewner-maximal contact jet at a second-order kink outside the subequation";
    } else if (counts[second_unknown]) {
        v.status = Status::inconclusive;
        v.message = "second-order kink with Loewner-incomparable Hessians, none in the subequation";
    } else {
        v.status = Status::holds;
    }
    v.set("points_scanned", static_cast<double>(grid.size()));
    v.set("points_smooth", static_cast<double>(counts[smooth_ok] + counts[smooth_fail]));
    v.set("points_first_order_kink", static_cast<double>(counts[kink]));
    v.set("points_second_order_kink",
          static_cast<double>(counts[second_ok] + counts[second_fail] + counts[second_unknown]));
    v.set("points_inconclusive", static_cast<double>(counts[second_unknown]));
    v.set("points_failed", static_cast<double>(counts[smooth_fail] + counts[second_fail]));
    v.set("worst_margin", std::isinf(worst) ? detail::nan() : worst);
    return v;
}

/// u in F(X), v in G(X) => u + v in closure(F + G)(X), checked at grid points
/// where both are twice differentiable.
inline Verdict addition_check(const MaxQuadFunction& u, const MaxQuadFunction& v, const Subequation& F,
                              const Subequation& G, const Box& domain, const ScanOptions& opt = {},
                              std::size_t split_budget = 4000) {
    Verdict out;
    const Verdict pu = ae_check(u, F, domain, opt);
    const Verdict pv = ae_check(v, G, domain, opt);
    if (pu.status != Status::holds || pv.status != Status::holds) {
        out.status = Status::precondition_failed;
        out.message = pu.status != Status::holds ? "u is not F-subharmonic on the domain"
                                                 : "v is not G-subharmonic on the domain";
        out.witness_jet = pu.status != Status::holds ? pu.witness_jet : pv.witness_jet;
        return out;
    }

    const SumSubequation H(F, G, split_budget);
    const auto grid = detail::scan_grid(domain, opt);
    std::vector<int> result(grid.size(), -1);  // -1 skipped, else Membership
    parallel_for(grid.size(), opt.threads, [&](std::size_t i) {
        const auto ju = u.jet_at(grid[i].x);
        const auto jv = v.jet_at(grid[i].x);
        if (!ju || !jv) return;
        result[i] = static_cast<int>(sum_contains(H, FullJet{grid[i].x, jet_add(*ju, *jv)}, opt.tol));
    });

    std::size_t skipped = 0, in = 0, unknown = 0, out_cert = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (opt.trace) out.trace.push_back({grid[i].x, static_cast<double>(result[i])});
        switch (result[i]) {
            case -1: ++skipped; break;
            case static_cast<int>(Membership::in): ++in; break;
            case static_cast<int>(Membership::unknown): ++unknown; break;
            default:
                if (out_cert++ == 0)
                    out.witness_jet = FullJet{grid[i].x, jet_add(*u.jet_at(grid[i].x), *v.jet_at(grid[i].x))};
        }
    }
    out.status = out_cert ? Status::fails : Status::holds;
    if (out_cert) out.message = "jet of u + v certified outside closure(F + G)";
    out.set("points_scanned", static_cast<double>(grid.size()));
    out.set("points_skipped_nondifferentiable", static_cast<double>(skipped));
    out.set("points_in", static_cast<double>(in));
    out.set("points_unknown", static_cast<double>(unknown));
    out.set("points_out_certified", static_cast<double>(out_cert));
    out.set("closed_form", sum_closed_form(H) ? 1.0 : 0.0);
    return out;
}

// ---------------------------------------------------------- decomposition

struct Decomposition {
    Status status = Status::holds;
    std::string message;
    FullJet u_jet;     // (x0, u(x0), Du(x0), A')
    FullJet v_jet;     // (x0, v(x0), Dv(x0), B)
    SymMatrix residual;  // P = A0 - A - B
    double p_sum_error = 0.0;
    double lambda_min_residual = 0.0;
    bool sandwich_ok = false;
    WitnessSequence sequence;
};

struct DecomposeOptions {
    WitnessOptions witness;
    double p_sum_tol = 1e-8;
    double residual_tol = 1e-6;
};

/// Splits an upper contact jet (p0, A0) of u + v at x0 into jets of u and v
/// that sum to it: gradients Du(x0), Dv(x0); Hessians from the limit of a
/// witness sequence along points where both are twice differentiable.
inline Decomposition decompose_contact_jet(const MaxQuadFunction& u, const MaxQuadFunction& v, const Vector& x0,
                                           const Vector& p0, const SymMatrix& A0, const DecomposeOptions& opt = {}) {
    const PiecewiseQuadSum w(u, v);
    Decomposition d;
    const auto both_smooth = [&](const Vector& x) { return u.jet_at(x).has_value() && v.jet_at(x).has_value(); };
    d.sequence = witness_sequence(w, x0, p0, A0, both_smooth, opt.witness);
    if (d.sequence.status == WitnessStatus::precondition_failed) {
        d.status = Status::precondition_failed;
        d.message = "(p0, A0) is not an upper contact jet of u + v at x0";
        return d;
    }
    const auto gu = u.gradient_at(x0);
    const auto gv = v.gradient_at(x0);
    if (!gu || !gv) {
        d.status = Status::inconclusive;
        d.message = "u or v not differentiable at x0 although the contact grid test passed";
        return d;
    }
    if (d.sequence.status == WitnessStatus::inconclusive) {
        d.status = Status::inconclusive;
        d.message = "witness budget exhausted";
        return d;
    }
    const Vector& xl = d.sequence.witnesses.back().x;
    const SymMatrix A = u.jet_at(xl)->A;
    const SymMatrix B = v.jet_at(xl)->A;
    d.residual = A0 - A - B;
    const SymMatrix A_prime = A + d.residual;
    d.u_jet = FullJet{x0, Jet2{u.eval(x0), *gu, A_prime}};
    d.v_jet = FullJet{x0, Jet2{v.eval(x0), *gv, B}};
    d.p_sum_error = max_abs(*gu + *gv - p0);
    d.lambda_min_residual = lambda_min(d.residual);

    const std::size_t n = x0.size();
    const double lambda = std::max(u.quasiconvexity_constant(), v.quasiconvexity_constant());
    const SymMatrix lower = SymMatrix::scalar(n, -lambda);
    d.sandwich_ok = loewner_leq(lower, A, 1e-8) && loewner_leq(lower, B, 1e-8);

    if (d.p_sum_error > opt.p_sum_tol || d.lambda_min_residual < -opt.residual_tol || !d.sandwich_ok) {
        d.status = Status::fails;
        d.message = "decomposition identity violated";
    }
    return d;
}

// ------------------------------------------------------ strict comparison

/// u + v <= 0 on the boundary grid of K => u + v <= tol on the interior grid.
/// A positive boundary maximum makes the implication vacuous.
template <QuasiConvexFunction U, QuasiConvexFunction V>
Verdict zmp_check(const U& u, const V& v, const Box& K, const ScanOptions& opt = {}) {
    require_same_dim(u.dim(), v.dim(), "zmp_check");
    require_same_dim(u.dim(), K.dim(), "zmp_check");
    const auto grid = detail::scan_grid(K, opt);
    std::vector<double> val(grid.size());
    parallel_for(grid.size(), opt.threads, [&](std::size_t i) { val[i] = u.eval(grid[i].x) + v.eval(grid[i].x); });

    Verdict out;
    double bmax = -std::numeric_limits<double>::infinity();
    double imax = -std::numeric_limits<double>::infinity();
    std::size_t iarg = grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (opt.trace) out.trace.push_back({grid[i].x, val[i]});
        if (grid[i].on_boundary) {
            bmax = std::max(bmax, val[i]);
        } else if (val[i] > imax) {
            imax = val[i];
            iarg = i;
        }
    }
    out.set("boundary_max", bmax);
    out.set("interior_max", iarg < grid.size() ? imax : detail::nan());
    if (bmax > 0.0) {
        out.status = Status::holds;
        out.set("vacuous", 1.0);
        out.message = "boundary maximum positive; implication vacuous";
        return out;
    }
    out.set("vacuous", 0.0);
    if (iarg < grid.size() && imax > opt.tol) {
        out.status = Status::fails;
        out.witness_point = grid[iarg].x;
        out.message = "u + v <= 0 on the boundary but positive inside";
    } else {
        out.status = Status::holds;
    }
    return out;
}

struct InclusionAudit {
    bool passed = true;
    std::size_t jets_in_G = 0;
    std::size_t boundary_jets = 0;
    std::optional<FullJet> counterexample;
};

/// Statistical audit of G subset Int F. Random jets are tested, and each is
/// also pushed along -s I onto the boundary of G, where the inclusion is
/// tightest; there F must be positive by more than max(margin, gap_tol).
inline InclusionAudit audit_interior_inclusion(const Subequation& G, const Subequation& F, const Box& K,
                                               std::size_t n_samples, std::uint64_t seed, double margin = 0.0,
                                               double gap_tol = 1e-7) {
    require_same_dim(G.dim(), F.dim(), "audit_interior_inclusion");
    const std::size_t n = G.dim();
    const SymMatrix I = SymMatrix::identity(n);
    const double need = std::max(margin, gap_tol);
    InclusionAudit audit;
    for (std::size_t i = 0; i < n_samples; ++i) {
        SplitMix64 rng(derive_seed(seed, i));
        const Vector x = uniform_in_box(K, rng);
        const Jet2 j = random_jet(n, 1.0, rng);
        const FullJet fj{x, j};
        if (contains(G, fj, 0.0)) {
            ++audit.jets_in_G;
            if (!in_interior(F, fj, need)) {
                audit.passed = false;
                audit.counterexample = fj;
                return audit;
            }
        }
        // Bracket s with g(j - s I) changing sign, then bisect to the
        // boundary keeping the feasible side.
        auto g = [&](double s) { return G.value(x, Jet2{j.r, j.p, j.A - s * I}); };
        double lo = 0.0, hi = 0.0, step = 1.0;
        bool bracketed = false;
        if (g(0.0) >= 0.0) {
            for (int k = 0; k < 60 && !bracketed; ++k, step *= 2.0) {
                hi = lo + step;
                if (g(hi) < 0.0) bracketed = true; else lo = hi;
            }
        } else {
            hi = 0.0;
            for (int k = 0; k < 60 && !bracketed; ++k, step *= 2.0) {
                lo = hi - step;
                if (g(lo) >= 0.0) bracketed = true; else hi = lo;
            }
        }
        if (!bracketed) continue;
        for (int k = 0; k < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++k) {
            const double mid = 0.5 * (lo + hi);
            if (g(mid) >= 0.0) lo = mid; else hi = mid;
        }
        ++audit.boundary_jets;
        const FullJet edge{x, Jet2{j.r, j.p, j.A - lo * I}};
        if (!in_interior(F, edge, need)) {
            audit.passed = false;
            audit.counterexample = edge;
            return audit;
        }
    }
    return audit;
}

struct StrictComparisonOptions {
    ScanOptions scan;
    double margin = 0.0;
    std::size_t audit_samples = 10000;
    std::uint64_t seed = 7;
};

/// Checks the preconditions (G subset Int F, u in G(K), v in dual(F)(K)) and
/// then the zero maximum principle for u + v on K.
template <QuasiConvexFunction U, QuasiConvexFunction V>
Verdict strict_comparison_test(const Subequation& G, const Subequation& F, const U& u, const V& v, const Box& K,
                               const StrictComparisonOptions& opt = {}) {
    Verdict out;
    const InclusionAudit audit = audit_interior_inclusion(G, F, K, opt.audit_samples, opt.seed, opt.margin);
    if (!audit.passed) {
        out.status = Status::precondition_failed;
        out.message = "G is not contained in Int F";
        out.witness_jet = audit.counterexample;
        return out;
    }
    const Verdict pu = ae_check(u, G, K, opt.scan);
    if (pu.status != Status::holds) {
        out.status = Status::precondition_failed;
        out.message = "u is not G-subharmonic on K";
        out.witness_jet = pu.witness_jet;
        return out;
    }
    const Verdict pv = ae_check(v, dual(F), K, opt.scan);
    if (pv.status != Status::holds) {
        out.status = Status::precondition_failed;
        out.message = "v is not dual(F)-subharmonic on K";
        out.witness_jet = pv.witness_jet;
        return out;
    }
    out = zmp_check(u, v, K, opt.scan);
    out.set("audit_jets_in_G", static_cast<double>(audit.jets_in_G));
    out.set("audit_boundary_jets", static_cast<double>(audit.boundary_jets));
    return out;
}

}  // namespace qcvisc
