#pragma once
// Quasi-convex functions given as finite maxima of quadratics. Sup-convolutions
// of finitely sampled data land exactly in this class, and the 2-jet is
// available in closed form off the (measure-zero) set of ties.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "qcvisc/jet.hpp"

namespace qcvisc {

/// q(y) = c + <p, y> + 1/2 <A y, y>
struct Quadratic {
    double c = 0.0;
    Vector p;
    SymMatrix A;

    Quadratic() = default;
    Quadratic(double c_, Vector p_, SymMatrix a_) : c(c_), p(std::move(p_)), A(std::move(a_)) {
        require_same_dim(p.size(), A.dim(), "Quadratic");
    }

    static Quadratic zero(std::size_t n) { return {0.0, Vector(n, 0.0), SymMatrix(n)}; }

    std::size_t dim() const noexcept { return p.size(); }

    double operator()(std::span<const double> y) const {
        require_same_dim(y.size(), dim(), "Quadratic");
        return c + dot(p, y) + 0.5 * A.quad_form(y);
    }

    Vector gradient(std::span<const double> y) const { return p + A.apply(y); }
    const SymMatrix& hessian() const noexcept { return A; }

    friend Quadratic operator+(const Quadratic& a, const Quadratic& b) {
        return {a.c + b.c, a.p + b.p, a.A + b.A};
    }

    bool operator==(const Quadratic&) const = default;
};

/// Tie and unanimity tolerances used to classify points as twice
/// differentiable.
struct JetTolerance {
    double tie = 1e-9;        // relative, on values
    double gradient = 1e-8;   // relative to 1 + |p|
    double hessian = 1e-8;    // absolute, max-entry norm
};

class MaxQuadFunction {
public:
    MaxQuadFunction() = default;
    explicit MaxQuadFunction(std::vector<Quadratic> pieces) : pieces_(std::move(pieces)) {
        if (pieces_.empty()) throw UsageError("MaxQuadFunction: at least one piece is required");
        for (const auto& q : pieces_) require_same_dim(q.dim(), pieces_.front().dim(), "MaxQuadFunction");
        lambda_ = 0.0;
        for (const auto& q : pieces_) lambda_ = std::max(lambda_, -lambda_min(q.A));
    }

    std::size_t dim() const noexcept { return pieces_.front().dim(); }
    const std::vector<Quadratic>& pieces() const noexcept { return pieces_; }

    double eval(std::span<const double> x) const {
        double w = -std::numeric_limits<double>::infinity();
        for (const auto& q : pieces_) w = std::max(w, q(x));
        return w;
    }

    /// Indices i with q_i(x) >= w(x) - tie * (1 + |w(x)|).
    std::vector<std::size_t> active_set(std::span<const double> x, double tie_tol = 1e-9) const {
        if (tie_tol < 0.0) throw UsageError("active_set: tie_tol must be non-negative");
        std::vector<double> vals(pieces_.size());
        double w = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            vals[i] = pieces_[i](x);
            w = std::max(w, vals[i]);
        }
        const double cut = w - tie_tol * (1.0 + std::abs(w));
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < vals.size(); ++i)
            if (vals[i] >= cut) out.push_back(i);
        return out;
    }

    /// Gradient when every active piece agrees on it (first-order
    /// differentiability); nothing at first-order kinks.
    std::optional<Vector> gradient_at(std::span<const double> x, const JetTolerance& tol = {}) const {
        const auto act = active_set(x, tol.tie);
        Vector g = pieces_[act.front()].gradient(x);
        for (std::size_t k = 1; k < act.size(); ++k) {
            const Vector gk = pieces_[act[k]].gradient(x);
            if (max_abs(gk - g) > tol.gradient * (1.0 + max_abs(g))) return std::nullopt;
        }
        return g;
    }

    /// The 2-jet (w(x), Dw(x), D^2 w(x)) when all active pieces share
    /// gradient and Hessian; nothing at kinks and second-order kinks.
    std::optional<Jet2> jet_at(std::span<const double> x, const JetTolerance& tol = {}) const {
        const auto act = active_set(x, tol.tie);
        const Quadratic& q0 = pieces_[act.front()];
        Vector g = q0.gradient(x);
        for (std::size_t k = 1; k < act.size(); ++k) {
            const Quadratic& qk = pieces_[act[k]];
            if (max_abs(qk.gradient(x) - g) > tol.gradient * (1.0 + max_abs(g))) return std::nullopt;
            if ((qk.A - q0.A).max_norm() > tol.hessian) return std::nullopt;
        }
        return Jet2{eval(x), std::move(g), q0.A};
    }

    /// max_i max(0, -lambda_min(A_i)): w + (lambda/2)|y|^2 is convex.
    double quasiconvexity_constant() const noexcept { return lambda_; }

    bool operator==(const MaxQuadFunction& o) const { return pieces_ == o.pieces_; }

private:
    std::vector<Quadratic> pieces_;
    double lambda_ = 0.0;
};

inline double eval(const MaxQuadFunction& w, std::span<const double> x) { return w.eval(x); }

inline std::vector<std::size_t> active_set(const MaxQuadFunction& w, std::span<const double> x,
                                           double tie_tol = 1e-9) {
    return w.active_set(x, tie_tol);
}

inline std::optional<Jet2> jet_at(const MaxQuadFunction& w, std::span<const double> x) { return w.jet_at(x); }

inline double quasiconvexity_constant(const MaxQuadFunction& w) { return w.quasiconvexity_constant(); }

/// w(y - a): the same function moved by the vector a.
inline MaxQuadFunction translate(const MaxQuadFunction& w, const Vector& a) {
    std::vector<Quadratic> out;
    out.reserve(w.pieces().size());
    for (const auto& q : w.pieces()) {
        const Vector Aa = q.A.apply(a);
        out.emplace_back(q.c - dot(q.p, a) + 0.5 * dot(a, Aa), q.p - Aa, q.A);
    }
    return MaxQuadFunction(std::move(out));
}

/// Values of a function at finitely many pairwise distinct sites.
struct SampledFunction {
    std::vector<Vector> sites;
    Vector values;

    SampledFunction() = default;
    SampledFunction(std::vector<Vector> s, Vector v) : sites(std::move(s)), values(std::move(v)) {
        validate();
    }

    std::size_t dim() const { return sites.empty() ? 0 : sites.front().size(); }

    void validate() const {
        if (sites.empty()) throw UsageError("SampledFunction: no sites");
        if (sites.size() != values.size()) throw UsageError("SampledFunction: sites/values length mismatch");
        for (const auto& s : sites) require_same_dim(s.size(), dim(), "SampledFunction");
        std::vector<Vector> sorted = sites;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw UsageError("SampledFunction: sites must be pairwise distinct");
    }

    bool operator==(const SampledFunction&) const = default;
};

/// u^eps(x) = max_j [ v_j - |x - s_j|^2 / (2 eps) ], one concave piece per site.
inline MaxQuadFunction sup_convolution(const SampledFunction& s, double eps) {
    if (!(eps > 0.0)) throw UsageError("sup_convolution: eps must be positive");
    s.validate();
    const std::size_t n = s.dim();
    std::vector<Quadratic> pieces;
    pieces.reserve(s.sites.size());
    const SymMatrix A = SymMatrix::scalar(n, -1.0 / eps);
    for (std::size_t j = 0; j < s.sites.size(); ++j) {
        const Vector& z = s.sites[j];
        pieces.emplace_back(s.values[j] - dot(z, z) / (2.0 * eps), (1.0 / eps) * z, A);
    }
    return MaxQuadFunction(std::move(pieces));
}

/// u + v for two max-of-quadratics functions, kept as a pair so the jets of
/// the summands stay visible.
class PiecewiseQuadSum {
public:
    PiecewiseQuadSum(MaxQuadFunction u, MaxQuadFunction v) : u_(std::move(u)), v_(std::move(v)) {
        require_same_dim(u_.dim(), v_.dim(), "PiecewiseQuadSum");
    }

    std::size_t dim() const noexcept { return u_.dim(); }
    const MaxQuadFunction& u() const noexcept { return u_; }
    const MaxQuadFunction& v() const noexcept { return v_; }

    double eval(std::span<const double> x) const { return u_.eval(x) + v_.eval(x); }

    std::optional<Vector> gradient_at(std::span<const double> x, const JetTolerance& tol = {}) const {
        auto gu = u_.gradient_at(x, tol);
        auto gv = v_.gradient_at(x, tol);
        if (!gu || !gv) return std::nullopt;
        return *gu + *gv;
    }

    std::optional<Jet2> jet_at(std::span<const double> x, const JetTolerance& tol = {}) const {
        auto ju = u_.jet_at(x, tol);
        auto jv = v_.jet_at(x, tol);
        if (!ju || !jv) return std::nullopt;
        return jet_add(*ju, *jv);
    }

    /// Upper bound lambda_u + lambda_v.
    double quasiconvexity_constant() const noexcept {
        return u_.quasiconvexity_constant() + v_.quasiconvexity_constant();
    }

    /// The same function as a single max of pairwise piece sums.
    MaxQuadFunction flatten() const {
        std::vector<Quadratic> out;
        out.reserve(u_.pieces().size() * v_.pieces().size());
        for (const auto& a : u_.pieces())
            for (const auto& b : v_.pieces()) out.push_back(a + b);
        return MaxQuadFunction(std::move(out));
    }

private:
    MaxQuadFunction u_;
    MaxQuadFunction v_;
};

inline PiecewiseQuadSum sum(const MaxQuadFunction& u, const MaxQuadFunction& v) { return {u, v}; }

/// What the contact and theorem machinery needs from a quasi-convex function.
template <typename W>
concept QuasiConvexFunction = requires(const W& w, std::span<const double> x) {
    { w.dim() } -> std::convertible_to<std::size_t>;
    { w.eval(x) } -> std::convertible_to<double>;
    { w.jet_at(x) } -> std::same_as<std::optional<Jet2>>;
    { w.gradient_at(x) } -> std::same_as<std::optional<Vector>>;
    { w.quasiconvexity_constant() } -> std::convertible_to<double>;
};

static_assert(QuasiConvexFunction<MaxQuadFunction>);
static_assert(QuasiConvexFunction<PiecewiseQuadSum>);

}  // namespace qcvisc
