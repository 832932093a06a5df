#pragma once
// Primitive subequations represented as F_x = { J : f(x, J) >= 0 } for a
// continuous defining function f that is nondecreasing in the Hessian slot.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qcvisc/jet.hpp"
#include "qcvisc/parallel.hpp"

namespace qcvisc {

struct Monomial {
    double coef = 0.0;
    std::vector<unsigned> exponents;  // one per coordinate
    bool operator==(const Monomial&) const = default;
};

/// Real polynomial in x, used for variable-coefficient thresholds c(x).
struct Polynomial {
    std::vector<Monomial> terms;

    static Polynomial constant(double c, std::size_t n) {
        return {{Monomial{c, std::vector<unsigned>(n, 0u)}}};
    }

    double operator()(std::span<const double> x) const {
        double s = 0.0;
        for (const auto& t : terms) {
            require_same_dim(t.exponents.size(), x.size(), "Polynomial");
            double m = t.coef;
            for (std::size_t i = 0; i < x.size(); ++i) m *= std::pow(x[i], static_cast<double>(t.exponents[i]));
            s += m;
        }
        return s;
    }

    bool is_constant() const {
        for (const auto& t : terms)
            for (unsigned e : t.exponents)
                if (e != 0 && t.coef != 0.0) return false;
        return true;
    }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) {
        a.terms.insert(a.terms.end(), b.terms.begin(), b.terms.end());
        return a;
    }

    bool operator==(const Polynomial&) const = default;
};

/// Name plus parameters of a catalog entry. Unused fields keep defaults.
struct CatalogSpec {
    std::string name;
    double c = 0.0;        // laplace, grad_laplace, proper_laplace
    std::size_t k = 1;     // kth_eig, 1-based ascending
    Polynomial poly;       // var_laplace
    bool operator==(const CatalogSpec&) const = default;
};

struct SubequationFlags {
    bool constant_coefficient = true;
    bool pure_second_order = true;
    bool negativity = false;  // f nonincreasing in r
    bool operator==(const SubequationFlags&) const = default;
};

using DefiningFunction =
    std::function<double(std::span<const double> x, double r, std::span<const double> p, const SymMatrix& A)>;

class Subequation {
public:
    Subequation(std::size_t dim, std::string name, DefiningFunction f, SubequationFlags flags,
                std::optional<CatalogSpec> spec = std::nullopt)
        : dim_(dim), name_(std::move(name)), f_(std::make_shared<const DefiningFunction>(std::move(f))),
          flags_(flags), spec_(std::move(spec)) {
        if (dim_ == 0) throw UsageError("Subequation: dimension must be positive");
    }

    std::size_t dim() const noexcept { return dim_; }
    const std::string& name() const noexcept { return name_; }
    const SubequationFlags& flags() const noexcept { return flags_; }
    const std::optional<CatalogSpec>& catalog_spec() const noexcept { return spec_; }

    double value(std::span<const double> x, const Jet2& j) const {
        require_same_dim(x.size(), dim_, "Subequation");
        require_same_dim(j.dim(), dim_, "Subequation");
        return (*f_)(x, j.r, j.p, j.A);
    }

    double value(const FullJet& j) const { return value(j.x, j.jet); }

private:
    std::size_t dim_;
    std::string name_;
    std::shared_ptr<const DefiningFunction> f_;
    SubequationFlags flags_;
    std::optional<CatalogSpec> spec_;
};

inline bool contains(const Subequation& F, const FullJet& j, double tol = 1e-9) {
    return F.value(j) >= -tol;
}

/// Interior certificate under Int F = {f > 0}: f >= margin for margin > 0,
/// and plain f > 0 when margin is zero.
inline bool in_interior(const Subequation& F, const FullJet& j, double margin) {
    if (margin < 0.0) throw UsageError("in_interior: margin must be non-negative");
    const double v = F.value(j);
    return margin > 0.0 ? v >= margin : v > 0.0;
}

/// Dual subequation { J : -J not in Int F }, with defining function
/// -f(x, -r, -p, -A).
inline Subequation dual(const Subequation& F) {
    auto base = F;
    DefiningFunction g = [base](std::span<const double> x, double r, std::span<const double> p,
                                const SymMatrix& A) {
        Vector np(p.begin(), p.end());
        for (double& e : np) e = -e;
        return -base.value(x, Jet2{-r, std::move(np), -A});
    };
    return Subequation(F.dim(), "dual(" + F.name() + ")", std::move(g), F.flags());
}

// ---------------------------------------------------------------- catalog

struct CatalogEntryInfo {
    std::string name;
    std::string formula;
    std::string params;
    SubequationFlags flags;
};

inline const std::vector<CatalogEntryInfo>& catalog_entries() {
    static const std::vector<CatalogEntryInfo> entries = {
        {"convex", "lambda_min(A) >= 0", "", {true, true, false}},
        {"laplace", "tr(A) - c >= 0", "c (default 0)", {true, true, false}},
        {"kth_eig", "lambda_k(A) >= 0, ascending, 1-based", "k (default 1)", {true, true, false}},
        {"grad_laplace", "tr(A) - |p|^2 - c >= 0", "c (default 0)", {true, false, false}},
        {"proper_laplace", "tr(A) - r - c >= 0", "c (default 0)", {true, false, true}},
        {"var_laplace", "tr(A) - c(x) >= 0, c a polynomial", "terms [{coef, exp[]}]", {false, false, false}},
    };
    return entries;
}

inline bool is_catalog_name(const std::string& name) {
    for (const auto& e : catalog_entries())
        if (e.name == name) return true;
    return false;
}

inline Subequation make_subequation(const CatalogSpec& spec, std::size_t n) {
    const double c = spec.c;
    if (spec.name == "convex") {
        return {n, "convex",
                [](std::span<const double>, double, std::span<const double>, const SymMatrix& A) {
                    return lambda_min(A);
                },
                {true, true, false}, spec};
    }
    if (spec.name == "laplace") {
        return {n, "laplace",
                [c](std::span<const double>, double, std::span<const double>, const SymMatrix& A) {
                    return A.trace() - c;
                },
                {true, true, false}, spec};
    }
    if (spec.name == "kth_eig") {
        if (spec.k < 1 || spec.k > n) throw UsageError("kth_eig: k must lie in [1, dim]");
        const std::size_t k = spec.k;
        return {n, "kth_eig",
                [k](std::span<const double>, double, std::span<const double>, const SymMatrix& A) {
                    return lambda_k(A, k);
                },
                {true, true, false}, spec};
    }
    if (spec.name == "grad_laplace") {
        return {n, "grad_laplace",
                [c](std::span<const double>, double, std::span<const double> p, const SymMatrix& A) {
                    return A.trace() - dot(p, p) - c;
                },
                {true, false, false}, spec};
    }
    if (spec.name == "proper_laplace") {
        return {n, "proper_laplace",
                [c](std::span<const double>, double r, std::span<const double>, const SymMatrix& A) {
                    return A.trace() - r - c;
                },
                {true, false, true}, spec};
    }
    if (spec.name == "var_laplace") {
        for (const auto& t : spec.poly.terms) require_same_dim(t.exponents.size(), n, "var_laplace polynomial");
        auto poly = spec.poly;
        const bool cc = poly.is_constant();
        return {n, "var_laplace",
                [poly](std::span<const double> x, double, std::span<const double>, const SymMatrix& A) {
                    return A.trace() - poly(x);
                },
                {cc, false, false}, spec};
    }
    throw UsageError("unknown catalog subequation '" + spec.name + "'");
}

// ------------------------------------------------------- positivity audit

struct PositivityViolation {
    std::size_t sample = 0;
    FullJet jet;
    SymMatrix P;
    double drop = 0.0;  // f(J) - f(J + P), positive when (P) is violated
};

struct PositivityReport {
    std::size_t n_samples = 0;
    std::size_t n_violations = 0;
    double worst_drop = 0.0;
    std::vector<PositivityViolation> violations;  // lowest sample indices, capped

    bool passed() const noexcept { return n_violations == 0; }
};

/// Statistical audit of (P): samples jets J and P >= 0 and reports every
/// sample with f(J + P) < f(J) - tol.
inline PositivityReport check_positivity(const Subequation& F, std::size_t n_samples, std::uint64_t seed,
                                         double tol = 1e-9, unsigned threads = 0,
                                         std::size_t max_recorded = 16) {
    if (n_samples < 1) throw UsageError("check_positivity: n_samples must be >= 1");
    const std::size_t n = F.dim();
    std::vector<double> drops(n_samples, 0.0);
    parallel_for(n_samples, threads, [&](std::size_t i) {
        SplitMix64 rng(derive_seed(seed, i));
        const Vector x = random_vector(n, 1.0, rng);
        const Jet2 j = random_jet(n, 1.0, rng);
        const double scale = std::pow(10.0, rng.uniform(-3.0, 1.0));
        const SymMatrix P = random_psd(n, scale, rng);
        drops[i] = F.value(x, j) - F.value(x, Jet2{j.r, j.p, j.A + P});
    });

    PositivityReport rep;
    rep.n_samples = n_samples;
    for (std::size_t i = 0; i < n_samples; ++i) {
        rep.worst_drop = std::max(rep.worst_drop, drops[i]);
        if (drops[i] > tol) {
            ++rep.n_violations;
            if (rep.violations.size() < max_recorded) {
                // Regenerate the sample from its seed so the witness is exact.
                SplitMix64 rng(derive_seed(seed, i));
                Vector x = random_vector(n, 1.0, rng);
                Jet2 j = random_jet(n, 1.0, rng);
                const double scale = std::pow(10.0, rng.uniform(-3.0, 1.0));
                SymMatrix P = random_psd(n, scale, rng);
                rep.violations.push_back({i, FullJet{std::move(x), std::move(j)}, std::move(P), drops[i]});
            }
        }
    }
    return rep;
}

// ------------------------------------------------------------- fibre sums

enum class Membership { in, out_certified, unknown };

inline const char* to_string(Membership m) {
    switch (m) {
        case Membership::in: return "in";
        case Membership::out_certified: return "out_certified";
        case Membership::unknown: return "unknown";
    }
    return "unknown";
}

/// H = closure(F + G), fibre-wise.
struct SumSubequation {
    Subequation left;
    Subequation right;
    std::size_t split_budget = 4000;  // defining-function evaluations for the split search
    std::uint64_t seed = 0x5eed;

    SumSubequation(Subequation f, Subequation g, std::size_t budget = 4000)
        : left(std::move(f)), right(std::move(g)), split_budget(budget) {
        require_same_dim(left.dim(), right.dim(), "SumSubequation");
    }
};

namespace detail {

// tr(A) - alpha r - beta |p|^2 - c(x)
struct TraceForm {
    double alpha = 0.0;
    double beta = 0.0;
    Polynomial c;
};

struct ClosedForm {
    enum class Kind { whole_space, trace, kth_eig } kind = Kind::whole_space;
    TraceForm trace;
    std::size_t k = 1;
};

inline std::optional<ClosedForm> describe(const Subequation& F) {
    const auto& s = F.catalog_spec();
    if (!s) return std::nullopt;
    const std::size_t n = F.dim();
    ClosedForm cf;
    if (s->name == "convex" || s->name == "kth_eig") {
        cf.kind = ClosedForm::Kind::kth_eig;
        cf.k = s->name == "convex" ? 1 : s->k;
        return cf;
    }
    cf.kind = ClosedForm::Kind::trace;
    if (s->name == "laplace") {
        cf.trace = {0.0, 0.0, Polynomial::constant(s->c, n)};
    } else if (s->name == "grad_laplace") {
        cf.trace = {0.0, 1.0, Polynomial::constant(s->c, n)};
    } else if (s->name == "proper_laplace") {
        cf.trace = {1.0, 0.0, Polynomial::constant(s->c, n)};
    } else if (s->name == "var_laplace") {
        cf.trace = {0.0, 0.0, s->poly};
    } else {
        return std::nullopt;
    }
    return cf;
}

// Closure of the fibre-wise sum for the catalog pairs where it has a closed
// form. r and p are unconstrained in pure second-order entries, so they can
// absorb any r or p mass from the other summand.
inline std::optional<ClosedForm> sum_closed_form(const ClosedForm& a, const ClosedForm& b) {
    using K = ClosedForm::Kind;
    if (a.kind == K::whole_space || b.kind == K::whole_space) return ClosedForm{};
    if (a.kind == K::kth_eig && b.kind == K::kth_eig) {
        if (a.k == 1) return b;
        if (b.k == 1) return a;
        return std::nullopt;
    }
    if (a.kind == K::trace && b.kind == K::trace) {
        if (a.trace.alpha != b.trace.alpha) return ClosedForm{};
        ClosedForm out;
        out.kind = K::trace;
        out.trace.alpha = a.trace.alpha;
        const double b1 = a.trace.beta, b2 = b.trace.beta;
        out.trace.beta = (b1 == 0.0 || b2 == 0.0) ? 0.0 : b1 * b2 / (b1 + b2);
        out.trace.c = a.trace.c + b.trace.c;
        return out;
    }
    const ClosedForm& eig = a.kind == K::kth_eig ? a : b;
    const ClosedForm& tr = a.kind == K::trace ? a : b;
    if (tr.trace.alpha != 0.0 || eig.k != 1) return ClosedForm{};
    ClosedForm out;
    out.kind = K::trace;
    out.trace.c = tr.trace.c;
    return out;
}

inline double closed_form_value(const ClosedForm& cf, const FullJet& j) {
    switch (cf.kind) {
        case ClosedForm::Kind::whole_space: return std::numeric_limits<double>::infinity();
        case ClosedForm::Kind::kth_eig: return lambda_k(j.jet.A, cf.k);
        case ClosedForm::Kind::trace:
            return j.jet.A.trace() - cf.trace.alpha * j.jet.r - cf.trace.beta * dot(j.jet.p, j.jet.p) -
                   cf.trace.c(j.x);
    }
    return 0.0;
}

}  // namespace detail

/// Closed-form defining function of H, when the catalog pair admits one.
inline std::optional<std::function<double(const FullJet&)>> sum_closed_form(const SumSubequation& H) {
    auto a = detail::describe(H.left);
    auto b = detail::describe(H.right);
    if (!a || !b) return std::nullopt;
    auto cf = detail::sum_closed_form(*a, *b);
    if (!cf) return std::nullopt;
    return [form = *cf](const FullJet& j) { return detail::closed_form_value(form, j); };
}

/// Searches for a split j = j1 + j2 with j1 in F and j2 in G. For a fixed
/// base split the identity shift s*I moved from the G part to the F part is
/// optimized by bisection, using that f is nondecreasing in A.
inline bool find_split(const SumSubequation& H, const FullJet& j, double tol, std::size_t budget) {
    const std::size_t n = j.dim();
    const SymMatrix I = SymMatrix::identity(n);
    std::size_t evals = 0;
    const double cap = 1e6 * (1.0 + std::abs(j.jet.r) + max_abs(j.jet.p) + j.jet.A.max_norm());

    auto try_base = [&](const Jet2& base1) -> bool {
        const Jet2 base2{j.jet.r - base1.r, j.jet.p - base1.p, j.jet.A - base1.A};
        auto f_left = [&](double s) {
            ++evals;
            return H.left.value(j.x, Jet2{base1.r, base1.p, base1.A + s * I});
        };
        auto g_right = [&](double s) {
            ++evals;
            return H.right.value(j.x, Jet2{base2.r, base2.p, base2.A - s * I});
        };
        // Smallest s with f_left(s) >= -tol.
        double hi = 0.0;
        double step = 1.0;
        while (f_left(hi) < -tol) {
            hi += step;
            step *= 2.0;
            if (hi > cap || evals > budget) return false;
        }
        double lo = hi - step;
        step = 1.0;
        while (f_left(lo) >= -tol) {
            hi = lo;
            lo -= step;
            step *= 2.0;
            if (-lo > cap) return g_right(hi) >= -tol;
            if (evals > budget) return false;
        }
        for (int it = 0; it < 80 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (f_left(mid) >= -tol) hi = mid; else lo = mid;
        }
        return g_right(hi) >= -tol;
    };

    for (double t : {0.5, 0.0, 1.0, 0.25, 0.75}) {
        if (try_base(Jet2{t * j.jet.r, t * j.jet.p, t * j.jet.A})) return true;
        if (evals > budget) return false;
    }
    SplitMix64 rng(H.seed);
    const double scale = 1.0 + std::abs(j.jet.r) + max_abs(j.jet.p) + j.jet.A.max_norm();
    while (evals < budget) {
        const double t = rng.uniform();
        Jet2 base{t * j.jet.r, t * j.jet.p, t * j.jet.A};
        base.r += scale * rng.normal();
        base.p = base.p + random_vector(n, scale * rng.uniform(), rng);
        base.A += random_symmetric(n, scale * rng.uniform(), rng);
        if (try_base(base)) return true;
    }
    return false;
}

inline Membership sum_contains(const SumSubequation& H, const FullJet& j, double tol = 1e-9) {
    require_same_dim(j.dim(), H.left.dim(), "sum_contains");
    if (auto cf = sum_closed_form(H)) {
        return (*cf)(j) >= -tol ? Membership::in : Membership::out_certified;
    }
    return find_split(H, j, tol, H.split_budget) ? Membership::in : Membership::unknown;
}

}  // namespace qcvisc
