#pragma once

#include <utility>

#include "qcvisc/linalg.hpp"

namespace qcvisc {

/// A 2-jet (r, p, A): value, gradient slot and Hessian slot.
struct Jet2 {
    double r = 0.0;
    Vector p;
    SymMatrix A;

    Jet2() = default;
    Jet2(double r_, Vector p_, SymMatrix a_) : r(r_), p(std::move(p_)), A(std::move(a_)) {
        require_same_dim(p.size(), A.dim(), "Jet2");
    }

    static Jet2 zero(std::size_t n) { return {0.0, Vector(n, 0.0), SymMatrix(n)}; }

    std::size_t dim() const noexcept { return p.size(); }

    bool operator==(const Jet2&) const = default;
};

/// A 2-jet with its base point, i.e. an element of X x R x R^n x Sym(R^n).
struct FullJet {
    Vector x;
    Jet2 jet;

    FullJet() = default;
    FullJet(Vector x_, Jet2 jet_) : x(std::move(x_)), jet(std::move(jet_)) {
        require_same_dim(x.size(), jet.dim(), "FullJet");
    }

    std::size_t dim() const noexcept { return x.size(); }

    bool operator==(const FullJet&) const = default;
};

inline Jet2 jet_add(const Jet2& a, const Jet2& b) {
    require_same_dim(a.dim(), b.dim(), "jet_add");
    return {a.r + b.r, a.p + b.p, a.A + b.A};
}

inline Jet2 jet_negate(const Jet2& a) { return {-a.r, -a.p, -a.A}; }

inline Jet2 random_jet(std::size_t n, double scale, SplitMix64& rng) {
    Jet2 j;
    j.r = scale * rng.normal();
    j.p = random_vector(n, scale, rng);
    j.A = random_symmetric(n, scale, rng);
    return j;
}

}  // namespace qcvisc
