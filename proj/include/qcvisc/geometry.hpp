#pragma once
// Boxes, balls and the finite probe sets that stand in for them.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "qcvisc/linalg.hpp"

namespace qcvisc {

/// Compact box K = [lo, hi]; its interior is the open domain X.
struct Box {
    Vector lo;
    Vector hi;

    Box() = default;
    Box(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
        require_same_dim(lo.size(), hi.size(), "Box");
        if (lo.empty()) throw UsageError("Box: dimension must be positive");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) throw UsageError("Box: lo < hi must hold componentwise");
    }

    static Box cube(std::size_t n, double a, double b) { return {Vector(n, a), Vector(n, b)}; }

    std::size_t dim() const noexcept { return lo.size(); }

    bool contains(std::span<const double> x) const {
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }

    double min_side() const {
        double m = hi[0] - lo[0];
        for (std::size_t i = 1; i < lo.size(); ++i) m = std::min(m, hi[i] - lo[i]);
        return m;
    }

    Box translated(const Vector& a) const { return {lo + a, hi + a}; }

    bool operator==(const Box&) const = default;
};

/// Default points per axis for theorem scans.
inline std::size_t default_grid(std::size_t n) {
    switch (n) {
        case 1: return 201;
        case 2: return 101;
        case 3: return 41;
        default: return 11;
    }
}

/// Default points per axis for ball probe sets (contact certificates).
inline std::size_t default_ball_grid(std::size_t n) {
    switch (n) {
        case 1: return 41;
        case 2: return 21;
        default: return 11;
    }
}

struct GridPoint {
    Vector x;
    bool on_boundary = false;
};

/// Tensor grid with `per_axis` points per axis including the faces, in
/// lexicographic order (last coordinate fastest).
inline std::vector<GridPoint> box_grid(const Box& box, std::size_t per_axis) {
    if (per_axis < 2) throw UsageError("box_grid: need at least 2 points per axis");
    const std::size_t n = box.dim();
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= per_axis;
    std::vector<GridPoint> out;
    out.reserve(total);
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t k = 0; k < total; ++k) {
        std::size_t rem = k;
        for (std::size_t i = n; i-- > 0;) {
            idx[i] = rem % per_axis;
            rem /= per_axis;
        }
        GridPoint g;
        g.x.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(idx[i]) / static_cast<double>(per_axis - 1);
            g.x[i] = idx[i] + 1 == per_axis ? box.hi[i] : box.lo[i] + t * (box.hi[i] - box.lo[i]);
            if (idx[i] == 0 || idx[i] + 1 == per_axis) g.on_boundary = true;
        }
        out.push_back(std::move(g));
    }
    return out;
}

inline Vector unit_direction(std::size_t n, SplitMix64& rng) {
    while (true) {
        Vector d = random_vector(n, 1.0, rng);
        const double len = norm(d);
        if (len > 1e-12) return (1.0 / len) * d;
    }
}

/// Probe set for the closed ball B_rho(center): tensor grid points inside
/// the ball plus points on the sphere (the endpoints when n = 1).
inline std::vector<Vector> ball_probes(const Vector& center, double rho, std::size_t per_axis) {
    if (!(rho > 0.0)) throw UsageError("ball probes: rho must be positive");
    if (per_axis < 3) throw UsageError("ball probes: need at least 3 points per axis");
    const std::size_t n = center.size();
    std::vector<Vector> out;
    for (auto& g : box_grid(Box(center - Vector(n, rho), center + Vector(n, rho)), per_axis)) {
        if (norm(g.x - center) <= rho * (1.0 + 1e-12)) out.push_back(std::move(g.x));
    }
    if (n == 2) {
        const std::size_t m = 8 * per_axis;
        for (std::size_t k = 0; k < m; ++k) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
            out.push_back(center + Vector{rho * std::cos(a), rho * std::sin(a)});
        }
    } else if (n >= 3) {
        SplitMix64 rng(0xba11);
        for (std::size_t k = 0; k < 8 * per_axis * per_axis; ++k) out.push_back(center + rho * unit_direction(n, rng));
    }
    return out;
}

/// Points at radii rho/100 * 2^(-k/4) around the center, in symmetric pairs
/// of directions starting with the coordinate axes. They catch kink
/// violations, which grow linearly with the distance to the center.
inline std::vector<Vector> near_probes(const Vector& center, double rho, std::size_t count = 64) {
    const std::size_t n = center.size();
    std::vector<Vector> out;
    out.reserve(count);
    SplitMix64 rng(0xc0ffee);
    Vector dir(n, 0.0);
    for (std::size_t k = 0; k < count; ++k) {
        if (k % 2 == 0) {
            const std::size_t pair = k / 2;
            if (pair < n) {
                dir.assign(n, 0.0);
                dir[pair] = 1.0;
            } else {
                dir = unit_direction(n, rng);
            }
        }
        const double radius = rho / 100.0 * std::exp2(-static_cast<double>(k) / 4.0);
        out.push_back(center + (k % 2 == 0 ? radius : -radius) * dir);
    }
    return out;
}

/// Uniform sample from the open ball B_rho(center).
inline Vector uniform_in_ball(const Vector& center, double rho, SplitMix64& rng) {
    const std::size_t n = center.size();
    const Vector d = unit_direction(n, rng);
    const double r = rho * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    return center + r * d;
}

inline Vector uniform_in_box(const Box& box, SplitMix64& rng) {
    Vector x(box.dim());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
    return x;
}

}  // namespace qcvisc
