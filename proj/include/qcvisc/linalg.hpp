#pragma once
// Small dense symmetric linear algebra: vectors, packed symmetric matrices,
// cyclic Jacobi eigenvalues and Loewner-order comparisons.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qcvisc/random.hpp"

namespace qcvisc {

/// Thrown when an operation is called outside its declared preconditions
/// (dimension mismatch, non-positive radius, ...).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Vector = std::vector<double>;

inline void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw UsageError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

inline Vector operator+(const Vector& a, const Vector& b) {
    require_same_dim(a.size(), b.size(), "vector add");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vector operator-(const Vector& a, const Vector& b) {
    require_same_dim(a.size(), b.size(), "vector sub");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vector operator-(const Vector& a) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
    return r;
}

inline Vector operator*(double s, const Vector& a) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

/// Symmetric n x n matrix stored as its packed upper triangle, so symmetry
/// holds by construction.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t n) : n_(n), data_(n * (n + 1) / 2, 0.0) {
        if (n == 0) throw UsageError("SymMatrix: dimension must be positive");
    }

    /// Builds from a full row-major matrix; the strict lower triangle must
    /// mirror the upper one within `sym_tol`.
    static SymMatrix from_rows(const std::vector<Vector>& rows, double sym_tol = 1e-12) {
        SymMatrix m(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            require_same_dim(rows[i].size(), rows.size(), "SymMatrix::from_rows");
            for (std::size_t j = i; j < rows.size(); ++j) {
                if (std::abs(rows[i][j] - rows[j][i]) > sym_tol * (1.0 + std::abs(rows[i][j]))) {
                    throw UsageError("SymMatrix::from_rows: input is not symmetric");
                }
                m.set(i, j, rows[i][j]);
            }
        }
        return m;
    }

    static SymMatrix identity(std::size_t n) { return scalar(n, 1.0); }

    static SymMatrix scalar(std::size_t n, double s) {
        SymMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m.set(i, i, s);
        return m;
    }

    static SymMatrix diag(std::initializer_list<double> d) {
        return diag(Vector(d));
    }

    static SymMatrix diag(const Vector& d) {
        SymMatrix m(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m.set(i, i, d[i]);
        return m;
    }

    std::size_t dim() const noexcept { return n_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[index(i, j)]; }
    void set(std::size_t i, std::size_t j, double v) { data_[index(i, j)] = v; }

    std::span<const double> packed() const noexcept { return data_; }

    std::vector<Vector> rows() const {
        std::vector<Vector> out(n_, Vector(n_));
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) out[i][j] = (*this)(i, j);
        return out;
    }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
        return t;
    }

    /// Max-entry norm |A|_inf (entrywise).
    double max_norm() const { return max_abs(data_); }

    Vector apply(std::span<const double> y) const {
        require_same_dim(y.size(), n_, "SymMatrix::apply");
        Vector out(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) out[i] += (*this)(i, j) * y[j];
        return out;
    }

    double quad_form(std::span<const double> y) const {
        require_same_dim(y.size(), n_, "SymMatrix::quad_form");
        double s = 0.0;
        std::size_t k = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            s += data_[k++] * y[i] * y[i];
            for (std::size_t j = i + 1; j < n_; ++j) s += 2.0 * data_[k++] * y[i] * y[j];
        }
        return s;
    }

    SymMatrix& operator+=(const SymMatrix& o) {
        require_same_dim(n_, o.n_, "SymMatrix +=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    SymMatrix& operator-=(const SymMatrix& o) {
        require_same_dim(n_, o.n_, "SymMatrix -=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    SymMatrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
    friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
    friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
    friend SymMatrix operator-(SymMatrix a) { return a *= -1.0; }

    bool operator==(const SymMatrix&) const = default;

private:
    std::size_t index(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        if (j >= n_) throw UsageError("SymMatrix: index out of range");
        return i * n_ - i * (i - 1) / 2 + (j - i);
    }

    std::size_t n_ = 0;
    Vector data_;
};

struct EigenDecomposition {
    Vector values;                 // ascending
    std::vector<Vector> vectors;   // vectors[k] is the unit eigenvector for values[k]
};

/// Cyclic Jacobi rotations. Intended for n <= 8; converges quadratically.
inline EigenDecomposition eigen_decompose(const SymMatrix& m) {
    const std::size_t n = m.dim();
    std::vector<Vector> a = m.rows();
    std::vector<Vector> v(n, Vector(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    const double scale = 1.0 + m.max_norm();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (std::sqrt(off) <= 1e-15 * scale) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p];
                    const double vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a[x][x] < a[y][y]; });

    EigenDecomposition out;
    out.values.reserve(n);
    out.vectors.reserve(n);
    for (std::size_t k : order) {
        out.values.push_back(a[k][k]);
        Vector col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = v[i][k];
        out.vectors.push_back(std::move(col));
    }
    return out;
}

inline Vector eigenvalues(const SymMatrix& m) { return eigen_decompose(m).values; }

inline double lambda_min(const SymMatrix& m) {
    if (m.dim() == 1) return m(0, 0);
    return eigenvalues(m).front();
}

inline double lambda_max(const SymMatrix& m) {
    if (m.dim() == 1) return m(0, 0);
    return eigenvalues(m).back();
}

/// k-th eigenvalue in ascending order, 1-based (k = 1 is lambda_min).
inline double lambda_k(const SymMatrix& m, std::size_t k) {
    if (k < 1 || k > m.dim()) throw UsageError("lambda_k: index out of range");
    return eigenvalues(m)[k - 1];
}

/// A <= B in the Loewner order, with slack: lambda_min(B - A) >= -tol.
inline bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
    require_same_dim(a.dim(), b.dim(), "loewner_leq");
    if (tol < 0.0) throw UsageError("loewner_leq: tol must be non-negative");
    return lambda_min(b - a) >= -tol;
}

/// Default Loewner slack: 1e-9 relative to 1 + max norm of the operands.
inline double default_loewner_tol(const SymMatrix& a, const SymMatrix& b) {
    return 1e-9 * (1.0 + std::max(a.max_norm(), b.max_norm()));
}

/// Random symmetric matrix with independent standard normal entries.
inline SymMatrix random_symmetric(std::size_t n, double scale, SplitMix64& rng) {
    SymMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) m.set(i, j, scale * rng.normal());
    return m;
}

/// Positive semidefinite matrix (scale / n) * G^T G with Gaussian G.
inline SymMatrix random_psd(std::size_t n, double scale, SplitMix64& rng) {
    if (n < 1) throw UsageError("random_psd: n must be >= 1");
    if (!(scale > 0.0)) throw UsageError("random_psd: scale must be positive");
    std::vector<Vector> g(n, Vector(n));
    for (auto& row : g)
        for (double& e : row) e = rng.normal();
    SymMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += g[k][i] * g[k][j];
            m.set(i, j, scale * s / static_cast<double>(n));
        }
    }
    return m;
}

inline SymMatrix random_psd(std::size_t n, double scale, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return random_psd(n, scale, rng);
}

inline Vector random_vector(std::size_t n, double scale, SplitMix64& rng) {
    Vector v(n);
    for (double& e : v) e = scale * rng.normal();
    return v;
}

}  // namespace qcvisc
