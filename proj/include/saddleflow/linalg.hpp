#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "saddleflow/errors.hpp"
#include "saddleflow/rng.hpp"

namespace saddleflow {

using Vector = std::vector<double>;

inline bool all_finite(std::span<const double> v) noexcept {
    return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

inline void require_finite(std::span<const double> v, const char* what) {
    if (!all_finite(v)) {
        throw NumericalError(std::string("non-finite entry in ") + what);
    }
}

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("matrix entry count " + std::to_string(data_.size()) + " != " +
                                 std::to_string(rows_) + "x" + std::to_string(cols_));
        }
        require_finite(data_, "matrix");
    }

    static Matrix identity(std::size_t n) {
        Matrix id(n, n);
        for (std::size_t i = 0; i < n; ++i) id(i, i) = 1.0;
        return id;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
    const std::vector<double>& data() const noexcept { return data_; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(std::span<const double> a) noexcept {
    double s = 0.0;
    for (double e : a) s += e * e;
    return s;
}

inline double norm(std::span<const double> a) noexcept { return std::sqrt(squared_norm(a)); }

inline double max_abs(std::span<const double> a) noexcept {
    double m = 0.0;
    for (double e : a) m = std::max(m, std::abs(e));
    return m;
}

// out += alpha * v
inline void axpy(double alpha, std::span<const double> v, std::span<double> out) {
    if (v.size() != out.size()) throw DimensionError("axpy: size mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += alpha * v[i];
}

inline Vector operator+(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionError("vector +: size mismatch");
    Vector r(a);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

inline Vector operator-(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionError("vector -: size mismatch");
    Vector r(a);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

inline Vector operator*(double s, const Vector& a) {
    Vector r(a);
    for (double& e : r) e *= s;
    return r;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("distance: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

inline Vector concat(std::span<const double> a, std::span<const double> b) {
    Vector r(a.begin(), a.end());
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

/// out = A v, writing into caller storage.
inline void matvec_into(const Matrix& a, std::span<const double> v, std::span<double> out) {
    if (a.cols() != v.size() || a.rows() != out.size()) {
        throw DimensionError("matvec: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                             " matrix with vector of size " + std::to_string(v.size()));
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto r = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * v[j];
        out[i] = s;
    }
}

/// out = Aᵀ v, without forming the transpose.
inline void matvec_transpose_into(const Matrix& a, std::span<const double> v, std::span<double> out) {
    if (a.rows() != v.size() || a.cols() != out.size()) {
        throw DimensionError("matvec_transpose: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                             " matrix with vector of size " + std::to_string(v.size()));
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto r = a.row(i);
        const double vi = v[i];
        for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j] * vi;
    }
}

inline Vector matvec(const Matrix& a, std::span<const double> v) {
    Vector out(a.rows());
    matvec_into(a, v, out);
    require_finite(out, "matvec result");
    return out;
}

inline Vector matvec_transpose(const Matrix& a, std::span<const double> v) {
    Vector out(a.cols());
    matvec_transpose_into(a, v, out);
    require_finite(out, "matvec_transpose result");
    return out;
}

namespace detail {

// Modified Gram-Schmidt, applied twice per column. Returns false on a column
// whose residual collapses relative to its original norm.
inline bool orthonormalize_columns(Matrix& q) {
    const std::size_t rows = q.rows();
    const std::size_t cols = q.cols();
    for (std::size_t j = 0; j < cols; ++j) {
        double original = 0.0;
        for (std::size_t i = 0; i < rows; ++i) original += q(i, j) * q(i, j);
        original = std::sqrt(original);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < j; ++k) {
                double proj = 0.0;
                for (std::size_t i = 0; i < rows; ++i) proj += q(i, k) * q(i, j);
                for (std::size_t i = 0; i < rows; ++i) q(i, j) -= proj * q(i, k);
            }
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < rows; ++i) nrm += q(i, j) * q(i, j);
        nrm = std::sqrt(nrm);
        if (!(nrm > 1e-10 * original) || nrm == 0.0) return false;
        for (std::size_t i = 0; i < rows; ++i) q(i, j) /= nrm;
    }
    return true;
}

} // namespace detail

/// Orthonormal columns from the QR factorization of a rows×cols
/// standard-normal matrix. Entries are drawn row-major. A numerically
/// rank-deficient draw is replaced once before giving up.
inline Matrix qr_orthonormal(SeededRng& rng, std::size_t rows, std::size_t cols) {
    if (cols < 1 || rows < cols) {
        throw DimensionError("qr_orthonormal requires rows >= cols >= 1, got " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
    for (int attempt = 0; attempt < 2; ++attempt) {
        Matrix q(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) q(i, j) = normal_sample(rng);
        if (detail::orthonormalize_columns(q)) return q;
    }
    throw NumericalError("qr_orthonormal: rank-deficient draw persisted after re-draw");
}

} // namespace saddleflow
