#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "error.hpp"

namespace spectra_gap {

using complex = std::complex<double>;

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};
template <typename T>
inline constexpr bool is_complex_v = is_complex<T>::value;

inline double conj_of(double x) { return x; }
inline complex conj_of(const complex& z) { return std::conj(z); }
inline double abs2(double x) { return x * x; }
inline double abs2(const complex& z) { return std::norm(z); }

/**
 * @brief Dense row-major matrix over double or std::complex<double>.
 *
 * Square operators are the common case but rectangular shapes are allowed
 * (overlap tables, eigenvector blocks).
 */
template <typename T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    static Matrix diagonal(std::span<const T> d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    std::vector<T> column(std::size_t j) const {
        std::vector<T> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    void set_column(std::size_t j, std::span<const T> c) {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
    }

    Matrix& operator+=(const Matrix& o) {
        check_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }

    Matrix& operator-=(const Matrix& o) {
        check_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }

    Matrix& operator*=(T s) {
        for (auto& x : data_) x *= s;
        return *this;
    }

    bool operator==(const Matrix& o) const = default;

private:
    void check_same_shape(const Matrix& o) const {
        require(rows_ == o.rows_ && cols_ == o.cols_, ErrorCode::DimensionMismatch,
                "matrix shapes differ");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<complex>;
using RealVector = std::vector<double>;
using ComplexVector = std::vector<complex>;

template <typename T>
Matrix<T> operator+(Matrix<T> a, const Matrix<T>& b) { return a += b; }

template <typename T>
Matrix<T> operator-(Matrix<T> a, const Matrix<T>& b) { return a -= b; }

template <typename T>
Matrix<T> operator*(T s, Matrix<T> a) { return a *= s; }

template <typename T>
Matrix<T> operator-(Matrix<T> a) { return a *= T{-1}; }

template <typename T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
    require(a.cols() == b.rows(), ErrorCode::DimensionMismatch, "matrix product shapes");
    Matrix<T> c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        auto ai = a.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const T aik = ai[k];
            if (aik == T{}) continue;
            auto bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

template <typename T>
std::vector<T> operator*(const Matrix<T>& a, std::span<const T> x) {
    require(a.cols() == x.size(), ErrorCode::DimensionMismatch, "matrix-vector shapes");
    std::vector<T> y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ai = a.row(i);
        T acc{};
        for (std::size_t j = 0; j < x.size(); ++j) acc += ai[j] * x[j];
        y[i] = acc;
    }
    return y;
}

template <typename T>
std::vector<T> operator*(const Matrix<T>& a, const std::vector<T>& x) {
    return a * std::span<const T>(x);
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
    Matrix<T> t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// Conjugate transpose.
template <typename T>
Matrix<T> adjoint(const Matrix<T>& a) {
    Matrix<T> t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = conj_of(a(i, j));
    return t;
}

inline ComplexMatrix to_complex(const RealMatrix& a) {
    ComplexMatrix c(a.rows(), a.cols());
    auto src = a.data();
    auto dst = c.data();
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k];
    return c;
}

inline ComplexVector to_complex(std::span<const double> v) {
    return ComplexVector(v.begin(), v.end());
}

template <typename T>
double frobenius_norm(const Matrix<T>& a) {
    double s = 0.0;
    for (const auto& x : a.data()) s += abs2(x);
    return std::sqrt(s);
}

template <typename T>
double max_abs(const Matrix<T>& a) {
    double m = 0.0;
    for (const auto& x : a.data()) m = std::max(m, std::abs(x));
    return m;
}

template <typename T>
bool all_finite(const Matrix<T>& a) {
    for (const auto& x : a.data()) {
        if constexpr (is_complex_v<T>) {
            if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
        } else {
            if (!std::isfinite(x)) return false;
        }
    }
    return true;
}

/// Bandwidth max |i - j| over nonzero entries of a square matrix.
template <typename T>
std::size_t bandwidth(const Matrix<T>& a) {
    std::size_t b = 0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (r[j] != T{}) b = std::max(b, i > j ? i - j : j - i);
    }
    return b;
}

/// Inner product <x, y> = sum x_i conj(y_i), linear in the first slot.
template <typename T>
T inner(std::span<const T> x, std::span<const T> y) {
    require(x.size() == y.size(), ErrorCode::DimensionMismatch, "inner product lengths");
    T acc{};
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * conj_of(y[i]);
    return acc;
}

template <typename T>
T inner(const std::vector<T>& x, const std::vector<T>& y) {
    return inner(std::span<const T>(x), std::span<const T>(y));
}

template <typename T>
double norm2(std::span<const T> x) {
    double s = 0.0;
    for (const auto& v : x) s += abs2(v);
    return std::sqrt(s);
}

template <typename T>
double norm2(const std::vector<T>& x) { return norm2(std::span<const T>(x)); }

template <typename T>
double norm2_squared(const std::vector<T>& x) {
    double s = 0.0;
    for (const auto& v : x) s += abs2(v);
    return s;
}

template <typename T>
std::vector<T> axpy(T alpha, const std::vector<T>& x, std::vector<T> y) {
    require(x.size() == y.size(), ErrorCode::DimensionMismatch, "axpy lengths");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
    return y;
}

/**
 * @brief Real symmetric matrix (strong type).
 *
 * Construction checks |a_ij - a_ji| <= 1e-12 * max|a|. `symmetrized` averages
 * the two triangles instead, for assembly code.
 */
class RealSymMatrix {
public:
    RealSymMatrix() = default;

    explicit RealSymMatrix(RealMatrix m) : m_(std::move(m)) {
        require(m_.square(), ErrorCode::DimensionMismatch, "symmetric matrix must be square");
        require(all_finite(m_), ErrorCode::NonFinite, "matrix has non-finite entries");
        const double tol = 1e-12 * max_abs(m_);
        const std::size_t n = m_.rows();
        constexpr std::size_t tile = 64;
        for (std::size_t i0 = 0; i0 < n; i0 += tile)
            for (std::size_t j0 = 0; j0 <= i0; j0 += tile)
                for (std::size_t i = i0; i < std::min(n, i0 + tile); ++i)
                    for (std::size_t j = j0; j < std::min(i, j0 + tile); ++j)
                        if (std::abs(m_(i, j) - m_(j, i)) > tol)
                            throw Error(ErrorCode::NotSymmetric, "entry (" + std::to_string(i) + "," +
                                                                     std::to_string(j) + ") breaks symmetry");
    }

    static RealSymMatrix symmetrized(RealMatrix m) {
        require(m.square(), ErrorCode::DimensionMismatch, "symmetric matrix must be square");
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < i; ++j) {
                const double v = 0.5 * (m(i, j) + m(j, i));
                m(i, j) = v;
                m(j, i) = v;
            }
        return RealSymMatrix(std::move(m));
    }

    std::size_t size() const noexcept { return m_.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const RealMatrix& matrix() const noexcept { return m_; }

    std::vector<double> apply(std::span<const double> x) const { return m_ * x; }
    std::vector<double> apply(const std::vector<double>& x) const { return m_ * x; }

    bool operator==(const RealSymMatrix&) const = default;

private:
    RealMatrix m_;
};

inline bool is_symmetric(const RealMatrix& m, double rel_tol = 1e-12) {
    if (!m.square()) return false;
    const double tol = rel_tol * max_abs(m);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol) return false;
    return true;
}

inline bool is_antisymmetric(const RealMatrix& m, double rel_tol = 1e-12) {
    if (!m.square()) return false;
    const double tol = rel_tol * max_abs(m);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j <= i; ++j)
            if (std::abs(m(i, j) + m(j, i)) > tol) return false;
    return true;
}

inline bool is_hermitian(const ComplexMatrix& m, double rel_tol = 1e-12) {
    if (!m.square()) return false;
    const double tol = rel_tol * max_abs(m);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j <= i; ++j)
            if (std::abs(m(i, j) - std::conj(m(j, i))) > tol) return false;
    return true;
}

} // namespace spectra_gap
