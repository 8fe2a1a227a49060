#pragma once

#include "matrix.hpp"

namespace spectra_gap {

/// [A, B] = AB - BA.
template <typename T>
Matrix<T> commutator(const Matrix<T>& a, const Matrix<T>& b) {
    require(a.square() && b.square() && a.rows() == b.rows(), ErrorCode::DimensionMismatch,
            "commutator needs equal square matrices");
    return a * b - b * a;
}

/// Mixing commutator [X, Y; Z] = XZ - ZY.
template <typename T>
Matrix<T> mixed_commutator(const Matrix<T>& x, const Matrix<T>& y, const Matrix<T>& z) {
    require(x.square() && y.square() && z.square() && x.rows() == y.rows() && x.rows() == z.rows(),
            ErrorCode::DimensionMismatch, "mixing commutator needs equal square matrices");
    return x * z - z * y;
}

enum class BracketSign { plus, minus };

/// {X, Y; Z}_+- = XZ +- Z* Y.
template <typename T>
Matrix<T> curly_bracket(const Matrix<T>& x, const Matrix<T>& y, const Matrix<T>& z, BracketSign sign) {
    require(x.square() && y.square() && z.square() && x.rows() == y.rows() && x.rows() == z.rows(),
            ErrorCode::DimensionMismatch, "curly bracket needs equal square matrices");
    Matrix<T> zy = adjoint(z) * y;
    Matrix<T> out = x * z;
    if (sign == BracketSign::plus)
        out += zy;
    else
        out -= zy;
    return out;
}

/// [H, G] v computed with two matrix-vector products.
template <typename T>
std::vector<T> apply_commutator(const Matrix<T>& h, const Matrix<T>& g, const std::vector<T>& v) {
    auto hgv = h * (g * v);
    auto ghv = g * (h * v);
    for (std::size_t i = 0; i < v.size(); ++i) hgv[i] -= ghv[i];
    return hgv;
}

/// [[H, G], G] v = [H,G](G v) - G([H,G] v).
template <typename T>
std::vector<T> apply_double_commutator(const Matrix<T>& h, const Matrix<T>& g, const std::vector<T>& v) {
    auto first = apply_commutator(h, g, g * v);
    auto second = g * apply_commutator(h, g, v);
    for (std::size_t i = 0; i < v.size(); ++i) first[i] -= second[i];
    return first;
}

} // namespace spectra_gap
