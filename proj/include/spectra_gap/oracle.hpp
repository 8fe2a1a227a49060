#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "matrix.hpp"

namespace spectra_gap::oracle {

enum class AnalyticKind { interval_dirichlet, interval_neumann, rectangle_dirichlet, rectangle_neumann };

struct AnalyticProblem {
    AnalyticKind kind = AnalyticKind::interval_dirichlet;
    double length1 = 1.0;
    double length2 = 1.0;
};

/// Lowest `count` eigenvalues of -Laplace on an interval or rectangle, with multiplicity.
inline RealVector analytic_spectrum(const AnalyticProblem& p, std::size_t count) {
    require(count >= 1, ErrorCode::InvalidArgument, "count must be positive");
    require(p.length1 > 0 && p.length2 > 0, ErrorCode::InvalidArgument, "lengths must be positive");
    const double pi = std::numbers::pi;
    const bool neumann = p.kind == AnalyticKind::interval_neumann || p.kind == AnalyticKind::rectangle_neumann;
    const std::size_t first = neumann ? 0 : 1;
    auto mode = [&](std::size_t k, double len) { return std::pow(static_cast<double>(k) * pi / len, 2); };
    RealVector out;
    if (p.kind == AnalyticKind::interval_dirichlet || p.kind == AnalyticKind::interval_neumann) {
        for (std::size_t k = first; out.size() < count; ++k) out.push_back(mode(k, p.length1));
        return out;
    }
    // Enough modes in each direction to cover the lowest `count` sums.
    const std::size_t kmax = first + count + 1;
    for (std::size_t a = first; a < kmax; ++a)
        for (std::size_t b = first; b < kmax; ++b) out.push_back(mode(a, p.length1) + mode(b, p.length2));
    std::sort(out.begin(), out.end());
    out.resize(count);
    return out;
}

struct RichardsonResult {
    double extrapolated = 0.0;
    double order = 0.0;
    bool converged = false; // differences vanished; order undefined
};

/**
 * @brief Richardson extrapolation from values at h, h/2, h/4.
 *
 * order = log2((v_h - v_{h/2}) / (v_{h/2} - v_{h/4})); the leading error term
 * of that order is eliminated from v_{h/4}.
 */
inline RichardsonResult richardson(double v_h, double v_h2, double v_h4) {
    const double d1 = v_h - v_h2;
    const double d2 = v_h2 - v_h4;
    const double scale = std::max({std::abs(v_h), std::abs(v_h2), std::abs(v_h4), 1e-300});
    RichardsonResult r;
    if (std::abs(d1) <= 1e-14 * scale && std::abs(d2) <= 1e-14 * scale) {
        r.extrapolated = v_h4;
        r.converged = true;
        return r;
    }
    require(d1 * d2 > 0.0, ErrorCode::NonMonotone, "successive differences change sign");
    r.order = std::log2(d1 / d2);
    const double f = std::pow(2.0, r.order);
    r.extrapolated = v_h4 - d2 / (f - 1.0);
    return r;
}

/// Both sides of an identity, computed by naive triple products.
struct BruteForceSides {
    complex lhs;
    complex rhs;
};

namespace naive {

inline ComplexMatrix mul(const ComplexMatrix& a, const ComplexMatrix& b) {
    const std::size_t n = a.rows();
    ComplexMatrix c(n, b.cols());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            complex s{};
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline ComplexMatrix sub(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
    return c;
}

inline ComplexMatrix dagger(const ComplexMatrix& a) {
    ComplexMatrix c(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(j, i) = std::conj(a(i, j));
    return c;
}

// <x, y> = sum x_i conj(y_i)
inline complex dot(const ComplexVector& x, const ComplexVector& y) {
    complex s{};
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * std::conj(y[i]);
    return s;
}

inline ComplexVector apply(const ComplexMatrix& a, const ComplexVector& x) {
    ComplexVector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) y[i] += a(i, k) * x[k];
    return y;
}

} // namespace naive

/**
 * @brief Single-operator identities id1..id4 and id3bis ("id3bis": G is the
 * skew F and the identity is taken for [H, F]) by explicit products.
 *
 * Terms with |lambda_k - lambda_j| <= tau are dropped. The eigenpairs are
 * supplied by the caller (values ascending, vectors as columns).
 */
inline BruteForceSides brute_force_identity(const RealMatrix& h_in, const RealMatrix& g_in, const std::string& which,
                                            std::size_t j, const RealVector& lambda, const RealMatrix& phi,
                                            double tau) {
    const std::size_t n = h_in.rows();
    ComplexMatrix h(n, n), g(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            h(r, c) = h_in(r, c);
            g(r, c) = g_in(r, c);
        }
    if (which == "id3bis") g = naive::sub(naive::mul(h, g), naive::mul(g, h));
    const ComplexMatrix hg = naive::sub(naive::mul(h, g), naive::mul(g, h));
    const ComplexMatrix hgg = naive::sub(naive::mul(hg, g), naive::mul(g, hg));
    std::vector<ComplexVector> v(n, ComplexVector(n));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t r = 0; r < n; ++r) v[k][r] = phi(r, k);
    const ComplexVector& pj = v[j];
    const double lj = lambda[j];

    BruteForceSides s{};
    if (which == "id1") {
        for (std::size_t k = 0; k < n; ++k)
            if (std::abs(lambda[k] - lj) > tau) s.lhs += std::norm(naive::dot(naive::apply(hg, pj), v[k])) / (lambda[k] - lj);
        s.rhs = -0.5 * naive::dot(naive::apply(hgg, pj), pj);
    } else if (which == "id2") {
        for (std::size_t k = 0; k < n; ++k) s.lhs += (lambda[k] - lj) * std::norm(naive::dot(naive::apply(g, pj), v[k]));
        s.rhs = -0.5 * naive::dot(naive::apply(hgg, pj), pj);
    } else if (which == "id3" || which == "id3bis") {
        for (std::size_t k = 0; k < n; ++k)
            if (std::abs(lambda[k] - lj) > tau)
                s.lhs += std::norm(naive::dot(naive::apply(hg, pj), v[k])) / std::pow(lambda[k] - lj, 2);
        if (which == "id3bis") {
            s.rhs = naive::dot(naive::apply(g, pj), naive::apply(g, pj));
        } else {
            const ComplexVector gp = naive::apply(g, pj);
            double proj = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                if (std::abs(lambda[k] - lj) <= tau) proj += std::norm(naive::dot(gp, v[k]));
            s.rhs = naive::dot(gp, gp) - proj;
        }
    } else if (which == "id4") {
        for (std::size_t k = 0; k < n; ++k)
            s.lhs += (lambda[k] - lj) * (lambda[k] - lj) * std::norm(naive::dot(naive::apply(g, pj), v[k]));
        const ComplexVector c = naive::apply(hg, pj);
        s.rhs = naive::dot(c, c);
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown identity " + which);
    }
    return s;
}

/**
 * @brief Pair identities ti1..ti5 by explicit products.
 *
 * lambda/phi: eigenpairs of the self-adjoint h1. mu/psi: eigenvalue and unit
 * eigenvector of h2 for the selected j.
 */
inline BruteForceSides brute_force_pair_identity(const ComplexMatrix& h1, const ComplexMatrix& h2,
                                                 const ComplexMatrix& g1, const ComplexMatrix& g2,
                                                 const std::string& which, complex mu, const ComplexVector& psi,
                                                 const RealVector& lambda, const ComplexMatrix& phi, double tau) {
    const std::size_t n = h1.rows();
    const ComplexMatrix g1s = naive::dagger(g1);
    const ComplexMatrix a = naive::sub(naive::mul(h1, g1s), naive::mul(g1s, h2));
    const ComplexMatrix b = naive::sub(naive::mul(h1, g2), naive::mul(g2, h2));
    const ComplexMatrix g2s = naive::dagger(g2);
    const ComplexMatrix c = naive::sub(naive::mul(naive::dagger(h2), g2s), naive::mul(g2s, h1));
    const ComplexMatrix cg = naive::mul(c, g1s);
    const ComplexMatrix gb = naive::mul(g1, b);
    ComplexMatrix dplus(n, n), dminus(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t q = 0; q < n; ++q) {
            dplus(r, q) = cg(r, q) + gb(r, q);
            dminus(r, q) = cg(r, q) - gb(r, q);
        }
    const ComplexVector apsi = naive::apply(a, psi), bpsi = naive::apply(b, psi);
    BruteForceSides s{};
    complex sum{};
    double sum3 = 0.0, sum4 = 0.0;
    complex sum5{};
    for (std::size_t k = 0; k < n; ++k) {
        const complex dist = lambda[k] - mu;
        if (std::abs(dist) <= tau) continue;
        ComplexVector pk(n);
        for (std::size_t r = 0; r < n; ++r) pk[r] = phi(r, k);
        const complex ba = naive::dot(bpsi, pk) * std::conj(naive::dot(apsi, pk));
        sum += dist / std::norm(dist) * ba;
        const double a2 = std::norm(naive::dot(apsi, pk));
        sum3 += (lambda[k] - mu.real()) / std::norm(dist) * a2;
        sum4 += mu.imag() / std::norm(dist) * a2;
        sum5 += std::norm(naive::dot(bpsi, pk)) / dist;
    }
    if (which == "ti1") {
        s.lhs = sum.real();
        s.rhs = -0.5 * naive::dot(naive::apply(dminus, psi), psi);
    } else if (which == "ti2") {
        s.lhs = complex(0.0, sum.imag());
        s.rhs = 0.5 * naive::dot(naive::apply(dplus, psi), psi);
    } else if (which == "ti3") {
        s.lhs = sum3;
        s.rhs = -0.5 * naive::dot(naive::apply(dminus, psi), psi);
    } else if (which == "ti4") {
        s.lhs = complex(0.0, sum4);
        s.rhs = -0.5 * naive::dot(naive::apply(dplus, psi), psi);
    } else if (which == "ti5") {
        s.lhs = sum5;
        s.rhs = -0.5 * naive::dot(naive::apply(dminus, psi), psi);
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown pair identity " + which);
    }
    return s;
}

} // namespace spectra_gap::oracle
