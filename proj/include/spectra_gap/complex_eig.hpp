#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "matrix.hpp"

namespace spectra_gap {

/**
 * @brief Eigenvalues and unit right eigenvectors of a general complex matrix.
 *
 * Values are sorted by real part; values whose real parts agree to rounding
 * are ordered by imaginary part. `conditioning` is the 1-norm condition
 * number of the eigenvector matrix.
 */
struct ComplexSpectrum {
    ComplexVector values;
    ComplexMatrix vectors;
    double conditioning = 1.0;

    std::size_t dimension() const noexcept { return vectors.rows(); }
    std::size_t count() const noexcept { return values.size(); }
    ComplexVector vector(std::size_t k) const { return vectors.column(k); }
};

namespace detail {

struct Hessenberg {
    ComplexMatrix h;
    ComplexMatrix q; // a = q h q*
};

inline Hessenberg hessenberg_reduce(const ComplexMatrix& a) {
    const std::size_t n = a.rows();
    Hessenberg out{a, ComplexMatrix::identity(n)};
    auto& h = out.h;
    auto& q = out.q;
    ComplexVector v(n), w(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double xnorm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) xnorm += std::norm(h(i, k));
        xnorm = std::sqrt(xnorm);
        if (xnorm == 0.0) continue;
        const complex x0 = h(k + 1, k);
        const complex phase = std::abs(x0) > 0 ? x0 / std::abs(x0) : complex(1.0);
        const complex alpha = -phase * xnorm;
        std::fill(v.begin(), v.end(), complex{});
        for (std::size_t i = k + 1; i < n; ++i) v[i] = h(i, k);
        v[k + 1] -= alpha;
        double vnorm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vnorm += std::norm(v[i]);
        vnorm = std::sqrt(vnorm);
        if (vnorm == 0.0) continue;
        for (std::size_t i = k + 1; i < n; ++i) v[i] /= vnorm;

        // Left: h <- (I - 2 v v*) h on rows k+1..n-1.
        for (std::size_t j = k; j < n; ++j) {
            complex s{};
            for (std::size_t i = k + 1; i < n; ++i) s += std::conj(v[i]) * h(i, j);
            s *= 2.0;
            for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= v[i] * s;
        }
        // Right: h <- h (I - 2 v v*), and the same for q.
        for (ComplexMatrix* m : {&h, &q}) {
            for (std::size_t i = 0; i < n; ++i) {
                auto row = m->row(i);
                complex s{};
                for (std::size_t j = k + 1; j < n; ++j) s += row[j] * v[j];
                s *= 2.0;
                for (std::size_t j = k + 1; j < n; ++j) row[j] -= s * std::conj(v[j]);
            }
        }
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = complex{};
    }
    return out;
}

// Eigenvalue of the 2x2 block [[a, b], [c, d]] closest to d.
inline complex wilkinson_shift(complex a, complex b, complex c, complex d) {
    const complex tr_half = 0.5 * (a + d);
    const complex disc = std::sqrt(0.25 * (a - d) * (a - d) + b * c);
    const complex e1 = tr_half + disc;
    const complex e2 = tr_half - disc;
    return std::abs(e1 - d) < std::abs(e2 - d) ? e1 : e2;
}

// Single-shift QR on an upper Hessenberg matrix; eigenvalues only.
inline ComplexVector hessenberg_qr_values(ComplexMatrix h) {
    const std::size_t n = h.rows();
    ComplexVector values(n);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr int max_iter = 30;
    const double hnorm = std::max(frobenius_norm(h), std::numeric_limits<double>::min());
    std::vector<complex> cs(n), ss(n);

    std::size_t hi = n - 1;
    int iter = 0;
    while (true) {
        std::size_t lo = hi;
        while (lo > 0) {
            const double off = std::abs(h(lo, lo - 1));
            const double diag = std::abs(h(lo, lo)) + std::abs(h(lo - 1, lo - 1));
            if (off <= eps * diag || off <= eps * eps * hnorm) {
                h(lo, lo - 1) = complex{};
                break;
            }
            --lo;
        }
        if (lo == hi) {
            values[hi] = h(hi, hi);
            iter = 0;
            if (hi == 0) break;
            --hi;
            continue;
        }
        ++iter;
        require(iter <= max_iter, ErrorCode::NoConvergence, "complex QR iteration did not converge");

        complex shift;
        if (iter == 10 || iter == 20) {
            shift = h(hi, hi) + complex(std::abs(h(hi, hi - 1).real()) + std::abs(h(hi, hi - 1).imag()),
                                        0.75 * std::abs(h(hi, hi - 1)));
        } else {
            shift = wilkinson_shift(h(hi - 1, hi - 1), h(hi - 1, hi), h(hi, hi - 1), h(hi, hi));
        }

        for (std::size_t i = lo; i <= hi; ++i) h(i, i) -= shift;
        for (std::size_t k = lo; k < hi; ++k) {
            const complex x = h(k, k), y = h(k + 1, k);
            const double r = std::hypot(std::abs(x), std::abs(y));
            complex c = 1.0, s = 0.0;
            if (r > 0) {
                c = x / r;
                s = y / r;
            }
            cs[k] = c;
            ss[k] = s;
            for (std::size_t j = k; j <= hi; ++j) {
                const complex a = h(k, j), b = h(k + 1, j);
                h(k, j) = std::conj(c) * a + std::conj(s) * b;
                h(k + 1, j) = -s * a + c * b;
            }
        }
        for (std::size_t k = lo; k < hi; ++k) {
            const complex c = cs[k], s = ss[k];
            const std::size_t last = std::min(k + 2, hi);
            for (std::size_t i = lo; i <= last; ++i) {
                const complex a = h(i, k), b = h(i, k + 1);
                h(i, k) = a * c + b * s;
                h(i, k + 1) = -a * std::conj(s) + b * std::conj(c);
            }
        }
        for (std::size_t i = lo; i <= hi; ++i) h(i, i) += shift;
    }
    return values;
}

// LU with row interchanges of the shifted Hessenberg matrix h - mu I.
class HessenbergLU {
public:
    HessenbergLU(const ComplexMatrix& h, complex mu) : lu_(h), swap_(h.rows(), false), mult_(h.rows()) {
        const std::size_t n = h.rows();
        const double tiny = std::numeric_limits<double>::epsilon() * std::max(1.0, frobenius_norm(h));
        for (std::size_t i = 0; i < n; ++i) lu_(i, i) -= mu;
        for (std::size_t k = 0; k < n; ++k) {
            if (k + 1 < n && std::abs(lu_(k + 1, k)) > std::abs(lu_(k, k))) {
                swap_[k] = true;
                for (std::size_t j = k; j < n; ++j) std::swap(lu_(k, j), lu_(k + 1, j));
            }
            if (std::abs(lu_(k, k)) < tiny) lu_(k, k) = tiny;
            if (k + 1 < n) {
                const complex l = lu_(k + 1, k) / lu_(k, k);
                mult_[k] = l;
                lu_(k + 1, k) = complex{};
                for (std::size_t j = k + 1; j < n; ++j) lu_(k + 1, j) -= l * lu_(k, j);
            }
        }
    }

    void solve(ComplexVector& x) const {
        const std::size_t n = x.size();
        for (std::size_t k = 0; k + 1 < n; ++k) {
            if (swap_[k]) std::swap(x[k], x[k + 1]);
            x[k + 1] -= mult_[k] * x[k];
        }
        for (std::size_t i = n; i-- > 0;) {
            complex acc = x[i];
            auto row = lu_.row(i);
            for (std::size_t j = i + 1; j < n; ++j) acc -= row[j] * x[j];
            x[i] = acc / row[i];
        }
    }

private:
    ComplexMatrix lu_;
    std::vector<bool> swap_;
    ComplexVector mult_;
};

// 1-norm condition number via an explicit LU inverse; +inf when singular.
inline double condition_1(const ComplexMatrix& v) {
    const std::size_t n = v.rows();
    ComplexMatrix lu = v;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
        if (lu(p, k) == complex{}) return std::numeric_limits<double>::infinity();
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
            std::swap(perm[k], perm[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const complex l = lu(i, k) / lu(k, k);
            lu(i, k) = l;
            for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= l * lu(k, j);
        }
    }
    auto col_norm_max = [n](const ComplexMatrix& m) {
        double best = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += std::abs(m(i, j));
            best = std::max(best, s);
        }
        return best;
    };
    double inv_norm = 0.0;
    ComplexVector x(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t i = 0; i < n; ++i) x[i] = perm[i] == c ? complex(1.0) : complex{};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < i; ++k) x[i] -= lu(i, k) * x[k];
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t k = i + 1; k < n; ++k) x[i] -= lu(i, k) * x[k];
            x[i] /= lu(i, i);
        }
        double s = 0.0;
        for (const auto& xi : x) s += std::abs(xi);
        inv_norm = std::max(inv_norm, s);
    }
    return col_norm_max(v) * inv_norm;
}

} // namespace detail

inline constexpr double kDefectiveConditionLimit = 1e12;

/**
 * @brief Eigenpairs of a general complex matrix: Householder Hessenberg
 * reduction, Wilkinson-shifted QR for the values, inverse iteration on the
 * shifted Hessenberg form for the vectors.
 *
 * Throws DefectiveOperator when the eigenvector matrix is too ill conditioned
 * to expand in (condition above 1e12).
 */
inline ComplexSpectrum complex_eig(const ComplexMatrix& a) {
    require(a.square() && a.rows() >= 1, ErrorCode::DimensionMismatch, "complex_eig needs a nonempty square matrix");
    require(all_finite(a), ErrorCode::NonFinite, "matrix has non-finite entries");
    const std::size_t n = a.rows();
    const double anorm = frobenius_norm(a);

    auto hess = detail::hessenberg_reduce(a);
    ComplexVector mu = detail::hessenberg_qr_values(hess.h);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return mu[x].real() < mu[y].real(); });
    const double tie = 1e-10 * std::max(anorm, 1e-300);
    for (std::size_t g = 0; g < n;) {
        std::size_t e = g + 1;
        while (e < n && mu[order[e]].real() - mu[order[g]].real() <= tie) ++e;
        std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(g), order.begin() + static_cast<std::ptrdiff_t>(e),
                         [&](std::size_t x, std::size_t y) { return mu[x].imag() < mu[y].imag(); });
        g = e;
    }

    ComplexSpectrum s;
    s.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) s.values[k] = mu[order[k]];
    s.vectors = ComplexMatrix(n, n);

    const double cluster = 1e-8 * std::max(anorm, 1e-300);
    std::vector<ComplexVector> ys;
    std::normal_distribution<double> gauss;
    for (std::size_t k = 0; k < n; ++k) {
        const complex m = s.values[k];
        detail::HessenbergLU lu(hess.h, m);
        std::mt19937_64 rng(0xC0FFEEULL + k);
        ComplexVector y(n);
        for (auto& yi : y) yi = complex(gauss(rng), gauss(rng));
        double residual = 0.0;
        for (int step = 0; step < 6; ++step) {
            lu.solve(y);
            for (std::size_t p = 0; p < k; ++p) {
                if (std::abs(s.values[p] - m) > cluster) continue;
                const complex c = inner(y, ys[p]);
                for (std::size_t i = 0; i < n; ++i) y[i] -= c * ys[p][i];
            }
            const double ny = norm2(y);
            for (auto& yi : y) yi /= ny;
            if (step < 1) continue;
            auto hy = hess.h * y;
            double r = 0.0;
            for (std::size_t i = 0; i < n; ++i) r += std::norm(hy[i] - m * y[i]);
            residual = std::sqrt(r) / ((1.0 + std::abs(m)) * std::max(anorm, 1e-300));
            if (residual <= 1e-12) break;
        }
        // A multiple eigenvalue whose eigenspace is too small leaves no admissible direction.
        require(residual <= 1e-9, ErrorCode::DefectiveOperator,
                "no independent eigenvector for a repeated eigenvalue");
        ys.push_back(y);
        ComplexVector x = hess.q * y;
        const double nx = norm2(x);
        std::size_t big = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(x[i]) > std::abs(x[big])) big = i;
        const complex phase = std::abs(x[big]) > 0 ? std::conj(x[big]) / std::abs(x[big]) : complex(1.0);
        for (auto& xi : x) xi *= phase / nx;
        s.vectors.set_column(k, x);
    }
    s.conditioning = detail::condition_1(s.vectors);
    require(s.conditioning <= kDefectiveConditionLimit, ErrorCode::DefectiveOperator,
            "eigenvector matrix condition estimate exceeds 1e12");
    return s;
}

/// Largest scaled residual |H psi - mu psi| / ((1 + |mu|) ||H||_F) and unit-norm defect.
struct ComplexSpectrumCheck {
    double max_scaled_residual = 0.0;
    double max_norm_defect = 0.0;
};

inline ComplexSpectrumCheck check_spectrum(const ComplexMatrix& h, const ComplexSpectrum& s) {
    ComplexSpectrumCheck c;
    const double hf = std::max(frobenius_norm(h), 1e-300);
    for (std::size_t k = 0; k < s.count(); ++k) {
        auto v = s.vector(k);
        auto hv = h * v;
        double r = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) r += std::norm(hv[i] - s.values[k] * v[i]);
        c.max_scaled_residual = std::max(c.max_scaled_residual, std::sqrt(r) / ((1.0 + std::abs(s.values[k])) * hf));
        c.max_norm_defect = std::max(c.max_norm_defect, std::abs(norm2(v) - 1.0));
    }
    return c;
}

} // namespace spectra_gap
