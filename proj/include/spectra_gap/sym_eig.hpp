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
 * @brief Eigenvalues (ascending) and orthonormal eigenvectors of a real
 * symmetric matrix.
 *
 * Column k of `vectors` pairs with values[k]. A spectrum may hold only the
 * lowest `count()` pairs; trace identities require a complete one.
 */
struct Spectrum {
    RealVector values;
    RealMatrix vectors;

    std::size_t dimension() const noexcept { return vectors.rows(); }
    std::size_t count() const noexcept { return values.size(); }
    bool complete() const noexcept { return count() == dimension() && dimension() > 0; }
    RealVector vector(std::size_t k) const { return vectors.column(k); }
};

namespace detail {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxSweepsPerEigenvalue = 30;

// Householder reduction of a symmetric matrix to tridiagonal form, accumulating
// the orthogonal transformation in v. On exit d holds the diagonal and e the
// subdiagonal in e[1..n-1].
inline void householder_tridiagonalize(RealMatrix& v, RealVector& d, RealVector& e) {
    const std::size_t n = v.rows();
    d.assign(n, 0.0);
    e.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

    for (std::size_t i = n - 1; i > 0; --i) {
        double scale = 0.0;
        double h = 0.0;
        for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
        if (scale == 0.0) {
            e[i] = d[i - 1];
            for (std::size_t j = 0; j < i; ++j) {
                d[j] = v(i - 1, j);
                v(i, j) = 0.0;
                v(j, i) = 0.0;
            }
        } else {
            for (std::size_t k = 0; k < i; ++k) {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            double f = d[i - 1];
            double g = std::sqrt(h);
            if (f > 0) g = -g;
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                v(j, i) = f;
                g = e[j] + v(j, j) * f;
                for (std::size_t k = j + 1; k + 1 <= i; ++k) {
                    g += v(k, j) * d[k];
                    e[k] += v(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                e[j] /= h;
                f += e[j] * d[j];
            }
            const double hh = f / (h + h);
            for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                g = e[j];
                for (std::size_t k = j; k + 1 <= i; ++k) v(k, j) -= (f * e[k] + g * d[k]);
                d[j] = v(i - 1, j);
                v(i, j) = 0.0;
            }
        }
        d[i] = h;
    }

    for (std::size_t i = 0; i + 1 < n; ++i) {
        v(n - 1, i) = v(i, i);
        v(i, i) = 1.0;
        const double h = d[i + 1];
        if (h != 0.0) {
            for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
            for (std::size_t j = 0; j <= i; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
                for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
            }
        }
        for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) {
        d[j] = v(n - 1, j);
        v(n - 1, j) = 0.0;
    }
    v(n - 1, n - 1) = 1.0;
    e[0] = 0.0;
}

// Implicit-shift QL on a symmetric tridiagonal matrix (diagonal d, subdiagonal
// e[1..n-1]). If zt is non-null its rows are the current basis vectors and are
// rotated along (zt is the transpose of the accumulated eigenvector matrix).
inline void implicit_ql(RealVector& d, RealVector& e, RealMatrix* zt) {
    const std::size_t n = d.size();
    if (n == 0) return;
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;

    double shift_total = 0.0;
    double tst1 = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
        std::size_t m = l;
        while (m < n) {
            if (m + 1 == n) break;
            const double adjacent = std::abs(d[m]) + std::abs(d[m + 1]);
            if (std::abs(e[m]) <= kEps * adjacent || std::abs(e[m]) <= kEps * tst1) break;
            ++m;
        }
        if (m > l) {
            int sweeps = 0;
            do {
                require(++sweeps <= kMaxSweepsPerEigenvalue, ErrorCode::NoConvergence,
                        "implicit QL exceeded the sweep cap; rescale the operator");
                double g = d[l];
                double p = (d[l + 1] - g) / (2.0 * e[l]);
                double r = std::hypot(p, 1.0);
                if (p < 0) r = -r;
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                const double dl1 = d[l + 1];
                double h = g - d[l];
                for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
                shift_total += h;

                p = d[m];
                double c = 1.0, c2 = 1.0, c3 = 1.0;
                const double el1 = e[l + 1];
                double s = 0.0, s2 = 0.0;
                for (std::size_t ii = m; ii-- > l;) {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[ii];
                    h = c * p;
                    r = std::hypot(p, e[ii]);
                    e[ii + 1] = s * r;
                    s = e[ii] / r;
                    c = p / r;
                    p = c * d[ii] - s * g;
                    d[ii + 1] = h + s * (c * g + s * d[ii]);
                    if (zt) {
                        auto zi = zt->row(ii);
                        auto zi1 = zt->row(ii + 1);
                        for (std::size_t k = 0; k < zi.size(); ++k) {
                            const double t = zi1[k];
                            zi1[k] = s * zi[k] + c * t;
                            zi[k] = c * zi[k] - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while (std::abs(e[l]) > kEps * tst1 &&
                     std::abs(e[l]) > kEps * (std::abs(d[l]) + std::abs(d[l + 1])));
        }
        d[l] += shift_total;
        e[l] = 0.0;
    }
}

// Largest-magnitude component positive, so vectors are reproducible.
inline void fix_sign(std::span<double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[best])) best = i;
    if (!v.empty() && v[best] < 0)
        for (auto& x : v) x = -x;
}

// Sorts eigenpairs ascending; zt rows are eigenvectors.
inline Spectrum assemble_spectrum(const RealVector& d, const RealMatrix& zt, std::size_t keep) {
    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    Spectrum s;
    s.values.resize(keep);
    s.vectors = RealMatrix(zt.cols(), keep);
    RealVector col(zt.cols());
    for (std::size_t k = 0; k < keep; ++k) {
        s.values[k] = d[order[k]];
        auto src = zt.row(order[k]);
        std::copy(src.begin(), src.end(), col.begin());
        fix_sign(col);
        s.vectors.set_column(k, col);
    }
    return s;
}

// Symmetric band matrix stored by lower diagonals with one spare diagonal for
// the bulge created during bandwidth reduction.
class SymBand {
public:
    SymBand(const RealMatrix& a, std::size_t b) : n_(a.rows()), w_(b + 1), data_(n_ * (w_ + 1), 0.0) {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t dd = 0; dd <= std::min(b, i); ++dd) at(i, i - dd) = a(i, i - dd);
    }

    double get(std::size_t r, std::size_t c) const {
        if (r < c) std::swap(r, c);
        if (r - c > w_) return 0.0;
        return data_[r * (w_ + 1) + (r - c)];
    }

    void set(std::size_t r, std::size_t c, double v) {
        if (r < c) std::swap(r, c);
        if (r - c > w_) return;
        data_[r * (w_ + 1) + (r - c)] = v;
    }

    // Similarity with the rotation [c s; -s c] acting on rows/cols (p, p+1).
    // The band has half-width `reach` plus the bulge in column p+1-reach-1.
    void rotate(std::size_t p, double c, double s, std::size_t reach) {
        const std::size_t q = p + 1;
        const std::size_t stride = w_ + 1;
        double* base = data_.data();
        const std::size_t lo = q >= reach + 1 ? q - reach - 1 : 0;
        for (std::size_t i = lo; i < p; ++i) {
            double& x = base[p * stride + (p - i)];
            double& y = base[q * stride + (q - i)];
            const double xv = x, yv = y;
            x = c * xv + s * yv;
            y = -s * xv + c * yv;
        }
        const std::size_t hi = std::min(n_ - 1, p + reach);
        for (std::size_t i = q + 1; i <= hi; ++i) {
            double& x = base[i * stride + (i - p)];
            double& y = base[i * stride + (i - q)];
            const double xv = x, yv = y;
            x = c * xv + s * yv;
            y = -s * xv + c * yv;
        }
        if (p + reach + 1 < n_) {
            // The entry (p+reach+1, p) is outside the current band and becomes the bulge.
            const std::size_t i = p + reach + 1;
            if (i - p <= w_) {
                const double yv = base[i * stride + (i - q)];
                base[i * stride + (i - p)] = s * yv;
                base[i * stride + (i - q)] = c * yv;
            }
        }
        const double app = get(p, p), apq = get(q, p), aqq = get(q, q);
        set(p, p, c * c * app + 2 * c * s * apq + s * s * aqq);
        set(q, q, s * s * app - 2 * c * s * apq + c * c * aqq);
        set(q, p, -c * s * app + (c * c - s * s) * apq + c * s * aqq);
    }

    // Schwarz bandwidth reduction to tridiagonal form (orthogonal similarity).
    void tridiagonalize(std::size_t b, RealVector& d, RealVector& e) {
        for (std::size_t bw = b; bw >= 2; --bw) {
            for (std::size_t k = 0; k + bw < n_; ++k) {
                std::size_t r = k + bw;
                std::size_t col = k;
                while (r < n_) {
                    const double y = get(r, col);
                    if (y == 0.0) break;
                    const double x = get(r - 1, col);
                    const double rho = std::hypot(x, y);
                    rotate(r - 1, x / rho, y / rho, bw);
                    set(r, col, 0.0);
                    col = r - 1;
                    r += bw;
                }
            }
        }
        d.assign(n_, 0.0);
        e.assign(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) d[i] = get(i, i);
        for (std::size_t i = 1; i < n_; ++i) e[i] = get(i, i - 1);
    }

private:
    double& at(std::size_t r, std::size_t c) { return data_[r * (w_ + 1) + (r - c)]; }

    std::size_t n_;
    std::size_t w_;
    RealVector data_;
};

// LU with partial pivoting of a general band matrix with half-bandwidth b
// (upper bandwidth grows to 2b under pivoting).
class BandLU {
public:
    BandLU(const RealMatrix& a, std::size_t b, double shift)
        : n_(a.rows()), b_(b), w_(3 * b + 1), lu_(n_ * w_, 0.0), mult_(n_ * std::max<std::size_t>(b, 1), 0.0),
          piv_(n_) {
        const double tiny = kEps * std::max(1.0, max_abs(a));
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t lo = i >= b ? i - b : 0;
            const std::size_t hi = std::min(n_ - 1, i + b);
            for (std::size_t j = lo; j <= hi; ++j) at(i, j) = a(i, j) - (i == j ? shift : 0.0);
        }
        for (std::size_t j = 0; j < n_; ++j) {
            const std::size_t last = std::min(n_ - 1, j + b_);
            std::size_t p = j;
            for (std::size_t r = j + 1; r <= last; ++r)
                if (std::abs(at(r, j)) > std::abs(at(p, j))) p = r;
            piv_[j] = p;
            const std::size_t cmax = std::min(n_ - 1, j + 2 * b_);
            if (p != j)
                for (std::size_t c = j; c <= cmax; ++c) std::swap(at(j, c), at(p, c));
            if (std::abs(at(j, j)) < tiny) at(j, j) = tiny;
            const double pivot = at(j, j);
            for (std::size_t r = j + 1; r <= last; ++r) {
                const double l = at(r, j) / pivot;
                mult_[j * std::max<std::size_t>(b_, 1) + (r - j - 1)] = l;
                at(r, j) = 0.0;
                if (l == 0.0) continue;
                for (std::size_t c = j + 1; c <= cmax; ++c) at(r, c) -= l * at(j, c);
            }
        }
    }

    void solve(RealVector& x) const {
        for (std::size_t j = 0; j < n_; ++j) {
            std::swap(x[j], x[piv_[j]]);
            const std::size_t last = std::min(n_ - 1, j + b_);
            for (std::size_t r = j + 1; r <= last; ++r)
                x[r] -= mult_[j * std::max<std::size_t>(b_, 1) + (r - j - 1)] * x[j];
        }
        for (std::size_t i = n_; i-- > 0;) {
            double acc = x[i];
            const std::size_t cmax = std::min(n_ - 1, i + 2 * b_);
            for (std::size_t c = i + 1; c <= cmax; ++c) acc -= at(i, c) * x[c];
            x[i] = acc / at(i, i);
        }
    }

private:
    double& at(std::size_t i, std::size_t j) { return lu_[i * w_ + (j + b_ - i)]; }
    double at(std::size_t i, std::size_t j) const { return lu_[i * w_ + (j + b_ - i)]; }

    std::size_t n_, b_, w_;
    RealVector lu_;
    RealVector mult_;
    std::vector<std::size_t> piv_;
};

inline void orthogonalize(RealVector& x, const std::vector<RealVector>& basis) {
    for (const auto& q : basis) {
        const double c = inner(x, q);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * q[i];
    }
}

inline void normalize(RealVector& v) {
    const double nv = norm2(v);
    if (nv > 0)
        for (auto& x : v) x /= nv;
}

} // namespace detail

/**
 * @brief Full symmetric eigendecomposition: Householder tridiagonalization
 * followed by implicit-shift QL.
 *
 * Throws NoConvergence when a single eigenvalue needs more than 30 QL sweeps.
 */
inline Spectrum sym_eig(const RealSymMatrix& h) {
    const std::size_t n = h.size();
    require(n > 0, ErrorCode::InvalidArgument, "empty matrix");
    RealMatrix v = h.matrix();
    RealVector d, e;
    detail::householder_tridiagonalize(v, d, e);
    RealMatrix zt = transpose(v);
    detail::implicit_ql(d, e, &zt);
    return detail::assemble_spectrum(d, zt, n);
}

/**
 * @brief Lowest `count` eigenpairs.
 *
 * Narrow-band matrices (every grid operator here) are reduced to tridiagonal
 * form by Givens bulge chasing and the QL eigenvalues are paired with
 * eigenvectors from inverse iteration on the shifted band matrix. Wide
 * matrices fall back to the dense solver.
 */
inline Spectrum sym_eig_lowest(const RealSymMatrix& h, std::size_t count) {
    const std::size_t n = h.size();
    require(count >= 1 && count <= n, ErrorCode::InvalidArgument, "count must lie in [1, n]");
    const std::size_t b = bandwidth(h.matrix());
    if (count == n || 3 * b >= n || n < 64) {
        Spectrum full = sym_eig(h);
        if (count == n) return full;
        Spectrum s;
        s.values.assign(full.values.begin(), full.values.begin() + static_cast<std::ptrdiff_t>(count));
        s.vectors = RealMatrix(n, count);
        for (std::size_t k = 0; k < count; ++k) s.vectors.set_column(k, full.vector(k));
        return s;
    }

    RealVector d, e;
    if (b >= 2) {
        detail::SymBand band(h.matrix(), b);
        band.tridiagonalize(b, d, e);
    } else {
        d.assign(n, 0.0);
        e.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) d[i] = h(i, i);
        for (std::size_t i = 1; i < n; ++i) e[i] = h(i, i - 1);
    }
    detail::implicit_ql(d, e, nullptr);
    std::sort(d.begin(), d.end());

    Spectrum s;
    s.values.assign(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(count));
    s.vectors = RealMatrix(n, count);
    std::vector<RealVector> found;
    const double hnorm = frobenius_norm(h.matrix());
    for (std::size_t k = 0; k < count; ++k) {
        const double lambda = s.values[k];
        detail::BandLU lu(h.matrix(), std::max<std::size_t>(b, 1), lambda);
        std::mt19937_64 rng(0x5eedULL + k);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        RealVector x(n);
        for (auto& xi : x) xi = unif(rng);
        for (int it = 0; it < 6; ++it) {
            lu.solve(x);
            detail::orthogonalize(x, found);
            detail::normalize(x);
            double res = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t lo = i >= b ? i - b : 0;
                const std::size_t hi = std::min(n - 1, i + b);
                double hx = 0.0;
                for (std::size_t j = lo; j <= hi; ++j) hx += h(i, j) * x[j];
                res += (hx - lambda * x[i]) * (hx - lambda * x[i]);
            }
            if (it >= 1 && std::sqrt(res) <= 1e-13 * (1.0 + std::abs(lambda)) * hnorm) break;
        }
        detail::orthogonalize(x, found);
        detail::normalize(x);
        detail::fix_sign(x);
        s.vectors.set_column(k, x);
        found.push_back(std::move(x));
    }
    return s;
}

/// Largest residual and orthonormality defects of a computed spectrum.
struct SpectrumCheck {
    double max_scaled_residual = 0.0; // max_k |H v - l v| / ((1 + |l|) ||H||_F)
    double max_orthonormality_defect = 0.0;
    bool sorted = true;
};

inline SpectrumCheck check_spectrum(const RealSymMatrix& h, const Spectrum& s) {
    SpectrumCheck c;
    const double hf = frobenius_norm(h.matrix());
    std::vector<RealVector> vs;
    for (std::size_t k = 0; k < s.count(); ++k) vs.push_back(s.vector(k));
    for (std::size_t k = 0; k < s.count(); ++k) {
        auto hv = h.apply(vs[k]);
        double r = 0.0;
        for (std::size_t i = 0; i < hv.size(); ++i) r += abs2(hv[i] - s.values[k] * vs[k][i]);
        c.max_scaled_residual =
            std::max(c.max_scaled_residual, std::sqrt(r) / ((1.0 + std::abs(s.values[k])) * std::max(hf, 1e-300)));
        for (std::size_t l = 0; l <= k; ++l) {
            const double dot = inner(vs[k], vs[l]);
            c.max_orthonormality_defect =
                std::max(c.max_orthonormality_defect, std::abs(dot - (k == l ? 1.0 : 0.0)));
        }
        if (k > 0 && s.values[k] < s.values[k - 1]) c.sorted = false;
    }
    return c;
}

} // namespace spectra_gap
