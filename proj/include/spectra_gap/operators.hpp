#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "grid.hpp"
#include "matrix.hpp"

namespace spectra_gap {

// ---------------------------------------------------------------------------
// Laplacians

/// -d^2/dx^2 by the 3-point stencil.
inline RealSymMatrix laplacian(const Grid1D& g) {
    const std::size_t n = g.size();
    const double h = g.h();
    const double inv = 1.0 / (h * h);
    RealMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = 2.0 * inv;
        if (i > 0) a(i, i - 1) = a(i - 1, i) = -inv;
    }
    if (g.layout == NodeLayout::cell) {
        const double end = g.bc == BoundaryCondition::dirichlet ? 3.0 * inv : 1.0 * inv;
        a(0, 0) = end;
        a(n - 1, n - 1) = end;
    }
    return RealSymMatrix(std::move(a));
}

/// -Laplace by the 5-point stencil on the included nodes.
inline RealSymMatrix laplacian(const Grid2D& g) {
    const std::size_t n = g.size();
    const double inv1 = 1.0 / (g.h1() * g.h1());
    const double inv2 = 1.0 / (g.h2() * g.h2());
    const bool neumann = g.bc() == BoundaryCondition::neumann;
    RealMatrix a(n, n);
    const auto nodes = g.unknown_nodes();
    for (std::size_t p = 0; p < n; ++p) {
        const auto i = static_cast<std::ptrdiff_t>(nodes[p].first);
        const auto j = static_cast<std::ptrdiff_t>(nodes[p].second);
        if (neumann) {
            double d = 0.0;
            for (auto [di, dj, inv] : {std::tuple{1, 0, inv1}, {-1, 0, inv1}, {0, 1, inv2}, {0, -1, inv2}}) {
                const auto q = g.unknown(i + di, j + dj);
                if (q < 0) continue;
                d += inv;
                a(p, static_cast<std::size_t>(q)) = -inv;
            }
            a(p, p) = d;
        } else {
            a(p, p) = 2.0 * inv1 + 2.0 * inv2;
            for (auto [di, dj, inv] : {std::tuple{1, 0, inv1}, {-1, 0, inv1}, {0, 1, inv2}, {0, -1, inv2}}) {
                const auto q = g.unknown(i + di, j + dj);
                if (q >= 0) a(p, static_cast<std::size_t>(q)) = -inv;
            }
        }
    }
    return RealSymMatrix(std::move(a));
}

// ---------------------------------------------------------------------------
// Potentials and Schrodinger operators

/**
 * @brief Real potential V(x) with first and second derivatives.
 *
 * Builtins: zero, harmonic (x^2), polynomial coefficients c0 + c1 x + ...,
 * and sampled tables (piecewise linear; derivatives by centered differences
 * at the table spacing).
 */
class Potential {
public:
    static Potential zero() { return polynomial({0.0}); }
    static Potential harmonic() { return polynomial({0.0, 0.0, 1.0}); }
    static Potential constant(double c) { return polynomial({c}); }

    static Potential polynomial(RealVector coeffs) {
        require(!coeffs.empty(), ErrorCode::InvalidArgument, "polynomial needs at least one coefficient");
        Potential p;
        p.coeffs_ = std::move(coeffs);
        return p;
    }

    static Potential sampled(RealVector xs, RealVector values) {
        require(xs.size() == values.size() && xs.size() >= 3, ErrorCode::DimensionMismatch,
                "sampled potential needs matching x/value columns with at least 3 rows");
        for (std::size_t i = 1; i < xs.size(); ++i)
            require(xs[i] > xs[i - 1], ErrorCode::InvalidArgument, "sample abscissae must increase");
        Potential p;
        p.xs_ = std::move(xs);
        p.vs_ = std::move(values);
        return p;
    }

    bool is_sampled() const noexcept { return !xs_.empty(); }

    double value(double x) const {
        if (!is_sampled()) return horner(coeffs_, x);
        if (x <= xs_.front()) return vs_.front();
        if (x >= xs_.back()) return vs_.back();
        const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        const std::size_t k = static_cast<std::size_t>(it - xs_.begin());
        const double t = (x - xs_[k - 1]) / (xs_[k] - xs_[k - 1]);
        return (1 - t) * vs_[k - 1] + t * vs_[k];
    }

    double first(double x) const {
        if (!is_sampled()) return horner(derivative(coeffs_), x);
        const double d = table_step();
        return (value(x + d) - value(x - d)) / (2 * d);
    }

    double second(double x) const {
        if (!is_sampled()) return horner(derivative(derivative(coeffs_)), x);
        const double d = table_step();
        return (value(x + d) - 2 * value(x) + value(x - d)) / (d * d);
    }

    RealVector sample(const Grid1D& g) const {
        RealVector v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) v[i] = value(g.x(i));
        return v;
    }

private:
    static double horner(const RealVector& c, double x) {
        double acc = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
        return acc;
    }
    static RealVector derivative(const RealVector& c) {
        if (c.size() <= 1) return {0.0};
        RealVector d(c.size() - 1);
        for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
        return d;
    }
    double table_step() const { return (xs_.back() - xs_.front()) / static_cast<double>(xs_.size() - 1); }

    RealVector coeffs_;
    RealVector xs_, vs_;
};

/// -d^2/dx^2 + V on the grid (potential sampled at the nodes).
inline RealSymMatrix schrodinger(const Grid1D& g, std::span<const double> v) {
    require(v.size() == g.size(), ErrorCode::DimensionMismatch, "potential samples must match the grid");
    RealMatrix a = laplacian(g).matrix();
    for (std::size_t i = 0; i < g.size(); ++i) a(i, i) += v[i];
    return RealSymMatrix(std::move(a));
}

inline RealSymMatrix schrodinger(const Grid1D& g, const Potential& v) {
    const RealVector s = v.sample(g);
    return schrodinger(g, std::span<const double>(s));
}

/// Complex potential: non-self-adjoint in general.
inline ComplexMatrix schrodinger_complex(const Grid1D& g, std::span<const complex> v) {
    require(v.size() == g.size(), ErrorCode::DimensionMismatch, "potential samples must match the grid");
    ComplexMatrix a = to_complex(laplacian(g).matrix());
    for (std::size_t i = 0; i < g.size(); ++i) a(i, i) += v[i];
    return a;
}

// ---------------------------------------------------------------------------
// Divergence-form operators

/// Symmetric 2x2 coefficient matrix (1D problems use a11 only).
struct CoefficientTensor {
    double a11 = 1.0;
    double a12 = 0.0;
    double a22 = 1.0;

    double trace(int dim) const noexcept { return dim == 1 ? a11 : a11 + a22; }
    double min_eig(int dim) const noexcept {
        if (dim == 1) return a11;
        const double m = 0.5 * (a11 + a22), r = std::hypot(0.5 * (a11 - a22), a12);
        return m - r;
    }
    double max_eig(int dim) const noexcept {
        if (dim == 1) return a11;
        const double m = 0.5 * (a11 + a22), r = std::hypot(0.5 * (a11 - a22), a12);
        return m + r;
    }
};

/**
 * @brief Coefficient field A(x) of -sum_kl d_k a_kl d_l, evaluated pointwise.
 *
 * eps0 is the ellipticity constant checked at every grid node (including
 * boundary nodes, which enter the half-grid averages).
 */
class CoefficientField {
public:
    using Fn = std::function<CoefficientTensor(double, double)>;

    CoefficientField(int dim, Fn fn, double eps0 = 0.0) : dim_(dim), fn_(std::move(fn)), eps0_(eps0) {
        require(dim == 1 || dim == 2, ErrorCode::InvalidArgument, "coefficient fields are 1D or 2D");
    }

    static CoefficientField identity(int dim) {
        return CoefficientField(dim, [](double, double) { return CoefficientTensor{}; });
    }
    static CoefficientField scaled_identity(int dim, double c) {
        return CoefficientField(dim, [c](double, double) { return CoefficientTensor{c, 0.0, c}; });
    }
    /// a(x) = c0 + c1 x + ... times the identity.
    static CoefficientField polynomial(int dim, RealVector coeffs, double eps0 = 0.0) {
        auto p = Potential::polynomial(std::move(coeffs));
        return CoefficientField(
            dim, [p](double x, double) { const double v = p.value(x); return CoefficientTensor{v, 0.0, v}; }, eps0);
    }

    int dim() const noexcept { return dim_; }
    double eps0() const noexcept { return eps0_; }
    CoefficientTensor operator()(double x, double y = 0.0) const { return fn_(x, y); }

    void check_positive(double x, double y) const {
        const auto t = fn_(x, y);
        require(std::isfinite(t.a11) && std::isfinite(t.a12) && std::isfinite(t.a22), ErrorCode::NonFinite,
                "coefficient is not finite");
        const double me = t.min_eig(dim_);
        require(me > 0.0 && me >= eps0_, ErrorCode::NotPositive,
                "coefficient matrix fails the ellipticity check at (" + std::to_string(x) + ", " +
                    std::to_string(y) + ")");
    }

private:
    int dim_;
    Fn fn_;
    double eps0_;
};

/// Flux form -(a u')' with arithmetic face averages.
inline RealSymMatrix variable_coeff_elliptic(const Grid1D& g, const CoefficientField& a) {
    const std::size_t n = g.size();
    const double h = g.h();
    const double inv = 1.0 / (h * h);
    // Coefficient at the nodes and at both boundary points.
    RealVector node(n);
    for (std::size_t i = 0; i < n; ++i) {
        a.check_positive(g.x(i), 0.0);
        node[i] = a(g.x(i)).a11;
    }
    a.check_positive(g.a, 0.0);
    a.check_positive(g.b, 0.0);
    const double left = a(g.a).a11, right = a(g.b).a11;

    RealMatrix m(n, n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double face = 0.5 * (node[i] + node[i + 1]);
        m(i, i + 1) = m(i + 1, i) = -face * inv;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double lo, hi;
        if (g.layout == NodeLayout::vertex) {
            lo = 0.5 * ((i == 0 ? left : node[i - 1]) + node[i]);
            hi = 0.5 * (node[i] + (i + 1 == n ? right : node[i + 1]));
        } else {
            const double ghost = g.bc == BoundaryCondition::dirichlet ? 2.0 : 0.0;
            lo = i == 0 ? ghost * left : 0.5 * (node[i - 1] + node[i]);
            hi = i + 1 == n ? ghost * right : 0.5 * (node[i] + node[i + 1]);
        }
        m(i, i) = (lo + hi) * inv;
    }
    return RealSymMatrix(std::move(m));
}

/// Flux form on a Dirichlet rectangle or masked domain; mixed terms by the centered product stencil.
inline RealSymMatrix variable_coeff_elliptic(const Grid2D& g, const CoefficientField& a) {
    require(g.bc() == BoundaryCondition::dirichlet, ErrorCode::UnsupportedBC,
            "2D divergence-form operators are Dirichlet only");
    require(a.dim() == 2, ErrorCode::DimensionMismatch, "2D operator needs a 2D coefficient field");
    const std::size_t n = g.size();
    const double inv1 = 1.0 / (g.h1() * g.h1());
    const double inv2 = 1.0 / (g.h2() * g.h2());
    const double mixed = 1.0 / (4.0 * g.h1() * g.h2());
    const auto n1 = static_cast<std::ptrdiff_t>(g.n1()), n2 = static_cast<std::ptrdiff_t>(g.n2());

    // Coefficients on the extended vertex set (-1..N per direction).
    const std::size_t w = g.n1() + 2;
    std::vector<CoefficientTensor> ext(w * (g.n2() + 2));
    auto at = [&](std::ptrdiff_t i, std::ptrdiff_t j) -> const CoefficientTensor& {
        return ext[static_cast<std::size_t>(i + 1) + w * static_cast<std::size_t>(j + 1)];
    };
    for (std::ptrdiff_t j = -1; j <= n2; ++j)
        for (std::ptrdiff_t i = -1; i <= n1; ++i) {
            const double x = g.x1_ext(i), y = g.x2_ext(j);
            a.check_positive(x, y);
            ext[static_cast<std::size_t>(i + 1) + w * static_cast<std::size_t>(j + 1)] = a(x, y);
        }

    RealMatrix m(n, n);
    const auto nodes = g.unknown_nodes();
    for (std::size_t p = 0; p < n; ++p) {
        const auto i = static_cast<std::ptrdiff_t>(nodes[p].first);
        const auto j = static_cast<std::ptrdiff_t>(nodes[p].second);
        const double aw = 0.5 * (at(i - 1, j).a11 + at(i, j).a11);
        const double ae = 0.5 * (at(i, j).a11 + at(i + 1, j).a11);
        const double as = 0.5 * (at(i, j - 1).a22 + at(i, j).a22);
        const double an = 0.5 * (at(i, j).a22 + at(i, j + 1).a22);
        m(p, p) = (aw + ae) * inv1 + (as + an) * inv2;
        auto put = [&](std::ptrdiff_t qi, std::ptrdiff_t qj, double v) {
            const auto q = g.unknown(qi, qj);
            if (q >= 0) m(p, static_cast<std::size_t>(q)) += v;
        };
        put(i - 1, j, -aw * inv1);
        put(i + 1, j, -ae * inv1);
        put(i, j - 1, -as * inv2);
        put(i, j + 1, -an * inv2);
        // -d1(a12 d2 u) - d2(a12 d1 u): diagonal neighbours.
        for (int di : {-1, 1})
            for (int dj : {-1, 1}) {
                const double c = at(i + di, j).a12 + at(i, j + dj).a12;
                if (c == 0.0) continue;
                put(i + di, j + dj, -static_cast<double>(di * dj) * c * mixed);
            }
    }
    return RealSymMatrix(std::move(m));
}

// ---------------------------------------------------------------------------
// Linear elasticity -Laplace u - alpha grad div u

namespace detail {

inline void require_plain_dirichlet(const Grid2D& g) {
    require(g.bc() == BoundaryCondition::dirichlet && !g.masked(), ErrorCode::UnsupportedBC,
            "elasticity needs a full-rectangle Dirichlet grid");
}

} // namespace detail

/**
 * @brief Lame operator on interleaved unknowns (2*node + component).
 *
 * Block Laplacian plus alpha times the discrete -grad div, whose mixed
 * derivative uses the 4-point centered product stencil in both blocks.
 */
inline RealSymMatrix elasticity_2d(const Grid2D& g, double alpha) {
    detail::require_plain_dirichlet(g);
    require(alpha >= 0.0 && std::isfinite(alpha), ErrorCode::InvalidArgument, "alpha must be non-negative");
    const std::size_t n = g.size();
    const double inv1 = 1.0 / (g.h1() * g.h1());
    const double inv2 = 1.0 / (g.h2() * g.h2());
    const double mixed = 1.0 / (4.0 * g.h1() * g.h2());
    RealMatrix m(2 * n, 2 * n);
    const auto nodes = g.unknown_nodes();
    for (std::size_t p = 0; p < n; ++p) {
        const auto i = static_cast<std::ptrdiff_t>(nodes[p].first);
        const auto j = static_cast<std::ptrdiff_t>(nodes[p].second);
        // Component c couples in direction c with weight (1 + alpha).
        const double d1[2] = {(1.0 + alpha) * inv1, inv1};
        const double d2[2] = {inv2, (1.0 + alpha) * inv2};
        for (std::size_t c = 0; c < 2; ++c) {
            const std::size_t r = 2 * p + c;
            m(r, r) = 2.0 * d1[c] + 2.0 * d2[c];
            for (auto [di, dj, wgt] : {std::tuple{1, 0, d1[c]}, {-1, 0, d1[c]}, {0, 1, d2[c]}, {0, -1, d2[c]}}) {
                const auto q = g.unknown(i + di, j + dj);
                if (q >= 0) m(r, 2 * static_cast<std::size_t>(q) + c) = -wgt;
            }
        }
        if (alpha == 0.0) continue;
        for (int di : {-1, 1})
            for (int dj : {-1, 1}) {
                const auto q = g.unknown(i + di, j + dj);
                if (q < 0) continue;
                const double v = -alpha * static_cast<double>(di * dj) * mixed;
                m(2 * p, 2 * static_cast<std::size_t>(q) + 1) = v;
                m(2 * p + 1, 2 * static_cast<std::size_t>(q)) = v;
            }
    }
    return RealSymMatrix(std::move(m));
}

/// Discrete forms of a vector field vanishing on the boundary.
struct ElasticityForms {
    double l_form = 0.0;         // <Lu, u>
    double m_form = 0.0;         // <Mu, u>, M = -grad div
    double s_norm2 = 0.0;        // sum_l ||S_l u||^2
    double r_norm2 = 0.0;        // sum_l ||R_l u||^2
    double s_dot_r = 0.0;        // sum_l <S_l u, R_l u>
    double div_norm2 = 0.0;      // ||div u||^2
    double combined_norm2 = 0.0; // sum_l ||(2 S_l + alpha R_l) u||^2
};

/**
 * @brief Field u = (u1, u2) sampled on the extended vertex set (N1+2)x(N2+2),
 * boundary included; entry (i+1, j+1) holds node (i, j).
 */
struct VectorField2D {
    RealMatrix u1;
    RealMatrix u2;
};

inline VectorField2D embed_interleaved(const Grid2D& g, std::span<const double> u) {
    detail::require_plain_dirichlet(g);
    require(u.size() == 2 * g.size(), ErrorCode::DimensionMismatch, "field must have 2 entries per node");
    VectorField2D f{RealMatrix(g.n1() + 2, g.n2() + 2), RealMatrix(g.n1() + 2, g.n2() + 2)};
    const auto nodes = g.unknown_nodes();
    for (std::size_t p = 0; p < nodes.size(); ++p) {
        f.u1(nodes[p].first + 1, nodes[p].second + 1) = u[2 * p];
        f.u2(nodes[p].first + 1, nodes[p].second + 1) = u[2 * p + 1];
    }
    return f;
}

namespace detail {

// Derivative of an extended-grid field along direction l at extended node (I, J):
// centered inside, one-sided second order on the boundary.
inline double ext_derivative(const RealMatrix& f, int l, std::size_t I, std::size_t J, double h) {
    const std::size_t n = l == 1 ? f.rows() : f.cols();
    const std::size_t k = l == 1 ? I : J;
    auto v = [&](std::size_t kk) { return l == 1 ? f(kk, J) : f(I, kk); };
    if (k == 0) return (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h);
    if (k + 1 == n) return (3.0 * v(n - 1) - 4.0 * v(n - 2) + v(n - 3)) / (2.0 * h);
    return (v(k + 1) - v(k - 1)) / (2.0 * h);
}

} // namespace detail

/**
 * @brief The quadratic forms of the elasticity lemma for a boundary-vanishing field.
 *
 * <Lu,u> and <Mu,u> use the assembled operator stencils; the S/R/div norms use
 * centered gradients integrated by the trapezoid rule (one-sided differences on
 * the boundary).
 */
inline ElasticityForms elasticity_forms(const Grid2D& g, double alpha, const VectorField2D& u) {
    detail::require_plain_dirichlet(g);
    const std::size_t e1 = g.n1() + 2, e2 = g.n2() + 2;
    require(u.u1.rows() == e1 && u.u1.cols() == e2 && u.u2.rows() == e1 && u.u2.cols() == e2,
            ErrorCode::DimensionMismatch, "field must cover the extended grid");
    double scale = std::max(max_abs(u.u1), max_abs(u.u2));
    for (std::size_t I = 0; I < e1; ++I)
        for (std::size_t J = 0; J < e2; ++J) {
            if (I != 0 && J != 0 && I + 1 != e1 && J + 1 != e2) continue;
            require(std::abs(u.u1(I, J)) <= 1e-14 * scale && std::abs(u.u2(I, J)) <= 1e-14 * scale,
                    ErrorCode::BoundaryViolation, "field must vanish on the boundary");
        }

    ElasticityForms out;
    const double h1 = g.h1(), h2 = g.h2(), w = h1 * h2;
    const RealMatrix* comp[2] = {&u.u1, &u.u2};

    // Operator forms on interior nodes.
    const double inv1 = 1.0 / (h1 * h1), inv2 = 1.0 / (h2 * h2), mixed = 1.0 / (4.0 * h1 * h2);
    for (std::size_t I = 1; I + 1 < e1; ++I)
        for (std::size_t J = 1; J + 1 < e2; ++J) {
            for (int c = 0; c < 2; ++c) {
                const RealMatrix& f = *comp[c];
                const double lap = (2.0 * f(I, J) - f(I - 1, J) - f(I + 1, J)) * inv1 +
                                   (2.0 * f(I, J) - f(I, J - 1) - f(I, J + 1)) * inv2;
                out.l_form += w * f(I, J) * lap;
            }
            const RealMatrix& a = u.u1;
            const RealMatrix& b = u.u2;
            const double d11a = (2.0 * a(I, J) - a(I - 1, J) - a(I + 1, J)) * inv1;
            const double d22b = (2.0 * b(I, J) - b(I, J - 1) - b(I, J + 1)) * inv2;
            const double d12b = -(b(I + 1, J + 1) - b(I + 1, J - 1) - b(I - 1, J + 1) + b(I - 1, J - 1)) * mixed;
            const double d12a = -(a(I + 1, J + 1) - a(I + 1, J - 1) - a(I - 1, J + 1) + a(I - 1, J - 1)) * mixed;
            out.m_form += w * (a(I, J) * (d11a + d12b) + b(I, J) * (d12a + d22b));
        }

    // Gradient forms with trapezoid weights.
    for (std::size_t I = 0; I < e1; ++I)
        for (std::size_t J = 0; J < e2; ++J) {
            double wt = w;
            if (I == 0 || I + 1 == e1) wt *= 0.5;
            if (J == 0 || J + 1 == e2) wt *= 0.5;
            double grad[2][2]; // grad[c][l] = d u_c / d x_l
            for (int c = 0; c < 2; ++c) {
                grad[c][0] = detail::ext_derivative(*comp[c], 1, I, J, h1);
                grad[c][1] = detail::ext_derivative(*comp[c], 2, I, J, h2);
            }
            const double div = grad[0][0] + grad[1][1];
            out.div_norm2 += wt * div * div;
            for (int l = 0; l < 2; ++l)
                for (int c = 0; c < 2; ++c) {
                    const double s = grad[c][l];
                    const double r = (c == l ? div : 0.0) + grad[l][c];
                    out.s_norm2 += wt * s * s;
                    out.r_norm2 += wt * r * r;
                    out.s_dot_r += wt * s * r;
                    const double comb = 2.0 * s + alpha * r;
                    out.combined_norm2 += wt * comb * comb;
                }
        }
    return out;
}

inline ElasticityForms elasticity_forms(const Grid2D& g, double alpha, std::span<const double> interleaved) {
    return elasticity_forms(g, alpha, embed_interleaved(g, interleaved));
}

/// Relative residuals of the four Lemma identities (n = 2).
struct ElasticityResiduals {
    double s_vs_l = 0.0;   // sum ||S_l u||^2 = <Lu,u>
    double r_vs_lm = 0.0;  // sum ||R_l u||^2 = (n+2)<Mu,u> + <Lu,u>
    double sr_vs_m = 0.0;  // sum <S_l u, R_l u> = 2<Mu,u>
    double m_vs_div = 0.0; // <Mu,u> = ||div u||^2

    double max() const { return std::max({s_vs_l, r_vs_lm, sr_vs_m, m_vs_div}); }
};

inline ElasticityResiduals elasticity_residuals(const ElasticityForms& f) {
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-300}); };
    ElasticityResiduals r;
    r.s_vs_l = rel(f.s_norm2, f.l_form);
    r.r_vs_lm = rel(f.r_norm2, 4.0 * f.m_form + f.l_form);
    r.sr_vs_m = rel(f.s_dot_r, 2.0 * f.m_form);
    r.m_vs_div = rel(f.m_form, f.div_norm2);
    return r;
}

// ---------------------------------------------------------------------------
// Auxiliary operators G

inline RealSymMatrix multiplication_operator(std::span<const double> f) {
    require(!f.empty(), ErrorCode::DimensionMismatch, "empty sample vector");
    return RealSymMatrix(RealMatrix::diagonal(f));
}

inline RealSymMatrix multiplication_operator(const Grid1D& g, std::span<const double> f) {
    require(f.size() == g.size(), ErrorCode::DimensionMismatch, "samples must match the grid");
    return multiplication_operator(f);
}

inline RealSymMatrix multiplication_operator(const Grid2D& g, std::span<const double> f) {
    require(f.size() == g.size(), ErrorCode::DimensionMismatch, "samples must match the grid");
    return multiplication_operator(f);
}

/// Boundary rows of the derivative: one-sided second-order differences, or the
/// centered stencil closed with the grid's own ghost value (0, odd or even mirror).
enum class DerivativeRows { one_sided, ghost };

/// i times the centered first-difference matrix.
inline ComplexMatrix derivative_operator(const Grid1D& g, DerivativeRows rows = DerivativeRows::one_sided) {
    const std::size_t n = g.size();
    const double c = 1.0 / (2.0 * g.h());
    RealMatrix d(n, n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d(i, i + 1) = c;
        d(i, i - 1) = -c;
    }
    if (rows == DerivativeRows::one_sided) {
        d(0, 0) = -3.0 * c; d(0, 1) = 4.0 * c; d(0, 2) = -c;
        d(n - 1, n - 1) = 3.0 * c; d(n - 1, n - 2) = -4.0 * c; d(n - 1, n - 3) = c;
    } else {
        // Ghost value u_{-1} = s u_0 (and u_N = s u_{N-1}).
        double s = 0.0;
        if (g.layout == NodeLayout::cell) s = g.bc == BoundaryCondition::dirichlet ? -1.0 : 1.0;
        d(0, 1) = c;
        d(0, 0) = -s * c;
        d(n - 1, n - 2) = -c;
        d(n - 1, n - 1) = s * c;
    }
    ComplexMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (d(i, j) != 0.0) out(i, j) = complex(0.0, d(i, j));
    return out;
}

/// Centered difference along direction l (1 or 2) of a field on the unknowns, zero outside.
inline RealVector centered_gradient(const Grid2D& g, std::span<const double> f, int l) {
    require(f.size() == g.size(), ErrorCode::DimensionMismatch, "field must match the grid");
    require(l == 1 || l == 2, ErrorCode::InvalidArgument, "direction must be 1 or 2");
    const double h = l == 1 ? g.h1() : g.h2();
    const auto nodes = g.unknown_nodes();
    RealVector out(g.size());
    for (std::size_t p = 0; p < nodes.size(); ++p) {
        const auto i = static_cast<std::ptrdiff_t>(nodes[p].first), j = static_cast<std::ptrdiff_t>(nodes[p].second);
        const auto qp = l == 1 ? g.unknown(i + 1, j) : g.unknown(i, j + 1);
        const auto qm = l == 1 ? g.unknown(i - 1, j) : g.unknown(i, j - 1);
        const double fp = qp >= 0 ? f[static_cast<std::size_t>(qp)] : 0.0;
        const double fm = qm >= 0 ? f[static_cast<std::size_t>(qm)] : 0.0;
        out[p] = (fp - fm) / (2.0 * h);
    }
    return out;
}

/// Sum over grid edges along direction l of the squared forward difference, weighted by cell area.
/// Values outside the unknowns are zero, so this is the direction-l part of the Dirichlet form.
inline double edge_energy(const Grid2D& g, std::span<const double> f, int l) {
    require(f.size() == g.size(), ErrorCode::DimensionMismatch, "field must match the grid");
    require(l == 1 || l == 2, ErrorCode::InvalidArgument, "direction must be 1 or 2");
    const double h = l == 1 ? g.h1() : g.h2();
    const auto nodes = g.unknown_nodes();
    double sum = 0.0;
    for (std::size_t p = 0; p < nodes.size(); ++p) {
        const auto i = static_cast<std::ptrdiff_t>(nodes[p].first), j = static_cast<std::ptrdiff_t>(nodes[p].second);
        const auto qp = l == 1 ? g.unknown(i + 1, j) : g.unknown(i, j + 1);
        const auto qm = l == 1 ? g.unknown(i - 1, j) : g.unknown(i, j - 1);
        const double fp = qp >= 0 ? f[static_cast<std::size_t>(qp)] : 0.0;
        sum += (fp - f[p]) * (fp - f[p]);
        if (qm < 0) sum += f[p] * f[p];
    }
    return g.cell_area() * sum / (h * h);
}

// ---------------------------------------------------------------------------
// Neumann bump functions

namespace detail {

inline double bessel_series(int order, double x) {
    double term = std::pow(0.5 * x, order) / std::tgamma(order + 1.0);
    double sum = term;
    for (int k = 1; k < 60; ++k) {
        term *= -(0.25 * x * x) / (static_cast<double>(k) * static_cast<double>(k + order));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

} // namespace detail

inline double bessel_j0(double x) { return detail::bessel_series(0, x); }
inline double bessel_j1(double x) { return detail::bessel_series(1, x); }

/// First positive zero of J1, by bisection.
inline double bessel_j1_first_zero() {
    static const double root = [] {
        double lo = 2.0, hi = 5.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (bessel_j1(mid) > 0.0)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }();
    return root;
}

/// First nonconstant radial Neumann eigenfunction of the unit ball with R(1) = 1.
inline double neumann_radial_profile(int dim, double r) {
    if (dim == 1) return -std::cos(std::numbers::pi * r);
    const double j11 = bessel_j1_first_zero();
    return bessel_j0(j11 * r) / bessel_j0(j11);
}

/**
 * @brief Disjoint balls inside the domain, radii non-increasing.
 *
 * 1D balls are intervals (center[0] - r, center[0] + r).
 */
struct BallArrangement {
    int dim = 1;
    std::vector<std::array<double, 2>> centers;
    RealVector radii;

    std::size_t count() const noexcept { return radii.size(); }

    void validate(double a1, double b1, double a2 = 0.0, double b2 = 0.0) const {
        require(centers.size() == radii.size(), ErrorCode::DimensionMismatch, "one radius per center");
        for (std::size_t p = 0; p < count(); ++p) {
            require(radii[p] > 0.0, ErrorCode::InvalidArgument, "radii must be positive");
            if (p > 0) require(radii[p] <= radii[p - 1], ErrorCode::InvalidArgument, "radii must be non-increasing");
            const auto& c = centers[p];
            bool inside = c[0] - radii[p] >= a1 && c[0] + radii[p] <= b1;
            if (dim == 2) inside = inside && c[1] - radii[p] >= a2 && c[1] + radii[p] <= b2;
            require(inside, ErrorCode::BallOutsideDomain, "ball " + std::to_string(p) + " leaves the domain");
            for (std::size_t q = 0; q < p; ++q) {
                const double d = dim == 1 ? std::abs(c[0] - centers[q][0])
                                          : std::hypot(c[0] - centers[q][0], c[1] - centers[q][1]);
                require(d >= radii[p] + radii[q], ErrorCode::BallsOverlap,
                        "balls " + std::to_string(q) + " and " + std::to_string(p) + " overlap");
            }
        }
    }

    /// g at a point: rescaled profile inside a ball, 1 elsewhere.
    double bump(double x, double y = 0.0) const {
        for (std::size_t p = 0; p < count(); ++p) {
            const double r = dim == 1 ? std::abs(x - centers[p][0]) : std::hypot(x - centers[p][0], y - centers[p][1]);
            if (r < radii[p]) return neumann_radial_profile(dim, r / radii[p]);
        }
        return 1.0;
    }
};

inline RealVector neumann_bump(const Grid1D& g, const BallArrangement& balls) {
    require(balls.dim == 1, ErrorCode::DimensionMismatch, "1D grid needs 1D balls");
    balls.validate(g.a, g.b);
    RealVector out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = balls.bump(g.x(i));
    return out;
}

inline RealVector neumann_bump(const Grid2D& g, const BallArrangement& balls) {
    require(balls.dim == 2, ErrorCode::DimensionMismatch, "2D grid needs 2D balls");
    balls.validate(g.a1(), g.b1(), g.a2(), g.b2());
    RealVector out;
    out.reserve(g.size());
    for (auto [i, j] : g.unknown_nodes()) out.push_back(balls.bump(g.x1(i), g.x2(j)));
    return out;
}

} // namespace spectra_gap
