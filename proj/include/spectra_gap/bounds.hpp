#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "commutator.hpp"
#include "grid.hpp"
#include "identities.hpp"
#include "operators.hpp"
#include "sym_eig.hpp"

namespace spectra_gap {

/// upper: observed <= bound. lower: observed >= bound.
enum class BoundSense { upper, lower };

/**
 * @brief One evaluated inequality.
 *
 * margin is bound - observed for upper bounds and observed - bound for lower
 * ones, so satisfied <=> margin >= -1e-12 (|bound| + |observed|) either way.
 * m is 1-based (lambda_1 is the lowest eigenvalue).
 */
struct BoundReport {
    std::string name;
    std::size_t m = 0;
    std::optional<std::size_t> j;
    BoundSense sense = BoundSense::upper;
    double bound = 0.0;
    double observed = 0.0;
    double margin = 0.0;
    bool satisfied = false;
    std::string diagnostic;
    std::map<std::string, double> metadata;
};

inline BoundReport make_bound_report(std::string name, std::size_t m, double bound, double observed,
                                     BoundSense sense = BoundSense::upper) {
    BoundReport r;
    r.name = std::move(name);
    r.m = m;
    r.sense = sense;
    r.bound = bound;
    r.observed = observed;
    if (std::isinf(bound) || std::isinf(observed)) {
        const bool ok = sense == BoundSense::upper ? observed <= bound : observed >= bound;
        r.margin = ok ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.satisfied = ok;
        return r;
    }
    r.margin = sense == BoundSense::upper ? bound - observed : observed - bound;
    r.satisfied = r.margin >= -1e-12 * (std::abs(bound) + std::abs(observed));
    return r;
}

enum class ClassicBound { ppw, hp, yang1, yang2 };

inline std::string_view to_string(ClassicBound b) {
    switch (b) {
    case ClassicBound::ppw: return "ppw";
    case ClassicBound::hp: return "hp";
    case ClassicBound::yang1: return "yang1";
    case ClassicBound::yang2: return "yang2";
    }
    return "?";
}

inline std::optional<ClassicBound> parse_classic_bound(std::string_view s) {
    for (auto b : {ClassicBound::ppw, ClassicBound::hp, ClassicBound::yang1, ClassicBound::yang2})
        if (to_string(b) == s) return b;
    return std::nullopt;
}

namespace detail {

inline void require_index(std::span<const double> values, std::size_t m) {
    require(m >= 1 && m + 1 <= values.size(), ErrorCode::IndexOutOfRange,
            "need eigenvalues up to lambda_{m+1}, m = " + std::to_string(m));
}

inline double partial_sum(std::span<const double> values, std::size_t m) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += values[j];
    return s;
}

/// Largest lambda_{m+1} permitted by each classic inequality.
inline double implied_upper(std::span<const double> l, std::size_t m, double n, ClassicBound which) {
    const double md = static_cast<double>(m), s = partial_sum(l, m);
    const double c = 1.0 + 4.0 / n;
    switch (which) {
    case ClassicBound::ppw: return l[m - 1] + 4.0 / (md * n) * s;
    case ClassicBound::yang2: return c * s / md;
    case ClassicBound::yang1: {
        // m z^2 - (1+c) S z + c Q = 0, larger root.
        double q = 0.0;
        for (std::size_t j = 0; j < m; ++j) q += l[j] * l[j];
        const double b = (1.0 + c) * s;
        const double disc = std::max(0.0, b * b - 4.0 * md * c * q);
        return (b + std::sqrt(disc)) / (2.0 * md);
    }
    case ClassicBound::hp: {
        // sum lambda_j/(z - lambda_j) = m n/4 is decreasing in z > lambda_m.
        const double target = md * n / 4.0;
        auto f = [&](double z) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += l[j] / (z - l[j]);
            return acc - target;
        };
        double lo = l[m - 1], hi = l[m - 1] + std::max(1.0, std::abs(l[m - 1]));
        while (f(hi) > 0.0) hi = l[m - 1] + 2.0 * (hi - l[m - 1]);
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (f(mid) > 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    }
    return 0.0;
}

} // namespace detail

/**
 * @brief PPW, Hile-Protter and Yang's inequalities for lambda_1..lambda_{m+1}.
 *
 * metadata["upper_next"] is the largest lambda_{m+1} the inequality allows;
 * these nest as yang1 <= yang2 <= hp <= ppw.
 */
inline BoundReport classic_bound(std::span<const double> values, std::size_t m, int n_dim, ClassicBound which,
                                 std::optional<double> z = std::nullopt) {
    detail::require_index(values, m);
    require(n_dim >= 1, ErrorCode::InvalidArgument, "dimension must be positive");
    const double n = n_dim, md = static_cast<double>(m);
    const double s = detail::partial_sum(values, m);
    const double next = values[m], last = values[m - 1];
    BoundReport r;
    switch (which) {
    case ClassicBound::ppw:
        r = make_bound_report("ppw", m, 4.0 / (md * n) * s, next - last);
        break;
    case ClassicBound::hp: {
        require(values[0] > 0.0, ErrorCode::NotPositive, "hp needs a positive spectrum");
        double lhs = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            lhs += next > values[j] ? values[j] / (next - values[j]) : std::numeric_limits<double>::infinity();
        r = make_bound_report("hp", m, md * n / 4.0, lhs, BoundSense::lower);
        break;
    }
    case ClassicBound::yang1: {
        double zz = next;
        if (z) {
            require(*z > last && *z <= next, ErrorCode::InvalidZ, "z must lie in (lambda_m, lambda_{m+1}]");
            zz = *z;
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) sum += (zz - values[j]) * (zz - (1.0 + 4.0 / n) * values[j]);
        r = make_bound_report("yang1", m, 0.0, sum);
        r.metadata["z"] = zz;
        break;
    }
    case ClassicBound::yang2:
        r = make_bound_report("yang2", m, (1.0 + 4.0 / n) * s / md, next);
        break;
    }
    r.metadata["n_dim"] = n;
    r.metadata["upper_next"] = detail::implied_upper(values, m, n, which);
    return r;
}

inline BoundReport classic_bound(const Spectrum& spec, std::size_t m, int n_dim, ClassicBound which,
                                 std::optional<double> z = std::nullopt) {
    return classic_bound(std::span<const double>(spec.values), m, n_dim, which, z);
}

namespace detail {

struct CommutatorSums {
    double norm2 = 0.0;  // sum_j |[H,G] phi_j|^2
    double form = 0.0;   // sum_j <[[H,G],G] phi_j, phi_j>
    double scale = 0.0;  // sum_j |[H,G] phi_j| |G phi_j|
    RealVector per_norm2, per_form;
};

inline CommutatorSums commutator_sums(const RealSymMatrix& h, const Spectrum& spec, const RealMatrix& g,
                                      std::size_t m) {
    require(g.rows() == h.size() && spec.dimension() == h.size(), ErrorCode::DimensionMismatch,
            "H, G and the spectrum must share a dimension");
    CommutatorSums out;
    for (std::size_t j = 0; j < m; ++j) {
        const RealVector phi = spec.vector(j);
        const RealVector c = apply_commutator(h.matrix(), g, phi);
        const RealVector gphi = g * phi;
        const double n2 = norm2_squared(c);
        const double f = -2.0 * inner(c, gphi);
        out.per_norm2.push_back(n2);
        out.per_form.push_back(f);
        out.norm2 += n2;
        out.form += f;
        out.scale += std::sqrt(n2) * norm2(gphi);
    }
    return out;
}

} // namespace detail

/**
 * @brief -(lambda_{m+1}-lambda_m) sum <[[H,G],G]phi_j,phi_j> <= 2 sum |[H,G]phi_j|^2.
 *
 * With a negative form sum this is a gap bound; otherwise the raw inequality
 * is reported with diagnostic "DegenerateDenominator".
 */
inline BoundReport abstract_gap_bound(const RealSymMatrix& h, const Spectrum& spec, const RealMatrix& g,
                                      std::size_t m) {
    detail::require_index(spec.values, m);
    require(is_symmetric(g), ErrorCode::NotSymmetric, "G must be symmetric");
    const auto s = detail::commutator_sums(h, spec, g, m);
    const double gap = spec.values[m] - spec.values[m - 1];
    BoundReport r;
    if (-s.form > 1e-13 * s.scale && -s.form > 0.0) {
        r = make_bound_report("abstract_gap", m, 2.0 * s.norm2 / -s.form, gap);
    } else {
        r = make_bound_report("abstract_gap", m, 2.0 * s.norm2, -gap * s.form);
        r.diagnostic = "DegenerateDenominator";
    }
    r.metadata["commutator_norm2"] = s.norm2;
    r.metadata["double_commutator_form"] = s.form;
    return r;
}

/// sum (z-lambda_j)|[H,G]phi_j|^2 >= -1/2 sum (z-lambda_j)^2 <[[H,G],G]phi_j,phi_j>.
inline BoundReport abstract_yang_bound(const RealSymMatrix& h, const Spectrum& spec, const RealMatrix& g,
                                       std::size_t m, double z) {
    detail::require_index(spec.values, m);
    require(is_symmetric(g), ErrorCode::NotSymmetric, "G must be symmetric");
    require(z > spec.values[m - 1] && z <= spec.values[m], ErrorCode::InvalidZ,
            "z must lie in (lambda_m, lambda_{m+1}]");
    const auto s = detail::commutator_sums(h, spec, g, m);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double d = z - spec.values[j];
        lhs += d * s.per_norm2[j];
        rhs += -0.5 * d * d * s.per_form[j];
    }
    auto r = make_bound_report("abstract_yang", m, rhs, lhs, BoundSense::lower);
    r.metadata["z"] = z;
    return r;
}

// ---------------------------------------------------------------------------
// Variable coefficients

namespace detail {

struct CoefficientExtremes {
    double sup_divergence = 0.0; // sup sum_i (sum_l d_l a_li)^2 / Tr A
    double sup_max_eig = 0.0;
    double inf_trace = std::numeric_limits<double>::infinity();
};

inline CoefficientExtremes coefficient_extremes(const CoefficientField& a, const std::vector<std::array<double, 2>>& pts,
                                                double h1, double h2) {
    CoefficientExtremes e;
    const int dim = a.dim();
    for (const auto& p : pts) {
        const double x = p[0], y = p[1];
        a.check_positive(x, y);
        const auto t = a(x, y);
        double div = 0.0;
        if (dim == 1) {
            const double d = (a(x + h1, y).a11 - a(x - h1, y).a11) / (2 * h1);
            div = d * d;
        } else {
            const auto xp = a(x + h1, y), xm = a(x - h1, y), yp = a(x, y + h2), ym = a(x, y - h2);
            const double i1 = (xp.a11 - xm.a11) / (2 * h1) + (yp.a12 - ym.a12) / (2 * h2);
            const double i2 = (xp.a12 - xm.a12) / (2 * h1) + (yp.a22 - ym.a22) / (2 * h2);
            div = i1 * i1 + i2 * i2;
        }
        e.sup_divergence = std::max(e.sup_divergence, div / t.trace(dim));
        e.sup_max_eig = std::max(e.sup_max_eig, t.max_eig(dim));
        e.inf_trace = std::min(e.inf_trace, t.trace(dim));
    }
    return e;
}

inline double varicoeff_value(const CoefficientExtremes& e, double sum_lambda, double md, double p) {
    const double q = p / (p - 1.0);
    return p * e.sup_divergence / md + 4.0 * q * sum_lambda * e.sup_max_eig / (md * e.inf_trace);
}

inline BoundReport varicoeff_report(const CoefficientExtremes& e, std::span<const double> values, std::size_t m,
                                    std::optional<double> p) {
    require_index(values, m);
    const double md = static_cast<double>(m), s = partial_sum(values, m);
    double best_p = 1.01, best = varicoeff_value(e, s, md, best_p);
    constexpr int kPoints = 60;
    for (int k = 0; k < kPoints; ++k) {
        const double pk = 1.01 * std::pow(100.0 / 1.01, static_cast<double>(k) / (kPoints - 1));
        const double v = varicoeff_value(e, s, md, pk);
        if (v < best) {
            best = v;
            best_p = pk;
        }
    }
    double chosen = best_p;
    if (p) {
        require(*p > 1.0, ErrorCode::InvalidArgument, "p must exceed 1");
        chosen = *p;
    }
    auto r = make_bound_report("varicoeff", m, varicoeff_value(e, s, md, chosen), values[m] - values[m - 1]);
    r.metadata["p"] = chosen;
    r.metadata["q"] = chosen / (chosen - 1.0);
    r.metadata["best_p"] = best_p;
    r.metadata["best_bound"] = best;
    return r;
}

} // namespace detail

/**
 * @brief Gap bound for -div(A grad) with Dirichlet conditions.
 *
 * sup_x p sum_i (sum_l d_l a_li)^2 / (m Tr A) + 4q (sum lambda_j) sup maxeig A / (m inf Tr A),
 * (p-1)(q-1) = 1. Sup/inf over the grid nodes; coefficient derivatives by
 * centered differences at the grid spacing. Without p the best p of a
 * 60-point log grid on [1.01, 100] is used.
 */
inline BoundReport varicoeff_bound(const CoefficientField& a, const Grid1D& grid, std::span<const double> values,
                                   std::size_t m, std::optional<double> p = std::nullopt) {
    require(a.dim() == 1, ErrorCode::DimensionMismatch, "1D grid needs a 1D coefficient field");
    std::vector<std::array<double, 2>> pts;
    for (std::size_t i = 0; i < grid.size(); ++i) pts.push_back({grid.x(i), 0.0});
    return detail::varicoeff_report(detail::coefficient_extremes(a, pts, grid.h(), grid.h()), values, m, p);
}

inline BoundReport varicoeff_bound(const CoefficientField& a, const Grid2D& grid, std::span<const double> values,
                                   std::size_t m, std::optional<double> p = std::nullopt) {
    require(a.dim() == 2, ErrorCode::DimensionMismatch, "2D grid needs a 2D coefficient field");
    std::vector<std::array<double, 2>> pts;
    for (auto [i, j] : grid.unknown_nodes()) pts.push_back({grid.x1(i), grid.x2(j)});
    return detail::varicoeff_report(detail::coefficient_extremes(a, pts, grid.h1(), grid.h2()), values, m, p);
}

// ---------------------------------------------------------------------------
// Multigap estimate on a 2D Dirichlet domain

struct MultigapResult {
    BoundReport aggregate;               // sum_l lambda_{m+l} <= (4+n) lambda_m
    std::vector<BoundReport> directions; // lambda_{m+n-l+1} - lambda_m <= 4 int (d phi_m / d x'_l)^2
    RealMatrix w;                        // w(i, l) = int (d phi_m / d x_l) phi_{m+1+i}
    RealMatrix q;                        // orthogonal, columns are the rotated axes
    RealMatrix wq;
    double staircase_max = 0.0;
    double orthogonality_defect = 0.0;
    double gradient_energy = 0.0;        // sum_l int (d phi_m / d x_l)^2
};

/**
 * @brief Rotate coordinates so that w_{m,m+i,l} = 0 for l <= n - i, then
 * bound the gaps direction by direction.
 *
 * Householder reflections act on the columns of W from the right; reflection
 * i only touches columns 1..n-i+1, which preserves the zeros of earlier rows.
 * Fields are normalized so that int phi^2 = 1 with cell weight h1 h2.
 */
inline MultigapResult multigap_rotation(const Spectrum& spec, const Grid2D& grid, std::size_t m) {
    constexpr std::size_t n = 2;
    require(m >= 1, ErrorCode::IndexOutOfRange, "m is 1-based");
    require(spec.count() >= m + n, ErrorCode::InsufficientSpectrum, "need eigenpairs up to lambda_{m+n}");
    require(grid.bc() == BoundaryCondition::dirichlet && spec.dimension() == grid.size(), ErrorCode::DimensionMismatch,
            "spectrum must come from a Dirichlet problem on this grid");
    const double wt = grid.cell_area();
    const double inv_norm = 1.0 / std::sqrt(wt);
    auto field = [&](std::size_t k) {
        RealVector v = spec.vector(k);
        for (double& x : v) x *= inv_norm;
        return v;
    };
    const RealVector phi_m = field(m - 1);
    const RealVector grad[n] = {centered_gradient(grid, phi_m, 1), centered_gradient(grid, phi_m, 2)};

    MultigapResult out;
    out.w = RealMatrix(n - 1, n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const RealVector pk = field(m + i);
        for (std::size_t l = 0; l < n; ++l) out.w(i, l) = wt * inner(grad[l], pk);
    }

    RealMatrix q = RealMatrix::identity(n);
    RealMatrix wq = out.w;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t len = n - i; // active columns 0..len-1, target column len-1
        RealVector v(len);
        double norm = 0.0;
        for (std::size_t c = 0; c < len; ++c) {
            v[c] = wq(i, c);
            norm += v[c] * v[c];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        // Reflect row segment onto +-norm e_{len-1}.
        const double alpha = v[len - 1] >= 0.0 ? -norm : norm;
        v[len - 1] -= alpha;
        const double vv = inner(v, v);
        if (vv == 0.0) continue;
        auto reflect = [&](RealMatrix& mat) {
            for (std::size_t r = 0; r < mat.rows(); ++r) {
                double dot = 0.0;
                for (std::size_t c = 0; c < len; ++c) dot += mat(r, c) * v[c];
                const double f = 2.0 * dot / vv;
                for (std::size_t c = 0; c < len; ++c) mat(r, c) -= f * v[c];
            }
        };
        reflect(wq);
        reflect(q);
    }
    out.q = q;
    out.wq = out.w * q;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t l = 0; l + 1 + i < n; ++l) out.staircase_max = std::max(out.staircase_max, std::abs(out.wq(i, l)));
    const RealMatrix qtq = transpose(q) * q;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            out.orthogonality_defect = std::max(out.orthogonality_defect, std::abs(qtq(a, b) - (a == b ? 1.0 : 0.0)));

    const double lm = spec.values[m - 1];
    double sum_next = 0.0;
    // Gradient energy tensor: edge differences on the diagonal, centered products off it.
    RealMatrix e(n, n);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d)
            e(c, d) = c == d ? edge_energy(grid, phi_m, static_cast<int>(c + 1)) : wt * inner(grad[c], grad[d]);
    for (std::size_t l = 0; l < n; ++l) {
        double energy = 0.0;
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t d = 0; d < n; ++d) energy += q(c, l) * e(c, d) * q(d, l);
        out.gradient_energy += energy;
        const std::size_t k = m + n - l - 1; // 0-based index of lambda_{m+n-l}
        auto r = make_bound_report("multigap_direction", m, 4.0 * energy, spec.values[k] - lm);
        r.metadata["direction"] = static_cast<double>(l + 1);
        out.directions.push_back(std::move(r));
        sum_next += spec.values[m + l];
    }
    out.aggregate = make_bound_report("multigap", m, (4.0 + n) * lm, sum_next);
    out.aggregate.metadata["gradient_energy"] = out.gradient_energy;
    out.aggregate.metadata["staircase_max"] = out.staircase_max;
    return out;
}

// ---------------------------------------------------------------------------
// Neumann Laplacian with ball bumps

/**
 * @brief Gap bound with G = multiplication by the ball bump g.
 *
 * The bound is the commutator ratio 2 sum |[H,G]phi_j|^2 / (-sum <[[H,G],G]phi_j,phi_j>).
 * metadata reports the constants the two closed-form shapes would need to
 * reproduce it: c3 for the general radii shape, c4 for the equal radii one.
 */
template <typename GridT>
BoundReport neumann_ball_bound(const RealSymMatrix& h, const GridT& grid, const BallArrangement& balls,
                               const Spectrum& spec, std::size_t m) {
    detail::require_index(spec.values, m);
    const double top = std::max(1.0, std::abs(spec.values[m]));
    require(std::abs(spec.values[0]) <= 1e-8 * top, ErrorCode::NotNeumann, "lowest eigenvalue is not 0");
    const RealVector g = neumann_bump(grid, balls);
    const RealMatrix gm = multiplication_operator(g).matrix();
    auto r = abstract_gap_bound(h, spec, gm, m);
    r.name = "neumann_ball";

    if (balls.count() > 0 && r.diagnostic.empty()) {
        double volume;
        if constexpr (std::is_same_v<GridT, Grid1D>)
            volume = grid.b - grid.a;
        else
            volume = grid.area();
        const double n = balls.dim;
        const double sum_lambda = detail::partial_sum(spec.values, m);
        const double rq = balls.radii.back();
        double sum_rn = 0.0, sum_r4 = 0.0;
        for (double rp : balls.radii) {
            sum_rn += std::pow(rp, n - 2.0);
            sum_r4 += std::pow(rp, -4.0);
        }
        const double shape2 = volume / sum_rn * (sum_r4 + std::pow(rq, -2.0) * sum_lambda);
        const double shape3 =
            volume * std::pow(rq, -n) * (std::pow(rq, -2.0) + sum_lambda / static_cast<double>(balls.count()));
        r.metadata["c3"] = r.bound / shape2;
        r.metadata["c4"] = r.bound / shape3;
        r.metadata["shape_general"] = shape2;
        r.metadata["shape_equal"] = shape3;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Elasticity

inline double elasticity_coefficient(double alpha, int n_dim, std::size_t m) {
    const double n = n_dim;
    return std::max(4.0 + alpha * alpha, (n + 2.0) * alpha + 8.0) / (static_cast<double>(m) * (n + alpha));
}

/// Lambda_{m+1} - Lambda_m <= max(4+a^2, (n+2)a+8)/(m(n+a)) sum Lambda_j.
inline BoundReport elasticity_bound(std::span<const double> values, double alpha, int n_dim, std::size_t m) {
    detail::require_index(values, m);
    require(alpha > 0.0, ErrorCode::InvalidArgument, "alpha must be positive");
    const double coef = elasticity_coefficient(alpha, n_dim, m);
    auto r = make_bound_report("elasticity", m, coef * detail::partial_sum(values, m), values[m] - values[m - 1]);
    r.metadata["alpha"] = alpha;
    r.metadata["n_dim"] = n_dim;
    r.metadata["coefficient"] = coef;
    return r;
}

/// As above, with the intermediate sum_j sum_l |(2S_l + a R_l)u_j|^2 / (m(n+a)) in metadata["elast1"].
inline BoundReport elasticity_bound(const Spectrum& spec, const Grid2D& grid, double alpha, std::size_t m) {
    auto r = elasticity_bound(std::span<const double>(spec.values), alpha, 2, m);
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const RealVector u = spec.vector(j);
        const auto f = elasticity_forms(grid, alpha, u);
        sum += f.combined_norm2 / (grid.cell_area() * norm2_squared(u));
    }
    r.metadata["elast1"] = sum / (static_cast<double>(m) * (2.0 + alpha));
    return r;
}

// ---------------------------------------------------------------------------
// Pairs of operators

/**
 * @brief Distance estimates for mu_j (eigenvalue of H2) from spec H1.
 *
 * Returns nonsaest1 (dist), nonsaest2 (real part), nonsaest3 (imaginary
 * part). A zero denominator makes the estimate vacuous: bound = +inf.
 */
inline std::array<BoundReport, 3> pair_estimates(const CommutatorBundle& bd, const Spectrum& spec1,
                                                 const ComplexSpectrum& spec2, std::size_t j) {
    require(bd.adjoint_pair, ErrorCode::ConstraintViolated, "estimates need G2* = G1");
    require(j < spec2.count() && j < bd.a_j.size(), ErrorCode::IndexOutOfRange, "eigen index out of range");
    require(spec1.count() >= 1, ErrorCode::IncompleteSpectrum, "spectrum of H1 is empty");
    const complex mu = spec2.values[j];
    const double a = bd.a_j[j], dm = bd.d_minus[j], dp = bd.d_plus[j];
    double dist = std::numeric_limits<double>::infinity(), dist_re = dist, middle = dist;
    for (double l : spec1.values) {
        const complex d = mu - l;
        dist = std::min(dist, std::abs(d));
        dist_re = std::min(dist_re, std::abs(d.real()));
        if (d.real() != 0.0) middle = std::min(middle, std::norm(d) / std::abs(d.real()));
    }
    const double scale = std::abs(dm) + std::abs(dp) + a;
    const double inf = std::numeric_limits<double>::infinity();
    auto bound_of = [&](double den) { return den > 1e-10 * scale ? 2.0 * a / den : inf; };

    std::array<BoundReport, 3> out{
        make_bound_report("nonsaest1", j + 1, bound_of(std::hypot(dm, dp)), dist),
        make_bound_report("nonsaest2", j + 1, bound_of(std::abs(dm)), dist_re),
        make_bound_report("nonsaest3", j + 1, bound_of(std::abs(dp)), std::abs(mu.imag())),
    };
    out[1].metadata["middle"] = middle;
    for (auto& r : out) {
        r.j = j;
        r.metadata["a_j"] = a;
        r.metadata["d_minus"] = dm;
        r.metadata["d_plus"] = dp;
        if (std::isinf(r.bound)) r.diagnostic = "vacuous";
    }
    return out;
}

/**
 * @brief sum_{k != m} w_{m,k}^2 / (lambda_k - lambda_m) with w_{m,k} = int phi_m' phi_k.
 *
 * Needs the full spectrum of a 1D Dirichlet problem; phi_m' is the centered
 * difference with zero boundary values. m is 1-based.
 */
inline double coordinate_w_sum(const Grid1D& grid, const Spectrum& spec, std::size_t m) {
    require(grid.bc == BoundaryCondition::dirichlet, ErrorCode::UnsupportedBC, "Dirichlet problem required");
    require(spec.count() == grid.size() && spec.dimension() == grid.size(), ErrorCode::IncompleteSpectrum,
            "full spectrum required");
    detail::require_index(spec.values, m);
    const std::size_t n = grid.size();
    const RealVector phi = spec.vector(m - 1);
    RealVector d(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double up = i + 1 < n ? phi[i + 1] : 0.0;
        const double dn = i > 0 ? phi[i - 1] : 0.0;
        d[i] = (up - dn) / (2.0 * grid.h());
    }
    const double lm = spec.values[m - 1];
    const double tau = DegeneracyPolicy::for_spectrum(spec).cluster_tol;
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(spec.values[k] - lm) <= tau) continue;
        // Unit l2 vectors: the h from the integral cancels the 1/sqrt(h) of each L2 normalization.
        const double w = inner(d, spec.vector(k));
        sum += w * w / (spec.values[k] - lm);
    }
    return sum;
}

/// Spectrum of a real symmetric matrix in complex form.
inline ComplexSpectrum as_complex(const Spectrum& s) {
    ComplexSpectrum c;
    c.values.assign(s.values.begin(), s.values.end());
    c.vectors = to_complex(s.vectors);
    return c;
}

struct SchrodingerPairQuantities {
    double a_direct = 0.0;
    complex d_minus_direct{};
    complex d_plus_direct{};
    double a_bundle = 0.0;
    double d_minus_bundle = 0.0;
    double d_plus_bundle = 0.0;
    double min_second = 0.0;      // min V2'' on the nodes
    double sqrt_min_second = 0.0; // sqrt of the above, the other candidate lower bound for d^-
    double a_majorant = 0.0;      // |V1-V2|_1^2 lambda_j^2 + |V2'|_1^2 (informational)
};

/**
 * @brief a_j, d_j^- and d_j^+ for H1 = -d2 + V1 (Neumann), H2 = -d2 + V2
 * (Dirichlet), G = i d/dx, both on cell-centered nodes.
 *
 * Direct values use the differential expressions
 *   A  = (V1-V2) i d/dx - i V2'
 *   D+ = 2 V2' d/dx + V2''
 *   D- = 2(V1-V2) d2/dx2 + 2(V1'-V2') d/dx - V2''
 * with derivatives of psi taken with the Dirichlet ghost closure. Bundle
 * values come from `bd`.
 */
inline SchrodingerPairQuantities schrodinger_pair_quantities(const Potential& v1, const Potential& v2,
                                                             const Grid1D& grid, const ComplexSpectrum& spec2,
                                                             std::size_t j, const CommutatorBundle* bd = nullptr) {
    require(grid.layout == NodeLayout::cell && grid.bc == BoundaryCondition::dirichlet, ErrorCode::UnsupportedBC,
            "pair quantities use the cell-centered Dirichlet grid of H2");
    require(spec2.dimension() == grid.size(), ErrorCode::DimensionMismatch, "spectrum does not match the grid");
    require(j < spec2.count(), ErrorCode::IndexOutOfRange, "eigen index out of range");
    const std::size_t n = grid.size();
    const ComplexVector psi = spec2.vector(j);
    const ComplexMatrix ideriv = derivative_operator(grid, DerivativeRows::ghost);
    ComplexVector d1 = ideriv * psi;
    for (auto& x : d1) x *= complex(0.0, -1.0);
    const ComplexVector d2 = to_complex(laplacian(grid).matrix()) * psi; // -psi''

    SchrodingerPairQuantities q;
    ComplexVector apsi(n), dp(n), dm(n);
    q.min_second = std::numeric_limits<double>::infinity();
    double l1_diff = 0.0, l1_d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.x(i);
        const double dv = v1.value(x) - v2.value(x), dv1 = v1.first(x) - v2.first(x);
        const double w1 = v2.first(x), w2 = v2.second(x);
        apsi[i] = complex(0.0, 1.0) * (dv * d1[i] - w1 * psi[i]);
        dp[i] = 2.0 * w1 * d1[i] + w2 * psi[i];
        dm[i] = -2.0 * dv * d2[i] + 2.0 * dv1 * d1[i] - w2 * psi[i];
        q.min_second = std::min(q.min_second, w2);
        l1_diff += std::abs(dv) * grid.h();
        l1_d2 += std::abs(w1) * grid.h();
    }
    q.sqrt_min_second = q.min_second >= 0.0 ? std::sqrt(q.min_second) : std::numeric_limits<double>::quiet_NaN();
    q.a_direct = norm2_squared(apsi);
    q.d_minus_direct = -inner(dm, psi);
    q.d_plus_direct = complex(0.0, -1.0) * inner(dp, psi);
    const double mu = std::abs(spec2.values[j]);
    q.a_majorant = l1_diff * l1_diff * mu * mu + l1_d2 * l1_d2;
    if (bd) {
        require(j < bd->a_j.size(), ErrorCode::IndexOutOfRange, "bundle does not cover index j");
        q.a_bundle = bd->a_j[j];
        q.d_minus_bundle = bd->d_minus[j];
        q.d_plus_bundle = bd->d_plus[j];
    }
    return q;
}

} // namespace spectra_gap
