#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "commutator.hpp"
#include "complex_eig.hpp"
#include "matrix.hpp"
#include "sym_eig.hpp"

namespace spectra_gap {

enum class Identity { id1, id2, id3, id4, id3bis };
enum class PairIdentity { ti1, ti2, ti3, ti4, ti5 };

inline std::string_view to_string(Identity w) {
    switch (w) {
    case Identity::id1: return "id1";
    case Identity::id2: return "id2";
    case Identity::id3: return "id3";
    case Identity::id4: return "id4";
    case Identity::id3bis: return "id3bis";
    }
    return "?";
}

inline std::string_view to_string(PairIdentity w) {
    switch (w) {
    case PairIdentity::ti1: return "ti1";
    case PairIdentity::ti2: return "ti2";
    case PairIdentity::ti3: return "ti3";
    case PairIdentity::ti4: return "ti4";
    case PairIdentity::ti5: return "ti5";
    }
    return "?";
}

inline std::optional<Identity> parse_identity(std::string_view s) {
    for (auto w : {Identity::id1, Identity::id2, Identity::id3, Identity::id4, Identity::id3bis})
        if (to_string(w) == s) return w;
    return std::nullopt;
}

inline std::optional<PairIdentity> parse_pair_identity(std::string_view s) {
    for (auto w : {PairIdentity::ti1, PairIdentity::ti2, PairIdentity::ti3, PairIdentity::ti4, PairIdentity::ti5})
        if (to_string(w) == s) return w;
    return std::nullopt;
}

/// Tolerance ladder by problem size.
inline double identity_tolerance(std::size_t n) {
    if (n <= 40) return 1e-10;
    if (n <= 1000) return 1e-8;
    return 1e-6;
}

/**
 * @brief Treatment of (near-)equal eigenvalues.
 *
 * Terms with |lambda_k - lambda_j| <= cluster_tol are dropped (0/0 = 0) and
 * their numerators recorded.
 */
struct DegeneracyPolicy {
    double cluster_tol = 1e-8;
    double tolerance = 1e-10;

    static DegeneracyPolicy for_values(std::span<const double> values) {
        double radius = 0.0;
        for (double v : values) radius = std::max(radius, std::abs(v));
        return {std::max(1e-8, 1e-10 * radius), identity_tolerance(values.size())};
    }
    static DegeneracyPolicy for_spectrum(const Spectrum& s) { return for_values(s.values); }
};

/**
 * @brief Both sides of one identity for one index j.
 *
 * `scale` is the size of the largest quantity entering either side; a report
 * also passes when abs_residual <= tolerance * scale, which covers identities
 * whose two sides cancel to rounding.
 */
struct IdentityReport {
    std::string name;
    std::size_t j = 0;
    complex lhs{};
    complex rhs{};
    double abs_residual = 0.0;
    double rel_residual = 0.0;
    std::size_t skipped_terms = 0;
    double max_skipped_numerator = 0.0;
    double scale = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

namespace detail {

inline void finish(IdentityReport& r) {
    r.abs_residual = std::abs(r.lhs - r.rhs);
    r.rel_residual = r.abs_residual / (std::abs(r.lhs) + std::abs(r.rhs) + 1e-300);
    r.pass = r.rel_residual <= r.tolerance || r.abs_residual <= r.tolerance * r.scale;
}

/// Coefficients <x, phi_k> for every column of v.
inline RealVector coefficients(const RealMatrix& v, const RealVector& x) {
    RealVector c(v.cols(), 0.0);
    for (std::size_t i = 0; i < v.rows(); ++i) {
        auto row = v.row(i);
        const double xi = x[i];
        for (std::size_t k = 0; k < v.cols(); ++k) c[k] += xi * row[k];
    }
    return c;
}

inline ComplexVector coefficients(const ComplexMatrix& v, const ComplexVector& x) {
    ComplexVector c(v.cols());
    for (std::size_t i = 0; i < v.rows(); ++i) {
        auto row = v.row(i);
        const complex xi = x[i];
        for (std::size_t k = 0; k < v.cols(); ++k) c[k] += xi * std::conj(row[k]);
    }
    return c;
}

inline void check_single_inputs(const RealSymMatrix& h, const Spectrum& spec, const RealMatrix& g, std::size_t j) {
    require(g.square() && g.rows() == h.size() && spec.dimension() == h.size(), ErrorCode::DimensionMismatch,
            "H, G and the spectrum must share a dimension");
    require(spec.complete(), ErrorCode::IncompleteSpectrum, "trace identities need every eigenpair");
    require(j < spec.count(), ErrorCode::IndexOutOfRange, "eigen index out of range");
}

/// Core of id1..id4 with a symmetric G given through its action.
template <typename ApplyG>
IdentityReport single_core(const RealSymMatrix& h, const Spectrum& spec, ApplyG apply_g, Identity which,
                           std::size_t j, const DegeneracyPolicy& policy) {
    const std::size_t n = h.size();
    const RealVector phi = spec.vector(j);
    const double lj = spec.values[j];
    const RealVector gphi = apply_g(phi);
    RealVector cphi = h.apply(gphi);
    {
        const RealVector ghphi = apply_g(h.apply(phi));
        for (std::size_t i = 0; i < n; ++i) cphi[i] -= ghphi[i];
    }
    const RealVector gk = coefficients(spec.vectors, gphi);
    const RealVector ck = coefficients(spec.vectors, cphi);
    // <[[H,G],G] phi, phi> = -2 <[H,G] phi, G phi> for symmetric H, G.
    const double double_form = -2.0 * inner(cphi, gphi);

    IdentityReport r;
    r.name = std::string(to_string(which));
    r.j = j;
    r.tolerance = policy.tolerance;
    double lhs = 0.0, magnitude = 0.0;
    double projected = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = spec.values[k] - lj;
        const bool clustered = std::abs(d) <= policy.cluster_tol;
        double term = 0.0;
        switch (which) {
        case Identity::id1:
        case Identity::id3:
        case Identity::id3bis:
            if (clustered) {
                if (k != j) {
                    ++r.skipped_terms;
                    r.max_skipped_numerator = std::max(r.max_skipped_numerator, std::abs(ck[k]));
                }
                projected += gk[k] * gk[k];
                continue;
            }
            term = which == Identity::id1 ? ck[k] * ck[k] / d : ck[k] * ck[k] / (d * d);
            break;
        case Identity::id2: term = d * gk[k] * gk[k]; break;
        case Identity::id4: term = d * d * gk[k] * gk[k]; break;
        }
        lhs += term;
        magnitude += std::abs(term);
    }
    const double gnorm2 = norm2_squared(gphi), cnorm2 = norm2_squared(cphi);
    double radius = 0.0;
    for (double v : spec.values) radius = std::max(radius, std::abs(v));
    double rhs = 0.0;
    switch (which) {
    case Identity::id1:
    case Identity::id2:
        rhs = -0.5 * double_form;
        r.scale = magnitude + std::sqrt(cnorm2 * gnorm2) + radius * gnorm2;
        break;
    case Identity::id3:
        rhs = gnorm2 - projected;
        r.scale = magnitude + gnorm2;
        break;
    case Identity::id3bis:
        // Cluster components of [H,F] phi_j vanish; their size is the diagnostic.
        for (std::size_t k = 0; k < n; ++k)
            if (k != j && std::abs(spec.values[k] - lj) <= policy.cluster_tol)
                r.max_skipped_numerator = std::max(r.max_skipped_numerator, std::abs(gk[k]));
        r.max_skipped_numerator = std::max(r.max_skipped_numerator, std::abs(gk[j]));
        rhs = gnorm2;
        r.scale = magnitude + gnorm2;
        break;
    case Identity::id4:
        rhs = cnorm2;
        r.scale = magnitude + cnorm2 + radius * radius * gnorm2;
        break;
    }
    r.lhs = lhs;
    r.rhs = rhs;
    finish(r);
    return r;
}

} // namespace detail

/**
 * @brief id1..id4 for eigenpair j of H and a symmetric G.
 *
 * id1: sum_k |<[H,G]phi_j,phi_k>|^2/(lambda_k-lambda_j) = -1/2 <[[H,G],G]phi_j,phi_j>
 * id2: sum_k (lambda_k-lambda_j)|<G phi_j,phi_k>|^2      = same
 * id3: sum_k |<[H,G]phi_j,phi_k>|^2/(lambda_k-lambda_j)^2 = |G phi_j|^2 - |P_j G phi_j|^2
 * id4: sum_k (lambda_k-lambda_j)^2 |<G phi_j,phi_k>|^2    = |[H,G]phi_j|^2
 */
inline IdentityReport single_identity(const RealSymMatrix& h, const Spectrum& spec, const RealMatrix& g, Identity which,
                                      std::size_t j, const DegeneracyPolicy& policy) {
    require(which != Identity::id3bis, ErrorCode::InvalidArgument, "id3bis is evaluated by skew_identity");
    detail::check_single_inputs(h, spec, g, j);
    require(is_symmetric(g), ErrorCode::NotSymmetric, "G must be symmetric");
    return detail::single_core(h, spec, [&](const RealVector& v) { return g * v; }, which, j, policy);
}

/// id3bis: id3 for G = [H, F] with F antisymmetric; the projector term vanishes.
inline IdentityReport skew_identity(const RealSymMatrix& h, const Spectrum& spec, const RealMatrix& f, std::size_t j,
                                    const DegeneracyPolicy& policy) {
    detail::check_single_inputs(h, spec, f, j);
    require(is_antisymmetric(f), ErrorCode::NotSkew, "F must be antisymmetric");
    const RealMatrix& hm = h.matrix();
    auto apply_hf = [&](const RealVector& v) { return apply_commutator(hm, f, v); };
    return detail::single_core(h, spec, apply_hf, Identity::id3bis, j, policy);
}

struct VirialReport {
    double max_element = 0.0;
    double commutator_norm = 0.0;
    std::size_t clusters = 0;
    bool pass = true;
};

/**
 * @brief <[H,G]phi_j, phi_k> = 0 for equal eigenvalues.
 *
 * Each cluster basis is first rotated to diagonalize <G phi_j, phi_k>.
 */
inline VirialReport virial_check(const RealSymMatrix& h, const Spectrum& spec, const RealMatrix& g,
                                 const DegeneracyPolicy& policy) {
    require(g.square() && g.rows() == h.size() && spec.dimension() == h.size(), ErrorCode::DimensionMismatch,
            "H, G and the spectrum must share a dimension");
    require(is_symmetric(g), ErrorCode::NotSymmetric, "G must be symmetric");
    VirialReport r;
    r.commutator_norm = frobenius_norm(commutator(h.matrix(), g));
    const std::size_t count = spec.count();
    for (std::size_t start = 0; start < count;) {
        std::size_t end = start + 1;
        while (end < count && spec.values[end] - spec.values[end - 1] <= policy.cluster_tol) ++end;
        const std::size_t s = end - start;
        if (s >= 2) {
            ++r.clusters;
            std::vector<RealVector> basis, gbasis;
            for (std::size_t k = start; k < end; ++k) {
                basis.push_back(spec.vector(k));
                gbasis.push_back(g * basis.back());
            }
            RealMatrix restricted(s, s);
            for (std::size_t a = 0; a < s; ++a)
                for (std::size_t b = 0; b < s; ++b) restricted(a, b) = inner(gbasis[a], basis[b]);
            const Spectrum rot = sym_eig(RealSymMatrix::symmetrized(restricted));
            std::vector<RealVector> w(s, RealVector(h.size(), 0.0));
            for (std::size_t c = 0; c < s; ++c)
                for (std::size_t a = 0; a < s; ++a) w[c] = axpy(rot.vectors(a, c), basis[a], std::move(w[c]));
            for (std::size_t a = 0; a < s; ++a) {
                const RealVector cw = apply_commutator(h.matrix(), g, w[a]);
                for (std::size_t b = 0; b < s; ++b) r.max_element = std::max(r.max_element, std::abs(inner(cw, w[b])));
            }
        }
        start = end;
    }
    r.pass = r.max_element <= 1e-8 * r.commutator_norm;
    return r;
}

/**
 * @brief Mixing commutators of a pair (H1, H2) with intertwiners G1, G2.
 *
 * A = [H1,H2;G1*], B = [H1,H2;G2], C = [H2*,H1;G2*], D+- = C G1* +- G1 B.
 * Per eigenvector psi_j of H2: a_j = |A psi_j|^2, d_j^- = -<D- psi_j,psi_j>,
 * d_j^+ = -i<D+ psi_j,psi_j>.
 */
struct CommutatorBundle {
    ComplexMatrix h1, h2, g1, g2;
    ComplexMatrix a, b, c, dplus, dminus;
    RealVector a_j, d_minus, d_plus;
    double max_imag_d = 0.0;
    /// |C + B*|_F relative to |H1||G2| + |G2||H2|.
    double c_plus_bstar = 0.0;
    bool adjoint_pair = false; // G2* = G1
    bool selfadjoint_pair = false; // H2 = H2*, G1 = G1* = G2
};

inline bool nearly_equal(const ComplexMatrix& x, const ComplexMatrix& y, double rel = 1e-12) {
    const double s = std::max(max_abs(x), max_abs(y));
    for (std::size_t k = 0; k < x.data().size(); ++k)
        if (std::abs(x.data()[k] - y.data()[k]) > rel * s) return false;
    return true;
}

inline CommutatorBundle pair_bundle(const RealSymMatrix& h1, const ComplexMatrix& h2, const ComplexMatrix& g1,
                                    const ComplexMatrix& g2, const ComplexSpectrum& spec2) {
    const std::size_t n = h1.size();
    for (const ComplexMatrix* m : {&h2, &g1, &g2})
        require(m->rows() == n && m->cols() == n, ErrorCode::DimensionMismatch, "pair matrices must share a dimension");
    require(spec2.dimension() == n, ErrorCode::DimensionMismatch, "spectrum of H2 has the wrong dimension");
    require(spec2.conditioning <= kDefectiveConditionLimit, ErrorCode::DefectiveOperator, "H2 is defective");
    CommutatorBundle bd;
    bd.h1 = to_complex(h1.matrix());
    bd.h2 = h2;
    bd.g1 = g1;
    bd.g2 = g2;
    const ComplexMatrix g1s = adjoint(g1), g2s = adjoint(g2), h2s = adjoint(h2);
    bd.a = mixed_commutator(bd.h1, h2, g1s);
    bd.b = mixed_commutator(bd.h1, h2, g2);
    bd.c = mixed_commutator(h2s, bd.h1, g2s);
    const ComplexMatrix cg = bd.c * g1s, gb = g1 * bd.b;
    bd.dplus = cg + gb;
    bd.dminus = cg - gb;

    const double ref = frobenius_norm(bd.h1) * frobenius_norm(g2) + frobenius_norm(g2) * frobenius_norm(h2);
    bd.c_plus_bstar = frobenius_norm(bd.c + adjoint(bd.b)) / (ref + 1e-300);
    bd.adjoint_pair = nearly_equal(g2s, g1);
    bd.selfadjoint_pair = is_hermitian(h2) && is_hermitian(g1) && nearly_equal(g1, g2);

    for (std::size_t j = 0; j < spec2.count(); ++j) {
        const ComplexVector psi = spec2.vector(j);
        bd.a_j.push_back(norm2_squared(bd.a * psi));
        const complex dm = -inner(bd.dminus * psi, psi);
        const complex dp = complex(0.0, -1.0) * inner(bd.dplus * psi, psi);
        bd.d_minus.push_back(dm.real());
        bd.d_plus.push_back(dp.real());
        bd.max_imag_d = std::max({bd.max_imag_d, std::abs(dm.imag()) / (1.0 + std::abs(dm)),
                                  std::abs(dp.imag()) / (1.0 + std::abs(dp))});
    }
    return bd;
}

/// Cluster tolerance for a pair problem from both spectra.
inline DegeneracyPolicy pair_policy(const Spectrum& spec1, const ComplexSpectrum& spec2) {
    double radius = 0.0;
    for (double v : spec1.values) radius = std::max(radius, std::abs(v));
    for (const complex& v : spec2.values) radius = std::max(radius, std::abs(v));
    return {std::max(1e-8, 1e-10 * radius), identity_tolerance(spec1.dimension())};
}

/**
 * @brief Trace identities for the pair, eigenvalue mu_j of H2.
 *
 * ti1: Re sum (lambda_k-mu)/|lambda_k-mu|^2 <B psi,phi_k> conj<A psi,phi_k> = -1/2 <D- psi,psi>
 * ti2: i Im of the same sum                                                = 1/2 <D+ psi,psi>
 * ti3: sum (lambda_k-Re mu)/|lambda_k-mu|^2 |<A psi,phi_k>|^2             = -1/2 <D- psi,psi>  (G2* = G1)
 * ti4: i sum Im mu/|lambda_k-mu|^2 |<A psi,phi_k>|^2                      = -1/2 <D+ psi,psi>  (G2* = G1)
 * ti5: sum |<B psi,phi_k>|^2/(lambda_k-mu)                                = -1/2 <(CG-GB) psi,psi> (H2, G self-adjoint)
 */
inline IdentityReport pair_identity(const CommutatorBundle& bd, const Spectrum& spec1, const ComplexSpectrum& spec2,
                                    PairIdentity which, std::size_t j, const DegeneracyPolicy& policy) {
    const std::size_t n = bd.h1.rows();
    require(spec1.dimension() == n && spec2.dimension() == n, ErrorCode::DimensionMismatch,
            "spectra do not match the bundle");
    require(spec1.complete(), ErrorCode::IncompleteSpectrum, "trace identities need every eigenpair of H1");
    require(j < spec2.count(), ErrorCode::IndexOutOfRange, "eigen index out of range");
    if (which == PairIdentity::ti3 || which == PairIdentity::ti4)
        require(bd.adjoint_pair, ErrorCode::ConstraintViolated, "identity needs G2* = G1");
    if (which == PairIdentity::ti5)
        require(bd.selfadjoint_pair, ErrorCode::ConstraintViolated, "identity needs H2 = H2* and G1 = G1* = G2");

    const complex mu = spec2.values[j];
    const ComplexVector psi = spec2.vector(j);
    const ComplexVector apsi = bd.a * psi, bpsi = bd.b * psi;
    const ComplexMatrix phi = to_complex(spec1.vectors);
    const ComplexVector ak = detail::coefficients(phi, apsi), bk = detail::coefficients(phi, bpsi);
    const double na = norm2(apsi), nb = norm2(bpsi);

    IdentityReport r;
    r.name = std::string(to_string(which));
    r.j = j;
    r.tolerance = policy.tolerance;
    complex sum{};
    double magnitude = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const complex dist = spec1.values[k] - mu;
        const double d2 = std::norm(dist);
        double numerator = 0.0;
        complex term{};
        switch (which) {
        case PairIdentity::ti1:
        case PairIdentity::ti2:
            numerator = std::abs(bk[k]) * std::abs(ak[k]);
            term = dist / d2 * bk[k] * std::conj(ak[k]);
            term = which == PairIdentity::ti1 ? complex(term.real(), 0.0) : complex(0.0, term.imag());
            break;
        case PairIdentity::ti3:
            numerator = std::norm(ak[k]);
            term = (spec1.values[k] - mu.real()) / d2 * numerator;
            break;
        case PairIdentity::ti4:
            numerator = std::norm(ak[k]);
            term = complex(0.0, mu.imag() / d2 * numerator);
            break;
        case PairIdentity::ti5:
            numerator = std::norm(bk[k]);
            term = numerator / dist;
            break;
        }
        if (std::abs(dist) <= policy.cluster_tol) {
            const double ref = which == PairIdentity::ti5 ? nb * nb : which == PairIdentity::ti3 || which == PairIdentity::ti4 ? na * na : na * nb;
            if (numerator > 1e-6 * ref)
                throw Error(ErrorCode::NearSingularDenominator,
                            "mu_" + std::to_string(j) + " coincides with lambda_" + std::to_string(k));
            ++r.skipped_terms;
            r.max_skipped_numerator = std::max(r.max_skipped_numerator, numerator);
            continue;
        }
        sum += term;
        magnitude += std::abs(term);
    }
    // ti4 is ti2 with A = B; the imaginary part of lambda_k - mu is -Im mu.
    const bool minus = which == PairIdentity::ti1 || which == PairIdentity::ti3 || which == PairIdentity::ti5;
    const complex form = inner(minus ? bd.dminus * psi : bd.dplus * psi, psi);
    r.lhs = sum;
    r.rhs = minus || which == PairIdentity::ti4 ? -0.5 * form : 0.5 * form;
    r.scale = magnitude + nb * norm2(adjoint(bd.g1) * psi) + na * na;
    detail::finish(r);
    return r;
}

} // namespace spectra_gap
