#include <gtest/gtest.h>

#include <numbers>

#include "random_matrices.hpp"
#include "spectra_gap/grid.hpp"
#include "spectra_gap/identities.hpp"
#include "spectra_gap/operators.hpp"
#include "spectra_gap/oracle.hpp"

using namespace spectra_gap;
using namespace testing_support;

namespace {

constexpr Identity kSingle[] = {Identity::id1, Identity::id2, Identity::id3, Identity::id4};

struct Problem {
    RealSymMatrix h;
    RealMatrix g;
    Spectrum spec;
};

Problem random_problem(std::size_t n, std::uint64_t seed) {
    RealSymMatrix h(random_symmetric(n, seed));
    return {h, random_symmetric(n, seed + 1000), sym_eig(h)};
}

// Finite-difference d/dx on a Dirichlet grid: real antisymmetric.
RealMatrix centered_difference(std::size_t n, double h) {
    RealMatrix f(n, n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        f(i, i + 1) = 1.0 / (2 * h);
        f(i + 1, i) = -1.0 / (2 * h);
    }
    return f;
}

double rel(complex a, complex b) { return std::abs(a - b) / (std::abs(a) + std::abs(b) + 1e-300); }

} // namespace

TEST(Identities, IdentityGIsTrivial) {
    auto p = random_problem(12, 3);
    const auto g = RealMatrix::identity(12);
    const auto pol = DegeneracyPolicy::for_spectrum(p.spec);
    for (auto w : kSingle)
        for (std::size_t j = 0; j < 12; ++j) {
            auto r = single_identity(p.h, p.spec, g, w, j, pol);
            EXPECT_TRUE(r.pass) << to_string(w);
            if (w != Identity::id3) {
                EXPECT_NEAR(std::abs(r.lhs), 0.0, 1e-12);
                EXPECT_NEAR(std::abs(r.rhs), 0.0, 1e-12);
            }
        }
}

TEST(Identities, CommutingDiagonalPair) {
    const RealVector hd{1, 2, 3, 4, 5}, gd{3, -1, 4, 1, -5};
    RealSymMatrix h(RealMatrix::diagonal(std::span<const double>(hd)));
    const auto g = RealMatrix::diagonal(std::span<const double>(gd));
    auto spec = sym_eig(h);
    const auto pol = DegeneracyPolicy::for_spectrum(spec);
    for (auto w : {Identity::id1, Identity::id2, Identity::id4})
        for (std::size_t j = 0; j < 5; ++j) {
            auto r = single_identity(h, spec, g, w, j, pol);
            EXPECT_NEAR(std::abs(r.lhs), 0.0, 1e-13);
            EXPECT_NEAR(std::abs(r.rhs), 0.0, 1e-13);
        }
}

TEST(Identities, RandomSeed42MatchesOracle) {
    auto p = random_problem(40, 42);
    const auto pol = DegeneracyPolicy::for_spectrum(p.spec);
    for (auto w : kSingle)
        for (std::size_t j = 0; j < 40; j += 3) {
            auto r = single_identity(p.h, p.spec, p.g, w, j, pol);
            EXPECT_LE(r.rel_residual, 1e-9) << to_string(w) << " j=" << j;
            EXPECT_TRUE(r.pass);
            auto o = oracle::brute_force_identity(p.h.matrix(), p.g, std::string(to_string(w)), j, p.spec.values,
                                                  p.spec.vectors, pol.cluster_tol);
            EXPECT_LE(rel(r.lhs, o.lhs), 1e-10);
            EXPECT_LE(rel(r.rhs, o.rhs), 1e-10);
        }
}

TEST(Identities, PropertyOverHundredSeeds) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto p = random_problem(12, 7000 + seed);
        const auto pol = DegeneracyPolicy::for_spectrum(p.spec);
        for (auto w : kSingle)
            for (std::size_t j = 0; j < 12; ++j) {
                auto r = single_identity(p.h, p.spec, p.g, w, j, pol);
                ASSERT_LE(r.rel_residual, 1e-8) << to_string(w) << " seed " << seed << " j " << j;
            }
    }
}

TEST(Identities, RepeatedEigenvaluesId2Id4) {
    const std::size_t n = 10;
    auto q = sym_eig(RealSymMatrix(random_symmetric(n, 5))).vectors;
    RealVector d{1, 1, 1, 2, 3, 3, 4, 5, 6, 7};
    RealMatrix h = q * RealMatrix::diagonal(std::span<const double>(d)) * transpose(q);
    auto hs = RealSymMatrix::symmetrized(h);
    auto spec = sym_eig(hs);
    const auto g = random_symmetric(n, 6);
    const auto pol = DegeneracyPolicy::for_spectrum(spec);
    for (auto w : kSingle)
        for (std::size_t j = 0; j < n; ++j) {
            auto r = single_identity(hs, spec, g, w, j, pol);
            EXPECT_LE(r.rel_residual, 1e-9) << to_string(w) << " j=" << j;
        }
    auto r = single_identity(hs, spec, g, Identity::id1, 0, pol);
    EXPECT_EQ(r.skipped_terms, 2u);
    EXPECT_LT(r.max_skipped_numerator, 1e-8);
}

TEST(Identities, TermwiseConsistencyAndByParts) {
    auto p = random_problem(20, 11);
    const auto& hm = p.h.matrix();
    for (std::size_t j : {0u, 7u, 19u}) {
        const auto phi = p.spec.vector(j);
        const auto c = apply_commutator(hm, p.g, phi);
        const auto gphi = p.g * phi;
        double scale = norm2(c) * norm2(gphi);
        for (std::size_t k = 0; k < 20; ++k) {
            const auto pk = p.spec.vector(k);
            const double lhs = inner(c, pk);
            const double rhs = (p.spec.values[k] - p.spec.values[j]) * inner(gphi, pk);
            EXPECT_LE(std::abs(lhs - rhs), 1e-10 * (scale + 1.0));
        }
        const double by_parts = inner(p.g * c, phi);
        const double dbl = inner(apply_double_commutator(hm, p.g, phi), phi);
        EXPECT_NEAR(by_parts, -0.5 * dbl, 1e-10 * (std::abs(dbl) + 1.0));
    }
}

TEST(Identities, Errors) {
    auto p = random_problem(6, 1);
    const auto pol = DegeneracyPolicy::for_spectrum(p.spec);
    auto g = random_real(6, 2);
    try {
        single_identity(p.h, p.spec, g, Identity::id1, 0, pol);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotSymmetric);
    }
    auto partial = sym_eig_lowest(p.h, 3);
    try {
        single_identity(p.h, partial, p.g, Identity::id2, 0, pol);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IncompleteSpectrum);
    }
    try {
        skew_identity(p.h, p.spec, p.g, 0, pol);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotSkew);
    }
}

TEST(Identities, PolicyAndLadder) {
    RealVector v{-3e9, 1.0, 2.0};
    auto pol = DegeneracyPolicy::for_values(v);
    EXPECT_DOUBLE_EQ(pol.cluster_tol, 0.3);
    EXPECT_DOUBLE_EQ(DegeneracyPolicy::for_values(RealVector{1.0, 2.0}).cluster_tol, 1e-8);
    EXPECT_EQ(identity_tolerance(40), 1e-10);
    EXPECT_EQ(identity_tolerance(41), 1e-8);
    EXPECT_EQ(identity_tolerance(1000), 1e-8);
}

TEST(SkewIdentity, ZeroF) {
    auto p = random_problem(8, 9);
    auto r = skew_identity(p.h, p.spec, RealMatrix(8, 8), 2, DegeneracyPolicy::for_spectrum(p.spec));
    EXPECT_EQ(r.lhs, complex(0.0));
    EXPECT_EQ(r.rhs, complex(0.0));
    EXPECT_TRUE(r.pass);
}

TEST(SkewIdentity, DiagonalHRandomF) {
    RealVector d{0.5, 1.5, 2.25, 4.0, 7.0, 9.5};
    RealSymMatrix h(RealMatrix::diagonal(std::span<const double>(d)));
    auto spec = sym_eig(h);
    auto f = random_antisymmetric(6, 4);
    const auto pol = DegeneracyPolicy::for_spectrum(spec);
    for (std::size_t j = 0; j < 6; ++j) {
        auto r = skew_identity(h, spec, f, j, pol);
        EXPECT_LE(r.rel_residual, 1e-10);
        auto o = oracle::brute_force_identity(h.matrix(), f, "id3bis", j, spec.values, spec.vectors, pol.cluster_tol);
        EXPECT_LE(rel(r.lhs, o.lhs), 1e-10);
        EXPECT_LE(rel(r.rhs, o.rhs), 1e-10);
    }
}

TEST(SkewIdentity, LaplacianCenteredDifference) {
    Grid1D grid(0.0, 1.0, 60);
    auto h = laplacian(grid);
    auto spec = sym_eig(h);
    auto f = centered_difference(60, grid.h());
    auto r = skew_identity(h, spec, f, 0, DegeneracyPolicy::for_spectrum(spec));
    EXPECT_LE(r.rel_residual, 1e-9);
    EXPECT_LE(r.max_skipped_numerator, 1e-9 * r.scale);
}

TEST(Virial, NoDegeneracy) {
    auto p = random_problem(10, 21);
    auto v = virial_check(p.h, p.spec, p.g, DegeneracyPolicy::for_spectrum(p.spec));
    EXPECT_EQ(v.clusters, 0u);
    EXPECT_EQ(v.max_element, 0.0);
    EXPECT_TRUE(v.pass);
}

TEST(Virial, IdentityH) {
    RealSymMatrix h(RealMatrix::identity(6));
    auto spec = sym_eig(h);
    auto v = virial_check(h, spec, random_symmetric(6, 3), DegeneracyPolicy::for_spectrum(spec));
    EXPECT_EQ(v.clusters, 1u);
    EXPECT_EQ(v.max_element, 0.0);
}

TEST(Virial, SquareLaplacianDegeneratePair) {
    auto grid = Grid2D::unit_square(15);
    auto h = laplacian(grid);
    auto spec = sym_eig(h);
    auto x1 = grid.coordinate(1);
    auto g = multiplication_operator(grid, x1).matrix();
    auto v = virial_check(h, spec, g, DegeneracyPolicy::for_spectrum(spec));
    EXPECT_GE(v.clusters, 1u);
    EXPECT_LE(v.max_element, 1e-8 * v.commutator_norm);
    EXPECT_TRUE(v.pass);
}

TEST(PairBundle, EqualOperatorsReduceToCommutator) {
    auto p = random_problem(10, 31);
    auto hc = to_complex(p.h.matrix());
    auto gc = to_complex(p.g);
    auto spec2 = complex_eig(hc);
    auto bd = pair_bundle(p.h, hc, gc, gc, spec2);
    auto hg = commutator(hc, gc);
    EXPECT_LE(frobenius_norm(bd.a - hg), 1e-12 * frobenius_norm(hg));
    EXPECT_LE(frobenius_norm(bd.b - hg), 1e-12 * frobenius_norm(hg));
    auto dbl = commutator(hg, gc);
    EXPECT_LE(frobenius_norm(bd.dminus - dbl), 1e-12 * frobenius_norm(dbl));
    EXPECT_TRUE(bd.adjoint_pair);
    EXPECT_TRUE(bd.selfadjoint_pair);
}

TEST(PairBundle, ZeroIntertwiners) {
    auto p = random_problem(6, 2);
    auto h2 = random_complex(6, 3);
    ComplexMatrix zero(6, 6);
    auto bd = pair_bundle(p.h, h2, zero, zero, complex_eig(h2));
    for (auto* m : {&bd.a, &bd.b, &bd.c, &bd.dplus, &bd.dminus}) EXPECT_EQ(max_abs(*m), 0.0);
    for (double a : bd.a_j) EXPECT_EQ(a, 0.0);
}

TEST(PairBundle, RandomInvariants) {
    RealSymMatrix h1(random_symmetric(20, 7));
    auto h2 = random_complex(20, 8);
    auto g1 = random_complex(20, 9);
    auto g2 = adjoint(g1);
    auto bd = pair_bundle(h1, h2, g1, g2, complex_eig(h2));
    EXPECT_LE(bd.c_plus_bstar, 1e-12);
    EXPECT_LE(frobenius_norm(bd.c + adjoint(bd.b)), 1e-12 * frobenius_norm(bd.b));
    EXPECT_LE(bd.max_imag_d, 1e-10);
    EXPECT_TRUE(bd.adjoint_pair);
    EXPECT_FALSE(bd.selfadjoint_pair);
}

TEST(PairIdentity, Ti5ReproducesId1) {
    auto p = random_problem(20, 13);
    auto hc = to_complex(p.h.matrix());
    auto gc = to_complex(p.g);
    auto spec2 = complex_eig(hc);
    auto bd = pair_bundle(p.h, hc, gc, gc, spec2);
    auto pol = pair_policy(p.spec, spec2);
    for (std::size_t j = 0; j < 20; j += 4) {
        auto t = pair_identity(bd, p.spec, spec2, PairIdentity::ti5, j, pol);
        auto s = single_identity(p.h, p.spec, p.g, Identity::id1, j, pol);
        EXPECT_EQ(t.skipped_terms, 1u);
        EXPECT_LE(std::abs(t.lhs - s.lhs), 1e-10 * (std::abs(s.lhs) + 1.0));
        EXPECT_LE(std::abs(t.rhs - s.rhs), 1e-10 * (std::abs(s.rhs) + 1.0));
    }
}

TEST(PairIdentity, SelfAdjointH2Ti4Vanishes) {
    RealSymMatrix h1(random_symmetric(15, 17));
    auto h2r = random_symmetric(15, 18);
    auto h2 = to_complex(h2r);
    auto g1 = random_complex(15, 19);
    auto spec1 = sym_eig(h1);
    auto spec2 = complex_eig(h2);
    auto bd = pair_bundle(h1, h2, g1, adjoint(g1), spec2);
    for (std::size_t j = 0; j < 15; ++j) {
        auto r = pair_identity(bd, spec1, spec2, PairIdentity::ti4, j, pair_policy(spec1, spec2));
        EXPECT_LE(std::abs(r.lhs), 1e-10 * r.scale);
        EXPECT_LE(std::abs(r.rhs), 1e-10 * r.scale);
        EXPECT_TRUE(r.pass);
    }
}

TEST(PairIdentity, RandomSeed7AllAgainstOracle) {
    RealSymMatrix h1(random_symmetric(20, 7));
    auto h2 = random_complex(20, 70);
    auto g1 = random_complex(20, 71);
    auto g2 = adjoint(g1);
    auto spec1 = sym_eig(h1);
    auto spec2 = complex_eig(h2);
    auto bd = pair_bundle(h1, h2, g1, g2, spec2);
    auto pol = pair_policy(spec1, spec2);
    auto phi = to_complex(spec1.vectors);
    for (auto w : {PairIdentity::ti1, PairIdentity::ti2, PairIdentity::ti3, PairIdentity::ti4})
        for (std::size_t j = 0; j < 20; j += 3) {
            auto r = pair_identity(bd, spec1, spec2, w, j, pol);
            EXPECT_LE(r.rel_residual, 1e-8) << to_string(w) << " j=" << j;
            auto o = oracle::brute_force_pair_identity(bd.h1, h2, g1, g2, std::string(to_string(w)), spec2.values[j],
                                                       spec2.vector(j), spec1.values, phi, pol.cluster_tol);
            EXPECT_LE(rel(r.lhs, o.lhs), 1e-9);
            EXPECT_LE(rel(r.rhs, o.rhs), 1e-9);
        }
}

TEST(PairIdentity, GeneralIntertwinersTi1Ti2) {
    RealSymMatrix h1(random_symmetric(16, 40));
    auto h2 = random_complex(16, 41);
    auto g1 = random_complex(16, 42);
    auto g2 = random_complex(16, 43);
    auto spec1 = sym_eig(h1);
    auto spec2 = complex_eig(h2);
    auto bd = pair_bundle(h1, h2, g1, g2, spec2);
    EXPECT_FALSE(bd.adjoint_pair);
    auto pol = pair_policy(spec1, spec2);
    for (std::size_t j = 0; j < 16; ++j) {
        EXPECT_LE(pair_identity(bd, spec1, spec2, PairIdentity::ti1, j, pol).rel_residual, 1e-9);
        EXPECT_LE(pair_identity(bd, spec1, spec2, PairIdentity::ti2, j, pol).rel_residual, 1e-9);
    }
    try {
        pair_identity(bd, spec1, spec2, PairIdentity::ti3, 0, pol);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConstraintViolated);
    }
    try {
        pair_identity(bd, spec1, spec2, PairIdentity::ti5, 0, pol);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConstraintViolated);
    }
}

TEST(PairIdentity, NearSingularDenominator) {
    // An inaccurate eigenpair sitting on lambda_0 leaves a nonzero numerator.
    RealVector d1{1, 2, 3, 4};
    RealSymMatrix h1(RealMatrix::diagonal(std::span<const double>(d1)));
    auto h2 = random_complex(4, 4);
    auto g = random_complex(4, 5);
    auto spec1 = sym_eig(h1);
    auto spec2 = complex_eig(h2);
    spec2.values[0] = 1.0;
    ComplexVector v{0.5, 0.5, 0.5, 0.5};
    spec2.vectors.set_column(0, std::span<const complex>(v));
    auto bd = pair_bundle(h1, h2, g, adjoint(g), spec2);
    try {
        pair_identity(bd, spec1, spec2, PairIdentity::ti3, 0, pair_policy(spec1, spec2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NearSingularDenominator);
    }
}

TEST(Identities, Parsing) {
    EXPECT_EQ(parse_identity("id3bis"), Identity::id3bis);
    EXPECT_EQ(parse_pair_identity("ti4"), PairIdentity::ti4);
    EXPECT_FALSE(parse_identity("id9"));
}

TEST(PairIdentity, Ti4SignFollowsTi2) {
    // With A = B the imaginary part of ti2 is ti4; the opposite sign on the
    // right side fails whenever Im mu != 0.
    RealSymMatrix h1(random_symmetric(12, 50));
    auto h2 = random_complex(12, 51);
    auto g1 = random_complex(12, 52);
    auto spec1 = sym_eig(h1);
    auto spec2 = complex_eig(h2);
    auto bd = pair_bundle(h1, h2, g1, adjoint(g1), spec2);
    auto pol = pair_policy(spec1, spec2);
    for (std::size_t j = 0; j < 12; ++j) {
        auto t2 = pair_identity(bd, spec1, spec2, PairIdentity::ti2, j, pol);
        auto t4 = pair_identity(bd, spec1, spec2, PairIdentity::ti4, j, pol);
        EXPECT_LE(std::abs(t2.lhs + t4.lhs), 1e-10 * t4.scale);
        EXPECT_LE(std::abs(t2.rhs + t4.rhs), 1e-10 * t4.scale);
        EXPECT_TRUE(t4.pass);
        if (std::abs(spec2.values[j].imag()) > 1e-3) {
            EXPECT_GT(rel(t4.lhs, -t4.rhs), 0.5);
        }
    }
}
