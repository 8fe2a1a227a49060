#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "spectra_gap/commutator.hpp"
#include "spectra_gap/operators.hpp"
#include "spectra_gap/oracle.hpp"
#include "spectra_gap/sym_eig.hpp"

using namespace spectra_gap;
constexpr double pi = std::numbers::pi;

TEST(Grid, Validation) {
    EXPECT_THROW(Grid1D(1.0, 0.0, 10), Error);
    EXPECT_THROW(Grid1D(0.0, 1.0, 2), Error);
    EXPECT_THROW(Grid1D(0.0, 1.0, 10, BoundaryCondition::neumann, NodeLayout::vertex), Error);
    Grid1D d(0.0, 1.0, 9);
    EXPECT_DOUBLE_EQ(d.h(), 0.1);
    EXPECT_DOUBLE_EQ(d.x(0), 0.1);
    Grid1D n(0.0, 1.0, 10, BoundaryCondition::neumann);
    EXPECT_DOUBLE_EQ(n.h(), 0.1);
    EXPECT_DOUBLE_EQ(n.x(0), 0.05);

    std::vector<bool> mask(25, false);
    for (int k = 0; k < 4; ++k) mask[k] = true;
    EXPECT_THROW(Grid2D(0, 1, 0, 1, 5, 5, BoundaryCondition::dirichlet, mask), Error); // fewer than 9
    std::vector<bool> split(25, true);
    for (int j = 0; j < 5; ++j) split[2 + 5 * j] = false;
    EXPECT_THROW(Grid2D(0, 1, 0, 1, 5, 5, BoundaryCondition::dirichlet, split), Error); // disconnected
    EXPECT_THROW(Grid2D(0, 1, 0, 1, 5, 5, BoundaryCondition::neumann, std::vector<bool>(25, true)), Error);
}

TEST(Laplacian, IntervalDirichlet) {
    auto s = sym_eig(laplacian(Grid1D(0.0, 1.0, 200)));
    for (std::size_t k = 1; k <= 5; ++k) EXPECT_NEAR(s.values[k - 1], k * k * pi * pi, 1e-3 * k * k * pi * pi);
    EXPECT_NEAR(s.values[0], pi * pi, 1e-3 * pi * pi);
}

TEST(Laplacian, IntervalNeumann) {
    auto s = sym_eig(laplacian(Grid1D(0.0, 1.0, 200, BoundaryCondition::neumann)));
    EXPECT_NEAR(s.values[0], 0.0, 1e-8);
    EXPECT_NEAR(s.values[1], pi * pi, 1e-3 * pi * pi);
}

TEST(Laplacian, UnitSquare63) {
    auto h = laplacian(Grid2D::unit_square(63));
    auto s = sym_eig_lowest(h, 4);
    auto exact = oracle::analytic_spectrum({oracle::AnalyticKind::rectangle_dirichlet}, 4);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(s.values[k], exact[k], 5e-3 * exact[k]);
}

TEST(Laplacian, ConvergenceOrder) {
    RealVector v;
    for (std::size_t n : {49u, 99u, 199u}) v.push_back(sym_eig(laplacian(Grid1D(0.0, 1.0, n))).values[1]);
    auto r = oracle::richardson(v[0], v[1], v[2]);
    EXPECT_GE(r.order, 1.8);
    EXPECT_NEAR(r.extrapolated, 4 * pi * pi, 1e-4);
}

TEST(Laplacian, MaskedLShapeIsSymmetricAndBelowSquareGap) {
    const std::size_t n = 15;
    std::vector<bool> mask(n * n, true);
    for (std::size_t j = n / 2; j < n; ++j)
        for (std::size_t i = n / 2; i < n; ++i) mask[i + n * j] = false;
    Grid2D g(0, 1, 0, 1, n, n, BoundaryCondition::dirichlet, mask);
    auto h = laplacian(g);
    EXPECT_LT(g.size(), n * n);
    auto s = sym_eig(h);
    // Domain monotonicity: removing nodes raises the first eigenvalue above 2 pi^2.
    EXPECT_GT(s.values[0], 2 * pi * pi);
}

TEST(Schrodinger, ZeroAndConstantPotential) {
    Grid1D g(0.0, 1.0, 50);
    EXPECT_EQ(schrodinger(g, Potential::zero()), laplacian(g));
    auto base = sym_eig(laplacian(g));
    auto shifted = sym_eig(schrodinger(g, Potential::constant(3.5)));
    for (std::size_t k = 0; k < 50; ++k) EXPECT_NEAR(shifted.values[k] - base.values[k], 3.5, 1e-9);
    EXPECT_THROW(schrodinger(g, std::span<const double>(RealVector(3))), Error);
}

TEST(Schrodinger, HarmonicSelfConvergence) {
    auto lam = [](std::size_t n) { return sym_eig_lowest(schrodinger(Grid1D(0.0, 1.0, n), Potential::harmonic()), 1).values[0]; };
    // h, h/2, h/4 with N+1 doubling.
    auto r = oracle::richardson(lam(399), lam(799), lam(1599));
    EXPECT_NEAR(lam(399), r.extrapolated, 1e-3 * r.extrapolated);
}

TEST(Schrodinger, PotentialDerivatives) {
    auto v = Potential::polynomial({1.0, 2.0, 3.0});
    EXPECT_DOUBLE_EQ(v.value(2.0), 1 + 4 + 12);
    EXPECT_DOUBLE_EQ(v.first(2.0), 2 + 12);
    EXPECT_DOUBLE_EQ(v.second(2.0), 6);
    RealVector xs, ys;
    for (int i = 0; i <= 200; ++i) {
        xs.push_back(i / 200.0);
        ys.push_back(std::pow(i / 200.0, 2));
    }
    auto s = Potential::sampled(xs, ys);
    EXPECT_NEAR(s.value(0.3), 0.09, 1e-4);
    EXPECT_NEAR(s.first(0.5), 1.0, 1e-3);
    EXPECT_NEAR(s.second(0.5), 2.0, 1e-2);
    EXPECT_THROW(Potential::sampled({0.0, 1.0}, {0.0, 1.0}), Error);
}

TEST(VariableCoeff, IdentityIsBitExactLaplacian) {
    Grid1D g(0.0, 1.0, 40);
    EXPECT_EQ(variable_coeff_elliptic(g, CoefficientField::identity(1)), laplacian(g));
    Grid1D gd(0.0, 1.0, 40, BoundaryCondition::dirichlet, NodeLayout::cell);
    EXPECT_EQ(variable_coeff_elliptic(gd, CoefficientField::identity(1)), laplacian(gd));
    Grid1D gn(0.0, 1.0, 40, BoundaryCondition::neumann);
    EXPECT_EQ(variable_coeff_elliptic(gn, CoefficientField::identity(1)), laplacian(gn));
    auto g2 = Grid2D::unit_square(9);
    EXPECT_EQ(variable_coeff_elliptic(g2, CoefficientField::identity(2)), laplacian(g2));
}

TEST(VariableCoeff, ScalingAndErrors) {
    Grid1D g(0.0, 1.0, 30);
    auto base = sym_eig(laplacian(g));
    auto scaled = sym_eig(variable_coeff_elliptic(g, CoefficientField::scaled_identity(1, 2.5)));
    for (std::size_t k = 0; k < 30; ++k) EXPECT_NEAR(scaled.values[k], 2.5 * base.values[k], 1e-12 * 2.5 * base.values[k]);
    EXPECT_THROW(variable_coeff_elliptic(g, CoefficientField::polynomial(1, {-1.0, 3.0})), Error);
    EXPECT_THROW(variable_coeff_elliptic(g, CoefficientField::polynomial(1, {1.0}, 2.0)), Error);
    try {
        variable_coeff_elliptic(Grid2D::unit_square(5, BoundaryCondition::neumann), CoefficientField::identity(2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsupportedBC);
    }
}

TEST(VariableCoeff, LinearCoefficientSelfConvergence) {
    auto field = CoefficientField::polynomial(1, {1.0, 0.5});
    auto lam = [&](std::size_t n) { return sym_eig_lowest(variable_coeff_elliptic(Grid1D(0.0, 1.0, n), field), 1).values[0]; };
    auto r = oracle::richardson(lam(399), lam(799), lam(1599));
    EXPECT_NEAR(lam(399), r.extrapolated, 1e-3 * r.extrapolated);
}

TEST(VariableCoeff, AnisotropicMixedTermSymmetric) {
    CoefficientField a(2, [](double x, double y) { return CoefficientTensor{2.0 + x, 0.3 * y, 1.0 + y}; });
    auto h = variable_coeff_elliptic(Grid2D::unit_square(8), a);
    EXPECT_TRUE(is_symmetric(h.matrix(), 0.0));
    EXPECT_GT(sym_eig(h).values[0], 0.0);
}

TEST(Elasticity, AlphaZeroDoublesLaplacian) {
    auto g = Grid2D::unit_square(7);
    auto lap = sym_eig(laplacian(g));
    auto el = sym_eig(elasticity_2d(g, 0.0));
    for (std::size_t k = 0; k < lap.count(); ++k) {
        EXPECT_NEAR(el.values[2 * k], lap.values[k], 1e-10 * lap.values[k]);
        EXPECT_NEAR(el.values[2 * k + 1], lap.values[k], 1e-10 * lap.values[k]);
    }
    EXPECT_THROW(elasticity_2d(Grid2D::unit_square(5, BoundaryCondition::neumann), 1.0), Error);
}

TEST(Elasticity, PositiveSemidefiniteGradDiv) {
    auto g = Grid2D::unit_square(6);
    RealMatrix m = elasticity_2d(g, 1.0).matrix() - elasticity_2d(g, 0.0).matrix();
    auto s = sym_eig(RealSymMatrix::symmetrized(m));
    EXPECT_GT(s.values[0], -1e-9 * s.values.back());
}

TEST(Elasticity, GradientFieldDivergenceForm) {
    RealVector ratio;
    for (std::size_t n : {15u, 31u}) {
        auto g = Grid2D::unit_square(n);
        // u = grad(sin(pi x) sin(pi y)) vanishes tangentially only, so use a bubble squared.
        VectorField2D u{RealMatrix(n + 2, n + 2), RealMatrix(n + 2, n + 2)};
        for (std::size_t I = 0; I < n + 2; ++I)
            for (std::size_t J = 0; J < n + 2; ++J) {
                const double x = g.x1_ext(static_cast<std::ptrdiff_t>(I) - 1), y = g.x2_ext(static_cast<std::ptrdiff_t>(J) - 1);
                const double sx = std::sin(pi * x), sy = std::sin(pi * y);
                // phi = sx^2 sy^2, u = grad phi
                u.u1(I, J) = 2 * pi * sx * std::cos(pi * x) * sy * sy;
                u.u2(I, J) = 2 * pi * sy * std::cos(pi * y) * sx * sx;
            }
        auto f = elasticity_forms(g, 1.0, u);
        ratio.push_back(f.m_form / f.div_norm2);
    }
    EXPECT_NEAR(ratio[1], 1.0, 0.02);
    EXPECT_LT(std::abs(ratio[1] - 1.0), std::abs(ratio[0] - 1.0) + 1e-12);
}

TEST(Elasticity, FormsZeroAndBoundaryViolation) {
    auto g = Grid2D::unit_square(5);
    VectorField2D z{RealMatrix(7, 7), RealMatrix(7, 7)};
    auto f = elasticity_forms(g, 1.0, z);
    EXPECT_EQ(f.l_form, 0.0);
    EXPECT_EQ(f.m_form, 0.0);
    EXPECT_EQ(f.s_norm2 + f.r_norm2 + f.s_dot_r, 0.0);
    z.u1(0, 3) = 1.0;
    z.u1(3, 3) = 1.0;
    EXPECT_THROW(elasticity_forms(g, 1.0, z), Error);
}

TEST(Elasticity, DivergenceFreeFieldHasSmallMForm) {
    const std::size_t n = 31;
    auto g = Grid2D::unit_square(n);
    VectorField2D u{RealMatrix(n + 2, n + 2), RealMatrix(n + 2, n + 2)};
    for (std::size_t I = 0; I < n + 2; ++I)
        for (std::size_t J = 0; J < n + 2; ++J) {
            const double x = g.x1_ext(static_cast<std::ptrdiff_t>(I) - 1), y = g.x2_ext(static_cast<std::ptrdiff_t>(J) - 1);
            const double sx = std::sin(pi * x), sy = std::sin(pi * y);
            // stream function psi = sx^2 sy^2: u = (d psi/dy, -d psi/dx)
            u.u1(I, J) = 2 * pi * sx * sx * sy * std::cos(pi * y);
            u.u2(I, J) = -2 * pi * sy * sy * sx * std::cos(pi * x);
        }
    auto f = elasticity_forms(g, 1.0, u);
    EXPECT_LT(std::abs(f.m_form), 1e-2 * f.l_form);
}

TEST(Elasticity, LemmaIdentitiesOnFirstEigenvector) {
    std::vector<double> worst;
    for (std::size_t n : {15u, 31u}) {
        auto g = Grid2D::unit_square(n);
        auto s = sym_eig_lowest(elasticity_2d(g, 1.0), 1);
        auto f = elasticity_forms(g, 1.0, std::span<const double>(s.vector(0)));
        worst.push_back(elasticity_residuals(f).max());
    }
    EXPECT_LT(worst[1], worst[0]);
    EXPECT_LT(worst[1], 0.05);
}

TEST(Multiplication, DiagonalAndCommutators) {
    Grid1D g(0.0, 1.0, 20);
    EXPECT_EQ(multiplication_operator(g, std::span<const double>(RealVector(20, 1.0))).matrix(), RealMatrix::identity(20));
    auto x = g.nodes();
    auto hm = laplacian(g).matrix();
    auto gm = multiplication_operator(g, std::span<const double>(x)).matrix();
    auto hg = commutator(hm, gm);
    // [H,G]_ij = H_ij (x_j - x_i)
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 20; ++j) EXPECT_NEAR(hg(i, j), hm(i, j) * (x[j] - x[i]), 1e-9);
    auto hgg = commutator(hg, gm);
    // [[H,G],G]_ij = H_ij (x_j - x_i)^2: -1 on first off-diagonals (unit-coefficient stencil, spacing h).
    for (std::size_t i = 0; i + 1 < 20; ++i) EXPECT_NEAR(hgg(i, i + 1) , -1.0, 1e-9);
    EXPECT_NEAR(hgg(3, 3), 0.0, 1e-12);
    // [H, G] 1 = -2 D 1 in the interior: zero for constants except boundary rows.
    auto c = hg * RealVector(20, 1.0);
    for (std::size_t i = 1; i + 1 < 20; ++i) EXPECT_NEAR(c[i], 0.0, 1e-9);
    EXPECT_THROW(multiplication_operator(g, std::span<const double>(RealVector(3))), Error);
}

TEST(Multiplication, TwoDimensionalDoubleCommutatorPattern) {
    auto g = Grid2D::unit_square(6);
    auto x1 = g.coordinate(1);
    auto hm = laplacian(g).matrix();
    auto gm = multiplication_operator(g, std::span<const double>(x1)).matrix();
    auto hgg = commutator(commutator(hm, gm), gm);
    for (std::size_t p = 0; p + 1 < g.size(); ++p)
        if ((p + 1) % 6 != 0) {
            EXPECT_NEAR(hgg(p, p + 1), -1.0, 1e-9); // -(1/h^2) h^2 along direction 1
        }
    EXPECT_NEAR(hgg(0, 6), 0.0, 1e-12);
}

TEST(Derivative, InteriorAccuracyAndStructure) {
    for (auto rows : {DerivativeRows::one_sided, DerivativeRows::ghost}) {
        Grid1D g(0.0, 1.0, 200);
        auto d = derivative_operator(g, rows);
        auto c = d * ComplexVector(200, 1.0);
        for (std::size_t i = 1; i + 1 < 200; ++i) EXPECT_EQ(c[i], complex{});
        ComplexVector f(200);
        for (std::size_t i = 0; i < 200; ++i) f[i] = std::sin(pi * g.x(i));
        auto df = d * f;
        for (std::size_t i = 1; i + 1 < 200; ++i) EXPECT_NEAR(std::abs(df[i] - complex(0, pi * std::cos(pi * g.x(i)))), 0.0, 1e-3);
        auto diff = d - adjoint(d);
        for (std::size_t i = 1; i + 1 < 200; ++i)
            for (std::size_t j = 1; j + 1 < 200; ++j) EXPECT_LT(std::abs(diff(i, j)), 1e-12);
    }
    Grid1D cell(0.0, 1.0, 10, BoundaryCondition::dirichlet, NodeLayout::cell);
    auto d = derivative_operator(cell, DerivativeRows::ghost);
    // Odd ghost: (u_0 + u_1)/(2h) in the first row.
    EXPECT_NEAR(d(0, 0).imag(), 1.0 / (2.0 * cell.h()), 1e-12);
    EXPECT_NEAR(d(9, 9).imag(), -1.0 / (2.0 * cell.h()), 1e-12);
    Grid1D mirror(0.0, 1.0, 10, BoundaryCondition::neumann);
    EXPECT_NEAR(derivative_operator(mirror, DerivativeRows::ghost)(0, 0).imag(), -1.0 / (2.0 * mirror.h()), 1e-12);
}

TEST(NeumannBump, ProfilesAndBalls) {
    EXPECT_NEAR(bessel_j1_first_zero(), 3.8317059702075125, 1e-12);
    EXPECT_NEAR(bessel_j0(1.3), std::cyl_bessel_j(0.0, 1.3), 1e-14);
    EXPECT_NEAR(bessel_j1(2.7), std::cyl_bessel_j(1.0, 2.7), 1e-14);
    EXPECT_DOUBLE_EQ(neumann_radial_profile(2, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(neumann_radial_profile(1, 0.0), -1.0);
    EXPECT_LT(neumann_radial_profile(2, 0.0), 0.0);

    BallArrangement balls{1, {{0.5, 0.0}}, {0.25}};
    Grid1D g(0.0, 1.0, 100, BoundaryCondition::neumann);
    auto v = neumann_bump(g, balls);
    EXPECT_DOUBLE_EQ(v[0], 1.0);
    EXPECT_NEAR(balls.bump(0.5), -1.0, 1e-15);
    EXPECT_NEAR(balls.bump(0.75 - 1e-12), 1.0, 1e-9); // continuous at the rim

    BallArrangement overlap{1, {{0.3, 0.0}, {0.5, 0.0}}, {0.2, 0.1}};
    try {
        neumann_bump(g, overlap);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BallsOverlap);
    }
    BallArrangement outside{2, {{0.1, 0.5}}, {0.2}};
    try {
        neumann_bump(Grid2D::unit_square(10, BoundaryCondition::neumann), outside);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BallOutsideDomain);
    }
}

TEST(Gradient, CenteredOnUnknowns) {
    auto g = Grid2D::unit_square(31);
    RealVector f;
    for (auto [i, j] : g.unknown_nodes()) f.push_back(std::sin(pi * g.x1(i)) * std::sin(pi * g.x2(j)));
    auto d1 = centered_gradient(g, std::span<const double>(f), 1);
    const auto nodes = g.unknown_nodes();
    for (std::size_t p = 0; p < nodes.size(); ++p) {
        const double x = g.x1(nodes[p].first), y = g.x2(nodes[p].second);
        EXPECT_NEAR(d1[p], pi * std::cos(pi * x) * std::sin(pi * y), 1e-2);
    }
}
