#include "unfold/systems.hpp"
#include "unfold/transforms.hpp"

#include <functional>
#include <gtest/gtest.h>

using namespace unfold;

namespace {

struct Point {
    cx s = 0.1 * std::exp(cx(0, 0.3));
    double alpha = std::arg(s) + pi / 2;
    cx xi = 0.7 * s + std::exp(cx(0, alpha)) * 0.3;
};

}  // namespace

TEST(Monomial, BetaFormAgreesWithPolynomialForm) {
    Point c;
    for (auto [a, b] : std::vector<std::pair<int, int>>{{1, 0}, {2, 0}, {1, 1}, {2, 1}, {3, 2}}) {
        cx mono = borel_monomial(a, b, c.s, Side::plus).eval(c.xi, c.alpha);
        cx beta = borel_beta(double(a), double(b), c.xi, c.s);
        EXPECT_LT(std::abs(mono - beta), 1e-12 * std::max(1.0, std::abs(mono))) << a << "," << b;
    }
}

TEST(Monomial, BetaFormRejectsPoints) {
    Point c;
    EXPECT_THROW(borel_beta(1.0, 1.0, c.xi, 0.0), Error);
    EXPECT_THROW(borel_beta(1.0, 1.0, 2.5 * c.s, c.s), Error);
}

// (x²-ε)d/dx becomes multiplication by ξ: checked on f = (x-s)²(x+s).
TEST(Monomial, DerivationBecomesMultiplication) {
    Point c;
    auto B = [&](int a, int b) { return borel_monomial(a, b, c.s, Side::plus).eval(c.xi, c.alpha); };
    cx lhs = 2.0 * B(2, 2) + B(3, 1);
    EXPECT_LT(std::abs(lhs - c.xi * B(2, 1)), 1e-14);
}

TEST(Monomial, ConfluentLimitIsPowerOverFactorial) {
    double alpha = 0.4 + pi / 2;
    cx xi = std::exp(cx(0, alpha)) * 0.8;
    cx ref = xi * xi / 2.0;
    double prev = 1e300;
    for (double nu : {1e-1, 1e-2, 1e-3}) {
        cx s = nu * std::exp(cx(0, 0.4));
        double err = std::abs(borel_monomial(2, 1, s, Side::plus).eval(xi, alpha) - ref);
        EXPECT_LT(err, prev);
        prev = err;
    }
    EXPECT_LT(prev, 1e-2);
    EXPECT_LT(std::abs(borel_monomial(2, 1, 0.0, Side::plus).eval(xi, alpha) - ref), 1e-15);
    EXPECT_EQ(borel_monomial(2, 1, 0.0, Side::plus).eval(-xi, alpha), cx(0.0));
}

TEST(Monomial, QuadratureMatchesClosedForm) {
    Point c;
    for (Side side : {Side::plus, Side::minus}) {
        auto f = of_x([&](cx x) { return (x - c.s) * (x - c.s) * (x + c.s); });
        double C = borel_abscissa(side, c.alpha, c.s, c.xi);
        cx q = borel_unfolded_quad(f, side, c.alpha, c.s, c.xi, C);
        cx ref = borel_monomial(2, 1, c.s, side).eval(c.xi, c.alpha);
        EXPECT_LT(std::abs(q - ref), 1e-10) << side_name(side);
    }
}

TEST(Monomial, ConstantsAreNotMonomials) {
    EXPECT_THROW(borel_monomial(0, 0, 0.1, Side::plus), Error);
    EXPECT_THROW(borel_monomial(-1, 2, 0.1, Side::plus), Error);
}

TEST(Chi, MinusIsPlusTimesExponential) {
    Point c;
    for (cx xi : {c.xi, cx(0.05, 0.3), cx(-0.4, -0.2)}) {
        cx p = chi_eval(xi, Side::plus, c.s, c.alpha), m = chi_eval(xi, Side::minus, c.s, c.alpha);
        EXPECT_LT(std::abs(m - (p - 1.0)), 1e-13);
        EXPECT_LT(std::abs(m - std::exp(xi * pi * I / c.s) * p), 1e-12 * std::max(1.0, std::abs(m)));
    }
    EXPECT_THROW(chi_plus(2.0 * c.s, c.s), Error);
    EXPECT_LT(std::abs(xi_chi_plus(1e-12 * c.s, c.s) + c.s / (pi * I)), 1e-12);
}

TEST(Laplace, RayOfPowersGivesPowers) {
    cx x(0.2, 0.05);
    for (int n = 1; n <= 4; ++n) {
        auto r = laplace_ray([&](cx xi) { return std::pow(xi, n - 1) / factorial(n - 1); }, 0.1, x, 40.0);
        EXPECT_LT(std::abs(r.value - std::pow(x, n)), 1e-13) << n;
        EXPECT_LT(r.tail_estimate, 1e-30);
    }
    EXPECT_THROW(laplace_ray([](cx) { return cx(1.0); }, 0.0, cx(-0.2, 0), 10.0), Error);
}

TEST(Laplace, SampledGaussianLine) {
    const double alpha = 0.6, w = 0.5;
    auto L = make_line_function(
        [&](cx z) {
            cx v = std::exp(cx(0, -alpha)) * z;
            return Vec::Constant(1, std::exp(-v * v / w));
        },
        0.0, alpha, 8, 513);
    cx t(0.7, -1.1);
    cx te = t * std::exp(cx(0, alpha));
    cx ref = std::exp(cx(0, alpha)) * std::sqrt(pi * w) * std::exp(te * te * w / 4.0);
    EXPECT_LT(std::abs(laplace_line(L, t)(0) - ref), 1e-13);
}

TEST(Laplace, AtomsContributeExponentials) {
    cx s(0.1, 0.0);
    double alpha = pi / 2;
    auto L = make_line_function([](cx) { return Vec::Zero(1); }, 0.0, alpha, 4, 65, false);
    cx x(0.0, 0.2);
    std::vector<DiracAtom> atoms{{0.0, Vec::Constant(1, 2.0)}, {2.0 * s, Vec::Constant(1, 0.5)}};
    auto lift = lift_to_strip(x, Side::plus, alpha, s);
    Vec v = laplace_unfolded(L, atoms, {x, 0}, s, 0.5);
    EXPECT_LT(std::abs(v(0) - (2.0 + 0.5 * std::exp(-2.0 * s * lift.t))), 1e-14);
}

TEST(RhsBorel, UnfoldingLinearHasOneMonomial) {
    cx s(0.1, 0.02);
    auto r = system_rhs_borel(systems::unfolding_linear(), s, Side::plus);
    ASSERT_EQ(r.h.size(), 1u);
    const auto& cp = r.h.begin()->second;
    ASSERT_EQ(cp.terms.size(), 1u);
    EXPECT_EQ(cp.terms[0].mono.a, 1);
    EXPECT_EQ(cp.terms[0].mono.b, 1);
    EXPECT_EQ(cp.terms[0].coeff, cx(1.0));
    EXPECT_TRUE(r.m_terms.empty());
    EXPECT_TRUE(r.a_terms.empty());
}

// g = x: (x²-ε)x = (x-s)²(x+s) + s(x-s)(x+s).
TEST(RhsBorel, LinearPolynomialExpands) {
    SystemSpec sp = systems::unfolding_linear();
    sp.terms[0].poly = Poly2{0, 1, {0.0, 1.0}};
    cx s(0.1, 0.02);
    cx xi(0.03, 0.4);
    double alpha = std::arg(s) + pi / 2;
    auto r = system_rhs_borel(sp, s, Side::plus);
    cx got = r.h.begin()->second.eval(xi, alpha)(0);
    cx ref = borel_monomial(2, 1, s, Side::plus).eval(xi, alpha) + s * borel_monomial(1, 1, s, Side::plus).eval(xi, alpha);
    EXPECT_LT(std::abs(got - ref), 1e-14);
}

TEST(FourierAtoms, MobiusVariableIsOneAtom) {
    cx s(0.3, 0.1);
    const int N = 6;
    std::vector<cx> t(N + 1, cx{});
    for (int k = 1; k <= N; ++k) t[k] = (k % 2 ? 1.0 : -1.0) / std::pow(2.0 * s, k);
    auto atoms = fourier_borel_atoms(PowerSeries1(t), s, FourierSide::R, N);
    int big = 0;
    for (const auto& a : atoms)
        if (std::abs(a.w(0)) > 1e-10) {
            ++big;
            EXPECT_LT(std::abs(a.a - 2.0 * s), 1e-15);
        }
    EXPECT_EQ(big, 1);
}

namespace {

// Counterclockwise trapezoid contour integral on a circle.
cx circle_integral(const std::function<cx(cx)>& f, cx centre, double r, int m = 256) {
    cx sum = 0.0;
    for (int j = 0; j < m; ++j) {
        cx e = std::exp(cx(0, 2 * pi * j / m));
        sum += f(centre + r * e) * I * r * e;
    }
    return sum * (2 * pi / m);
}

}  // namespace

// Expanding 1/(1-e^{ξπi/s}) at 0 gives the residue -s/(πi), so the counterclockwise integral is -2s.
TEST(Chi, ResidueAtOrigin) {
    Point c;
    cx val = circle_integral([&](cx z) { return chi_plus(z, c.s); }, 0.0, 0.4 * std::abs(c.s));
    EXPECT_LT(std::abs(val + 2.0 * c.s), 1e-9);
}

// f = (x-s)²: a_n from the Taylor data at s, compared with counterclockwise residues of B±[f] at 2ns.
TEST(FourierAtoms, CoefficientsMatchResiduesOfBorelImage) {
    Point c;
    const int N = 6;
    std::vector<cx> t(N + 1, cx{});
    t[2] = 1.0;
    auto a = mobius_fourier_coeffs(PowerSeries1(t), c.s, FourierSide::R, N);
    for (Side side : {Side::plus, Side::minus}) {
        auto B = borel_monomial(2, 0, c.s, side);
        for (int n = 1; n <= N; ++n) {
            cx contour = circle_integral([&](cx z) { return B.eval(z, c.alpha); }, 2.0 * double(n) * c.s,
                                         0.4 * std::abs(c.s));
            EXPECT_LT(std::abs(a[n] + contour), 1e-6) << n;
            EXPECT_LT(std::abs(a[n] - 4.0 * c.s * c.s * double(n - 1)), 1e-12) << n;
        }
    }
}
