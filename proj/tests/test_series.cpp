#include "unfold/quadrature.hpp"
#include "unfold/series.hpp"
#include "unfold/systems.hpp"

#include <gtest/gtest.h>

using namespace unfold;

TEST(FormalBorel, ShiftsAndDividesByFactorial) {
    PowerSeries1 y({0.0, 1.0, 1.0, 2.0, 6.0});
    auto phi = formal_borel(y);
    ASSERT_EQ(phi.order(), 3);
    for (int j = 0; j <= 3; ++j) EXPECT_NEAR(std::abs(phi[j] - 1.0), 0.0, 1e-15);
}

TEST(FormalBorel, RejectsNonzeroConstant) {
    try {
        formal_borel(PowerSeries1({1.0, 1.0}));
        FAIL() << "expected a domain error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::domain);
    }
}

TEST(Gevrey, EulerSeriesIsFactorialWithUnitRate) {
    std::vector<cx> c{0.0};
    for (int k = 1; k <= 40; ++k) c.push_back(factorial(k - 1));
    auto g = gevrey_bound(PowerSeries1(c));
    EXPECT_TRUE(g.factorial_flag);
    EXPECT_NEAR(g.c_est, 1.0, 1e-12);
}

TEST(Gevrey, SquaredFactorialIsFlagged) {
    std::vector<cx> c{0.0};
    for (int k = 1; k <= 40; ++k) c.push_back(factorial(k) * factorial(k));
    EXPECT_FALSE(gevrey_bound(PowerSeries1(c)).factorial_flag);
}

// f = (x-s)/(x+s) has Taylor coefficients (-1)^{k-1}/(2s)^k at x = s and is w itself.
TEST(MobiusFourier, IdentityFunctionGivesSingleCoefficient) {
    cx s(0.3, 0.1);
    const int N = 12;
    std::vector<cx> t(N + 1, cx{});
    for (int k = 1; k <= N; ++k) t[k] = (k % 2 ? 1.0 : -1.0) / std::pow(2.0 * s, k);
    auto a = mobius_fourier_coeffs(PowerSeries1(t), s, FourierSide::R, N);
    EXPECT_LT(std::abs(a[1] - 1.0), 1e-12);
    for (int n = 0; n <= N; ++n)
        if (n != 1) EXPECT_LT(std::abs(a[n]), 1e-11) << n;
}

// L side checked by resumming the coefficients at a point near x = -s.
TEST(MobiusFourier, LeftSideReproducesFunction) {
    cx s(0.2, -0.05);
    const int N = 40;
    // f(x) = 1/(x - 3s), Taylor at x = -s: -Σ (x+s)^k / (4s)^{k+1}
    std::vector<cx> t(N + 1);
    for (int k = 0; k <= N; ++k) t[k] = -1.0 / std::pow(4.0 * s, k + 1);
    auto a = mobius_fourier_coeffs(PowerSeries1(t), s, FourierSide::L, N);
    cx x = -s + 0.3 * s * cx(0.4, 0.3);
    cx w = (x + s) / (x - s), sum = 0.0, wk = 1.0;
    for (int n = 0; n <= N; ++n, wk *= w) sum += a[n] * wk;
    EXPECT_LT(std::abs(sum - 1.0 / (x - 3.0 * s)), 1e-10);
}

TEST(MobiusFourier, RequiresNonzeroEps) {
    EXPECT_THROW(mobius_fourier_coeffs(PowerSeries1({1.0, 1.0}), 0.0, FourierSide::R, 1), Error);
}

TEST(TriSeries, ProductTruncatesOnTriangle) {
    TriSeries a(3), b(3);
    a.set(0, 0, 1.0);
    a.set(1, 0, 1.0);
    b.set(0, 0, 1.0);
    b.set(1, 0, -1.0);
    b.set(0, 1, 2.0);
    TriSeries c = a * b;
    EXPECT_EQ(c.get(0, 0), cx(1.0));
    EXPECT_EQ(c.get(1, 0), cx(0.0));
    EXPECT_EQ(c.get(2, 0), cx(-1.0));
    EXPECT_EQ(c.get(0, 1), cx(2.0));
    EXPECT_EQ(c.get(1, 1), cx(2.0));
    EXPECT_EQ(c.get(4, 0), cx(0.0));
}

TEST(SystemSpec, SingularLeadingMatrixIsConfigError) {
    SystemSpec sp = systems::unfolding_linear();
    sp.M[0](0, 0) = 0.0;
    try {
        sp.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
    }
}

TEST(SystemSpec, RejectsLowOrderMTerm) {
    SystemSpec sp = systems::unfolding_linear();
    sp.terms.push_back({systems::index1(1), TermKind::m, 0, systems::constant(1.0)});
    EXPECT_THROW(sp.validate(), Error);
}

TEST(SystemF, MatchesHandExpansion) {
    SystemSpec sp = systems::unfolding_nonlinear();
    cx x(0.3, 0.2), eps(0.01, 0.02), y(0.5, -0.1);
    Vec Y = Vec::Constant(1, y);
    cx ref = 2.0 * x * y + (x * x - eps) * (x * x - eps);
    EXPECT_LT(std::abs(system_f(sp, x, Y, eps)(0) - ref), 1e-15);
}

TEST(FormalSolution, UnfoldingLinearLeadingCoefficients) {
    auto ps = formal_solution(systems::unfolding_linear(), 6);
    EXPECT_LT(std::abs(ps.at(0, 0)(0) + 1.0), 1e-14);
    EXPECT_LT(std::abs(ps.at(1, 0)(0) + 2.0), 1e-14);
    EXPECT_LT(std::abs(ps.at(2, 0)(0) + 6.0), 1e-14);
}

// Euler: v = y - x = Σ_{k>=2} (k-1)! x^k, so v/x² has coefficients (k+1)!.
TEST(FormalSolution, EulerFactorials) {
    auto ps = formal_solution(systems::euler_shifted(), 10);
    for (int k = 0; k <= 8; ++k)
        EXPECT_NEAR(ps.at(k, 0)(0).real(), factorial(k + 1), 1e-9 * factorial(k + 1)) << k;
}

TEST(FormalSolution, SatisfiesEquationToOrder) {
    SystemSpec sp = systems::unfolding_nonlinear();
    const int N = 10;
    auto ps = formal_solution(sp, N);
    cx eps(0.0004, 0.0003);
    cx x(0.01, 0.005);
    Vec S = Vec::Zero(1), dS = Vec::Zero(1);
    for (int n = 0; n <= N; ++n)
        for (int j = 0; j <= n; ++j) {
            int k = n - j;
            S += ps.at(k, j) * (std::pow(x, k) * std::pow(eps, j));
            if (k > 0) dS += ps.at(k, j) * (double(k) * std::pow(x, k - 1) * std::pow(eps, j));
        }
    Vec y = (x * x - eps) * S;
    Vec dy = 2.0 * x * S + (x * x - eps) * dS;
    Vec r = (x * x - eps) * dy - sp.M_at(eps) * y - system_f(sp, x, y, eps);
    EXPECT_LT(max_abs(r), 1e-12);
}

TEST(Gregory, ExactForLowDegreePolynomials) {
    for (int N : {17, 33, 101}) {
        auto w = quad::gregory_weights(N);
        for (int p = 0; p <= 6; ++p) {
            long double acc = 0;
            for (int j = 0; j < N; ++j) acc += w[j] * std::pow(double(j), p);
            double exact = std::pow(double(N - 1), p + 1) / (p + 1);
            EXPECT_NEAR(double(acc), exact, 1e-11 * exact) << "N=" << N << " p=" << p;
        }
    }
}

TEST(Gauss20, IntegratesDegree39) {
    const auto& g = quad::gauss20();
    double acc = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) acc += g.w[i] * std::pow(g.x[i], 38);
    EXPECT_NEAR(acc, 2.0 / 39, 1e-14);
}
