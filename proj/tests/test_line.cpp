#include "unfold/transforms.hpp"

#include <gtest/gtest.h>

using namespace unfold;

namespace {

Evaluator scalar(std::function<cx(cx)> f) {
    return [f](cx z) { return Vec::Constant(1, f(z)); };
}

LineFunction gaussian(double alpha, double width, double T, int n) {
    return make_line_function(scalar([=](cx z) {
                                  cx v = std::exp(cx(0, -alpha)) * z;
                                  return std::exp(-v * v / width);
                              }),
                              0.0, alpha, T, n);
}

}  // namespace

TEST(Convolution, GaussiansOnFullLine) {
    const double alpha = 0.7, a = 0.5, b = 0.8;
    auto fg = convolve(gaussian(alpha, a, 8, 1025), gaussian(alpha, b, 8, 1025));
    double worst = 0.0;
    for (int j = 0; j < fg.n; ++j) {
        double u = fg.u(j);
        cx ref = std::exp(cx(0, alpha)) * std::sqrt(pi * a * b / (a + b)) * std::exp(-u * u / (a + b));
        worst = std::max(worst, std::abs(fg.values(j, 0) - ref));
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(Convolution, ConstantsOnRayGiveIdentity) {
    const double alpha = 0.3;
    auto one = make_line_function(scalar([](cx) { return cx(1.0); }), 0.0, alpha, 4, 201, true, true);
    auto r = convolve(one, one);
    for (int j = 0; j < r.n; ++j) EXPECT_LT(std::abs(r.values(j, 0) - r.xi(j)), 1e-13);
}

TEST(Convolution, RayPrimitiveOfLinear) {
    auto f = make_line_function(scalar([](cx z) { return z; }), 0.0, -0.4, 3, 121, true, true);
    auto P = ray_primitive(f);
    for (int j = 0; j < P.n; ++j) EXPECT_LT(std::abs(P.values(j, 0) - 0.5 * P.xi(j) * P.xi(j)), 1e-13);
}

TEST(Convolution, GridMismatchIsConfigError) {
    auto f = gaussian(0.0, 1.0, 8, 129), g = gaussian(0.0, 1.0, 8, 257);
    try {
        convolve(f, g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
    }
    EXPECT_THROW(convolve(gaussian(0.0, 1.0, 8, 129), gaussian(0.1, 1.0, 8, 129)), Error);
}

TEST(Dirac, UnitAtomAtOriginIsIdentity) {
    auto f = gaussian(0.2, 1.0, 6, 129);
    auto r = convolve_dirac({0.0, Vec::Constant(1, 1.0)}, f);
    EXPECT_EQ(r.base, f.base);
    EXPECT_LT((r.values - f.values).cwiseAbs().maxCoeff(), 1e-300);
}

TEST(Dirac, AtomShiftsAndScales) {
    auto f = gaussian(0.2, 1.0, 6, 129);
    cx a(0.1, -0.2), w(2.0, 1.0);
    auto r = convolve_dirac({a, Vec::Constant(1, w)}, f);
    EXPECT_EQ(r.base, f.base + a);
    for (int j = 0; j < f.n; ++j) EXPECT_LT(std::abs(r.values(j, 0) - w * f.values(j, 0)), 1e-15);
    auto ab = convolve_atoms({a, Vec::Constant(1, w)}, {2.0 * a, Vec::Constant(1, 3.0)});
    EXPECT_EQ(ab.a, 3.0 * a);
    EXPECT_EQ(ab.w(0), 3.0 * w);
}

// Convolving with x̃ is multiplication by x before the transform.
TEST(XTilde, MultipliesByX) {
    cx s = 0.1 * std::exp(cx(0, 0.3));
    double alpha = std::arg(s) + pi / 2;
    const double T = 8;
    const int n = 1025;
    auto B = [&](int a, int b) { return borel_monomial(a, b, s, Side::plus); };
    auto S = make_strip_function(scalar([&](cx z) { return B(1, 1).eval(z, alpha); }), s, alpha, T, n);
    XTilde X(Side::plus, s, alpha, T, n);
    for (double tau : {0.0, 0.5, -0.5}) {
        LineFunction L = X.apply_line(S, tau);
        double worst = 0.0;
        for (int j = 0; j < L.n; ++j) {
            if (std::abs(L.u(j)) > T / 2) continue;
            cx z = L.xi(j);
            cx ref = B(2, 1).eval(z, alpha) + s * B(1, 1).eval(z, alpha);
            worst = std::max(worst, std::abs(L.values(j, 0) - ref));
        }
        EXPECT_LT(worst, 1e-10) << "tau=" << tau;
    }
}

TEST(XTilde, BothRepresentationsAgree) {
    cx s = 0.1 * std::exp(cx(0, 0.3));
    double alpha = std::arg(s) + pi / 2;
    auto S = make_strip_function(scalar([&](cx z) { return borel_monomial(2, 1, s, Side::plus).eval(z, alpha); }), s,
                                 alpha, 8, 1025);
    XTilde X(Side::plus, s, alpha, 8, 1025);
    LineFunction a = X.apply_line(S, 0.0), b = X.apply_line_alt(S, 0.0);
    double worst = 0.0;
    for (int j = 0; j < a.n; ++j)
        if (std::abs(a.u(j)) < 4) worst = std::max(worst, std::abs(a.values(j, 0) - b.values(j, 0)));
    EXPECT_LT(worst, 1e-10);
}

TEST(Norms, SupOfGaussianMatchesDenseScan) {
    auto f = gaussian(0.0, 1.0, 10, 2001);
    double ref = 0.0;
    for (int k = -100000; k <= 100000; ++k) {
        double u = k * 1e-4;
        ref = std::max(ref, std::exp(-u * u) * (std::exp(-u) + std::exp(u)));
    }
    EXPECT_NEAR(norm_sup(f, -1.0, 1.0), ref, 1e-5);
}

TEST(Norms, IntegralNormIsSubmultiplicative) {
    auto f = gaussian(0.0, 0.7, 10, 1025), g = gaussian(0.0, 1.3, 10, 1025);
    cx A = -0.8, B = 1.2;
    double lhs = norm_int(convolve(f, g), A, B);
    EXPECT_LE(lhs, norm_int(f, A, B) * norm_int(g, A, B) * (1 + 1e-10));
    EXPECT_GT(lhs, 0.0);
}

TEST(Norms, OrderedWeightsRequired) {
    auto f = gaussian(0.0, 1.0, 6, 129);
    EXPECT_THROW(norm_sup(f, 1.0, -1.0), Error);
}

TEST(Resample, StoredOffsetIsExact) {
    cx s(0.1, 0.0);
    auto S = make_strip_function(scalar([](cx z) { return std::exp(-z * z); }), s, pi / 2, 6, 257);
    auto r = resample_offset(S, 0.5);
    EXPECT_EQ(r.residual, 0.0);
    EXPECT_EQ((r.line.values - S.line(0.5).values).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(resample_offset(S, 1.2), Error);
}

TEST(Resample, EntireDataInterpolates) {
    cx s(0.1, 0.05);
    double alpha = std::arg(s) + 1.4;
    auto f = [&](cx z) {
        cx v = std::exp(cx(0, -alpha)) * z;
        return std::exp(-v * v / 4.0) * (1.0 + z);
    };
    auto S = make_strip_function(scalar(f), s, alpha, 6, 257);
    auto r = resample_offset(S, 0.25);
    double worst = 0.0;
    for (int j = 0; j < r.line.n; ++j) worst = std::max(worst, std::abs(r.line.values(j, 0) - f(r.line.xi(j))));
    // five-point interpolation across offsets spaced |s|/2
    EXPECT_LT(worst, 1e-7);
    EXPECT_LT(r.residual, 1e-6);
}

// ξχ⁺ is meromorphic with poles at 2ks; dividing out χ⁺ leaves an entire interpolant.
TEST(Resample, ChiFactoredRemovesLatticePoles) {
    cx s(0.1, 0.0);
    double alpha = pi / 2 - 0.2;
    auto f = [&](cx z) {
        cx v = std::exp(cx(0, -alpha)) * z;
        return xi_chi_plus(z, s) * std::exp(-v * v / 4.0);
    };
    auto S = make_strip_function(scalar(f), s, alpha, 6, 257);
    auto r = resample_offset(S, 0.25, true);
    double worst = 0.0;
    for (int j = 0; j < r.line.n; ++j) worst = std::max(worst, std::abs(r.line.values(j, 0) - f(r.line.xi(j))));
    EXPECT_LT(worst, 1e-7);
}
