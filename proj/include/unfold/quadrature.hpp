#pragma once

#include "unfold/core.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <array>
#include <functional>

namespace unfold::quad {

// 20-point Gauss-Legendre rule on [-1, 1], expanded from the symmetric half stored by Boost.
struct GaussRule {
    std::vector<double> x, w;
    GaussRule() {
        using G = boost::math::quadrature::gauss<double, 20>;
        const auto& a = G::abscissa();
        const auto& wt = G::weights();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] == 0.0) {
                x.push_back(0.0);
                w.push_back(wt[i]);
                continue;
            }
            x.push_back(a[i]);
            w.push_back(wt[i]);
            x.push_back(-a[i]);
            w.push_back(wt[i]);
        }
    }
};

inline const GaussRule& gauss20() {
    static const GaussRule r;
    return r;
}

// ∫_a^b f(u) du over the given panel breakpoints.
template <class F>
cx panels(F&& f, const std::vector<double>& breaks) {
    const auto& g = gauss20();
    cx acc = 0.0;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        double a = breaks[p], b = breaks[p + 1];
        double c = 0.5 * (a + b), r = 0.5 * (b - a);
        cx part = 0.0;
        for (std::size_t i = 0; i < g.x.size(); ++i) part += g.w[i] * f(c + r * g.x[i]);
        acc += r * part;
    }
    return acc;
}

template <class F>
cx uniform_panels(F&& f, double a, double b, int npanel) {
    std::vector<double> br(npanel + 1);
    for (int i = 0; i <= npanel; ++i) br[i] = a + (b - a) * i / npanel;
    return panels(f, br);
}

// Breakpoints 0, w/4, w/2, w, 2w, ... up to `end`; resolves integrands decaying on scale w.
inline std::vector<double> geometric_breaks(double w, double end) {
    std::vector<double> br{0.0};
    double b = w / 4;
    while (b < end) {
        br.push_back(b);
        b *= 2;
    }
    br.push_back(end);
    return br;
}

// Gregory end corrections: coefficient of the k-th difference at each end.
inline constexpr std::array<double, 7> gregory_coeff{1.0 / 12,      1.0 / 24,         19.0 / 720,
                                                      3.0 / 160,     863.0 / 60480,    275.0 / 24192,
                                                      33953.0 / 3628800};

// Weight corrections c_j added to the trapezoid weights at the first K+1 nodes; the same
// vector mirrored applies at the last nodes.
inline std::vector<double> gregory_end_weights(int K) {
    std::vector<double> c(K + 1, 0.0);
    c[0] -= 0.5;  // trapezoid half weight relative to 1
    for (int k = 1; k <= K; ++k) {
        // -(γ_k)(-1)^k Δ^k f_0, Δ^k f_0 = Σ_i (-1)^{k-i} C(k,i) f_i
        double sgn = (k % 2 == 0) ? 1.0 : -1.0;
        for (int i = 0; i <= k; ++i) {
            double d = ((k - i) % 2 == 0 ? 1.0 : -1.0) * binom(k, i);
            c[i] -= gregory_coeff[k - 1] * sgn * d;
        }
    }
    return c;
}

// Weights for ∫ over N equally spaced nodes (spacing 1), high order when N is large enough.
inline std::vector<double> gregory_weights(int N) {
    std::vector<double> w(std::max(N, 0), 1.0);
    if (N <= 1) return std::vector<double>(std::max(N, 0), 0.0);
    if (N == 2) return {0.5, 0.5};
    if (N == 3) return {1.0 / 3, 4.0 / 3, 1.0 / 3};
    if (N == 4) return {3.0 / 8, 9.0 / 8, 9.0 / 8, 3.0 / 8};
    int K = std::min(6, N / 2 - 1);
    auto c = gregory_end_weights(K);
    for (int j = 0; j <= K; ++j) {
        w[j] += c[j];
        w[N - 1 - j] += c[j];
    }
    return w;
}

}  // namespace unfold::quad
