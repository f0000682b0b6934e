#pragma once

#include "unfold/chi.hpp"
#include "unfold/geometry.hpp"
#include "unfold/line.hpp"
#include "unfold/quadrature.hpp"
#include "unfold/series.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_gamma.h>

#include <map>

namespace unfold {

// ------------------------------------------------------------------ closed forms

// B±[(x-s)^a (x+s)^b] = χ± · Π_{j=1}^{a+b-1} ((ξ+2bs)/j - 2s), valid between -2bs and 2as.
struct MonomialBorel {
    cx s = 0.0;
    int a = 0, b = 0;
    Side side = Side::plus;
    std::vector<cx> poly;  // coefficients in ξ, ascending

    int degree() const { return a + b - 1; }

    cx eval(cx xi, double alpha = 0.0) const {
        const int n = a + b;
        if (s == cx{}) {
            // ξ^{n-1}/(n-1)! times the ray indicator
            cx c = chi_eval(xi, side, s, alpha);
            if (c == cx{}) return 0.0;
            return c * std::pow(xi, n - 1) / factorial(n - 1);
        }
        cx p = 1.0;
        for (int j = 1; j <= n - 1; ++j) {
            if (j == b) continue;
            p *= (xi + 2.0 * double(b) * s) / double(j) - 2.0 * s;
        }
        if (b >= 1 && b <= n - 1) {
            // the j = b factor is ξ/b and cancels the χ pole at 0
            return p * xi_chi(xi, side, s) / double(b);
        }
        return p * chi_eval(xi, side, s, alpha);
    }

    // Validity strip endpoints in units of s.
    double strip_lo() const { return -2.0 * b; }
    double strip_hi() const { return 2.0 * a; }
};

inline std::vector<cx> poly_from_roots(const std::vector<cx>& roots, cx lead) {
    std::vector<cx> c{lead};
    for (cx r : roots) {
        std::vector<cx> d(c.size() + 1, cx{});
        for (std::size_t k = 0; k < c.size(); ++k) {
            d[k + 1] += c[k];
            d[k] -= r * c[k];
        }
        c = std::move(d);
    }
    return c;
}

inline MonomialBorel borel_monomial(int a, int b, cx s, Side side) {
    if (a < 0 || b < 0) fail(ErrorKind::config, "monomial exponents must be >= 0");
    if (a + b == 0) fail(ErrorKind::config, "constants transform to Dirac atoms");
    MonomialBorel m;
    m.s = s;
    m.a = a;
    m.b = b;
    m.side = side;
    const int n = a + b;
    if (s == cx{}) {
        m.poly.assign(n, cx{});
        m.poly[n - 1] = 1.0 / factorial(n - 1);
        return m;
    }
    std::vector<cx> roots;
    for (int j = 1; j <= n - 1; ++j) roots.push_back(2.0 * s * double(j - b));
    m.poly = poly_from_roots(roots, 1.0 / factorial(n - 1));
    return m;
}

namespace detail {

inline cx lngamma(cx z) {
    gsl_sf_result lr, arg;
    gsl_error_handler_t* old = gsl_set_error_handler_off();
    int st = gsl_sf_lngamma_complex_e(z.real(), z.imag(), &lr, &arg);
    gsl_set_error_handler(old);
    if (st != GSL_SUCCESS) fail(ErrorKind::domain, "Beta poles");
    return {lr.val, arg.val};
}

inline bool near_nonpositive_integer(cx z) {
    return std::abs(z.imag()) < 1e-12 && z.real() < 0.5 && std::abs(z.real() - std::round(z.real())) < 1e-12;
}

}  // namespace detail

// e^{-ξπi/2s + aπi} (2s)^{a+b-1} / (2πi) · B(a - ξ/2s, b + ξ/2s)
inline cx borel_beta(cx a, cx b, cx xi, cx s) {
    if (s == cx{}) fail(ErrorKind::domain, "Beta form requires ε ≠ 0");
    if (!((a + b).real() > 0)) fail(ErrorKind::config, "Beta form needs Re(a+b) > 0");
    cx z = xi / (2.0 * s);
    // excluded: ξ = 2s(a + r) and ξ = -2s(b + r), r >= 0
    cx za = z - a, zb = z + b;
    if ((std::abs(za.imag()) < 1e-12 && za.real() >= -1e-12) || (std::abs(zb.imag()) < 1e-12 && zb.real() <= 1e-12))
        fail(ErrorKind::domain, "ξ outside the validity strip of the Beta form");
    cx p = a - z, q = b + z;
    if (detail::near_nonpositive_integer(p) || detail::near_nonpositive_integer(q)) fail(ErrorKind::domain, "Beta poles");
    cx lnB = detail::lngamma(p) + detail::lngamma(q) - detail::lngamma(p + q);
    cx pref = std::exp(-z * pi * I + a * pi * I + (a + b - 1.0) * std::log(2.0 * s));
    return pref / (2.0 * pi * I) * std::exp(lnB);
}

// ------------------------------------------------------------------ quadrature routes

struct QuadOptions {
    double h = 0.0;          // step in u; 0 selects from the analyticity width
    double tol = 1e-15;      // stop when new terms fall below tol·|sum|
    long max_nodes = 4000000;
    double u_max = 0.0;      // > 0 truncates the line to |u| <= u_max
};

// Integrand receives x and t (t matters for multivalued f).
using TimeEvaluator = std::function<cx(cx x, cx t)>;

// (1/2πi)∫ f(x(t)) e^{tξ} dt over Re(e^{iα}t) = C, oriented by increasing u in
// t = e^{-iα}(C + iu). C must lie in the side's strip.
inline cx borel_unfolded_quad(const TimeEvaluator& f, Side side, double alpha, cx s, cx xi, double C,
                              QuadOptions opt = {}) {
    double delta;
    if (s == cx{}) {
        if (side == Side::plus ? !(C > 0) : !(C < 0)) fail(ErrorKind::domain, "C outside strip");
        delta = std::abs(C);
    } else {
        double W = strip_width(alpha, s);
        bool ok = side == Side::plus ? (C > 0 && C < W) : (C > -W && C < 0);
        if (!ok) fail(ErrorKind::domain, "C outside strip");
        double Cp = side == Side::plus ? C : C + W;
        delta = std::min(Cp, W - Cp);
    }
    cx em = std::exp(cx(0, -alpha));
    // growth of e^{tξ} under imaginary shifts of u
    double osc = std::abs((em * xi).real());
    double h = opt.h > 0 ? opt.h : 2 * pi * 0.8 * delta / (40.0 + osc * 0.8 * delta);
    auto G = [&](double u) {
        cx t = em * cx(C, u);
        cx x = s == cx{} ? 1.0 / t : inverse_time(t, s).x;
        return f(x, t) * std::exp(t * xi);
    };
    cx sum = G(0.0);
    for (int dirn : {+1, -1}) {
        int quiet = 0;
        for (long k = 1;; ++k) {
            if (opt.u_max > 0 && k * h > opt.u_max) break;
            if (k > opt.max_nodes) fail(ErrorKind::convergence, "Borel quadrature did not converge");
            cx g = G(dirn * k * h);
            if (!finite(g)) fail(ErrorKind::numeric, "non-finite Borel integrand");
            sum += g;
            if (std::abs(g) <= opt.tol * std::abs(sum))
                ++quiet;
            else
                quiet = 0;
            if (quiet >= 40) break;
        }
    }
    return em / (2 * pi) * h * sum;
}

// Abscissa for borel_unfolded_quad at ξ: keeps e^{C Re(e^{-iα}ξ)} near 1 so the sum does not cancel.
inline double borel_abscissa(Side side, double alpha, cx s, cx xi) {
    double v = (std::exp(cx(0, -alpha)) * xi).real();
    if (s == cx{}) {
        double C = std::clamp(2.0 / std::max(std::abs(v), 1e-300), 0.5, 2.0);
        return side == Side::plus ? C : -C;
    }
    double W = strip_width(alpha, s);
    double d = std::clamp(2.0 / std::max(std::abs(v), 1e-300), 0.03 * W, 0.5 * W);
    double C = v > 0 ? d : W - d;
    return side == Side::plus ? C : C - W;
}

inline TimeEvaluator of_x(std::function<cx(cx)> f) {
    return [f = std::move(f)](cx x, cx) { return f(x); };
}

// ε = 0: principal value over the circle Re(e^{iα}/x) = C, with integration-by-parts tails for
// oscillating integrands and Richardson extrapolation in the truncation length.
inline cx borel_analytic_vp(const std::function<cx(cx)>& y, double alpha, cx xi, double C) {
    if (C == 0.0) fail(ErrorKind::domain, "C must be nonzero");
    cx em = std::exp(cx(0, -alpha));
    cx zeta = em * xi;
    double r = zeta.real();
    if (std::abs(zeta.imag()) > 1e-12 * std::max(1.0, std::abs(zeta)))
        fail(ErrorKind::domain, "ξ must lie on e^{iα}ℝ for the principal value");
    auto A = [&](double u) {
        cx t = em * cx(C, u);
        return em / (2 * pi) * y(1.0 / t) * std::exp(C * zeta);
    };
    double delta = 0.8 * std::abs(C);
    double h = 2 * pi * delta / (40.0 + std::abs(r) * delta);
    auto body = [&](double T) {
        int N = 2 * static_cast<int>(std::ceil(T / h)) + 1;
        double hh = 2 * T / (N - 1);
        const auto& w = cached_gregory(N);
        cx acc = 0.0;
        for (int j = 0; j < N; ++j) {
            double u = -T + j * hh;
            acc += w[j] * A(u) * std::exp(cx(0, r * u));
        }
        return acc * hh;
    };
    auto ibp_tail = [&](double T) {
        // ∫_T^∞ A e^{iru} + ∫_{-∞}^{-T} A e^{iru}
        cx ir(0, r);
        double d = std::max(1e-3 * T, 1e-4);
        cx out = 0.0;
        for (int sgn : {+1, -1}) {
            double u0 = sgn * T;
            cx a0 = A(u0), ap = A(u0 + d), am = A(u0 - d), ap2 = A(u0 + 2 * d), am2 = A(u0 - 2 * d);
            cx d1 = (am2 - 8.0 * am + 8.0 * ap - ap2) / (12 * d);
            cx d2 = (-am2 + 16.0 * am - 30.0 * a0 + 16.0 * ap - ap2) / (12 * d * d);
            cx series = a0 / ir - d1 / (ir * ir) + d2 / (ir * ir * ir);
            out += -double(sgn) * std::exp(ir * u0) * series;
        }
        return out;
    };
    cx val;
    if (std::abs(r) > 1e-12) {
        double T = std::max(50.0, 60.0 / std::abs(r));
        cx v1 = body(T) + ibp_tail(T);
        cx v2 = body(2 * T) + ibp_tail(2 * T);
        // residual tail error decays like T^{-4}
        val = (16.0 * v2 - v1) / 15.0;
    } else {
        double T = 200.0;
        cx v1 = body(T), v2 = body(2 * T), v3 = body(4 * T);
        // symmetric truncation error ~ c/T + d/T^3
        cx r1 = 2.0 * v2 - v1, r2 = 2.0 * v3 - v2;
        val = (4.0 * r2 - r1) / 3.0;
    }
    if (!finite(val)) fail(ErrorKind::convergence, "V.P. non-convergence");
    return val;
}

struct LaplaceResult {
    cx value;
    double tail_estimate;
};

// ∫_0^{Te^{iα}} φ e^{-ξ/x} dξ plus a tail bound; requires Re(e^{iα}/x) > Λ.
inline LaplaceResult laplace_ray(const std::function<cx(cx)>& phi, double alpha, cx x, double T,
                                 double Lambda = 0.0) {
    if (x == cx{}) fail(ErrorKind::domain, "x outside convergence disc");
    cx e = std::exp(cx(0, alpha));
    double kappa = (e / x).real();
    if (!(kappa > Lambda)) fail(ErrorKind::domain, "x outside convergence disc");
    auto br = quad::geometric_breaks(1.0 / kappa, T);
    cx v = quad::panels([&](double u) { return phi(e * u) * std::exp(-e * u / x) * e; }, br);
    double tail = std::abs(phi(e * T)) * std::exp(-(kappa - Lambda) * T) / (kappa - Lambda);
    return {v, tail};
}

// Degree-8 local Lagrange interpolant of a sampled line at parameter u.
inline Vec interp_line(const LineFunction& L, double u) {
    const int deg = 8;
    double pos = L.ray ? u / L.h() : (u + L.T) / L.h();
    int j0 = static_cast<int>(std::floor(pos)) - deg / 2;
    j0 = std::clamp(j0, 0, L.n - 1 - deg);
    Vec out = Vec::Zero(L.dim());
    for (int i = 0; i <= deg; ++i) {
        double w = 1.0;
        for (int k = 0; k <= deg; ++k)
            if (k != i) w *= (pos - (j0 + k)) / double(i - k);
        out += w * L.values.row(j0 + i).transpose();
    }
    return out;
}

// ∫_line φ e^{-tξ} dξ for a sampled line, with closed-form exponential tails.
inline Vec laplace_line(const LineFunction& L, cx t) {
    const cx e = L.dir();
    const cx te = t * e;
    const int m = L.dim();
    Vec acc = Vec::Zero(m);
    if (L.ray) {
        double kappa = te.real();
        if (!(kappa > 0)) fail(ErrorKind::domain, "t outside convergence strip");
        auto br = quad::geometric_breaks(std::min(1.0 / kappa, L.T), L.T);
        for (int c = 0; c < m; ++c)
            acc(c) = quad::panels([&](double u) { return interp_line(L, u)(c) * std::exp(-te * u); }, br) * e;
    } else {
        const auto& w = cached_gregory(L.n);
        for (int j = 0; j < L.n; ++j) acc += (w[j] * std::exp(-t * L.xi(j))) * L.values.row(j).transpose();
        acc *= e * L.h();
    }
    // tails
    for (int c = 0; c < m; ++c) {
        cx a = L.hi.a(c);
        if (a != cx{}) {
            cx rate = te - L.hi.kappa(c);
            if (!(rate.real() > 0)) fail(ErrorKind::domain, "t outside convergence strip");
            acc(c) += a * std::exp(-t * L.xi(L.n - 1)) * e / rate;
        }
        if (!L.ray) {
            cx b = L.lo.a(c);
            if (b != cx{}) {
                cx rate = L.lo.kappa(c) - te;
                if (!(rate.real() > 0)) fail(ErrorKind::domain, "t outside convergence strip");
                acc(c) += b * std::exp(-t * L.xi(0)) * e / rate;
            }
        }
    }
    return acc;
}

// L[φ + Σ w δ_a](x) for a line holding ỹ⁺. Side - evaluates ∫ỹ⁻e^{-tξ}dξ with ỹ⁻ = e^{ξπi/s}ỹ⁺ on
// the - lift of x; at ε = 0 the line is a ray and x must lie in its disc. Atoms add w e^{-a t}.
inline Vec laplace_unfolded(const LineFunction& L, const std::vector<DiracAtom>& atoms, const SheetPoint& x, cx s,
                            double Lambda, Side side = Side::plus) {
    cx t;
    if (s == cx{}) {
        t = time_coord(x, s);
        double r = (std::exp(cx(0, L.alpha)) * t).real();
        if (!(r > Lambda)) fail(ErrorKind::domain, "t outside convergence strip");
    } else {
        auto lift = lift_to_strip(x.x, side, L.alpha, s);
        t = lift.t;
        if (!(strip_margin(lift.r, side, L.alpha, Lambda, s) > 0)) fail(ErrorKind::domain, "t outside convergence strip");
    }
    // ỹ⁻ = e^{ξπi/s}ỹ⁺ folds into the + lift
    cx t_line = (s != cx{} && side == Side::minus) ? t - pi * I / s : t;
    Vec v = laplace_line(L, t_line);
    for (const auto& d : atoms) {
        cx f = std::exp(-d.a * t);
        if (d.w.size() == 1)
            v.array() += d.w(0) * f;
        else
            v += d.w * f;
    }
    return v;
}

// ------------------------------------------------------------------ system right-hand side

struct ChiPolyTerm {
    int row = 0;
    cx coeff = 1.0;
    MonomialBorel mono;
};

// h̃_l as sums of coefficient · B[(x-s)^a (x+s)^b].
struct ChiPoly {
    int m = 1;
    std::vector<ChiPolyTerm> terms;

    Vec eval(cx xi, double alpha = 0.0) const {
        Vec v = Vec::Zero(m);
        for (const auto& t : terms) v(t.row) += t.coeff * t.mono.eval(xi, alpha);
        return v;
    }
    bool empty() const { return terms.empty(); }
};

struct RhsBorel {
    std::map<MultiIndex, ChiPoly> h;   // h̃_l, from g_l
    std::map<MultiIndex, Vec> m_terms; // m_l
    std::map<MultiIndex, Vec> a_terms; // x̃ markers: coefficient vectors a_l
};

inline RhsBorel system_rhs_borel(const SystemSpec& spec, cx s, Side side) {
    RhsBorel out;
    const cx eps = s * s;
    for (const auto& [l, polys] : spec.g_terms(eps)) {
        ChiPoly cp;
        cp.m = spec.m;
        for (std::size_t p = 0; p < polys.size(); ++p) {
            for (int row = 0; row < spec.m; ++row) {
                cx c = polys[p](row);
                if (c == cx{}) continue;
                // (x²-ε)x^p = Σ_q C(p,q) s^{p-q} (x-s)^{q+1}(x+s)
                for (int q = 0; q <= static_cast<int>(p); ++q) {
                    cx w = c * binom(static_cast<int>(p), q) * std::pow(s, static_cast<int>(p) - q);
                    if (w == cx{}) continue;
                    cp.terms.push_back({row, w, borel_monomial(q + 1, 1, s, side)});
                }
            }
        }
        if (!cp.empty()) out.h[l] = std::move(cp);
    }
    for (auto& [l, v] : spec.const_terms(TermKind::m, eps))
        if (v.cwiseAbs().maxCoeff() > 0) out.m_terms[l] = v;
    for (auto& [l, v] : spec.const_terms(TermKind::a, eps))
        if (v.cwiseAbs().maxCoeff() > 0) out.a_terms[l] = v;
    return out;
}

inline std::vector<DiracAtom> fourier_borel_atoms(const PowerSeries1& taylor, cx s, FourierSide side, int N) {
    if (s == cx{}) fail(ErrorKind::domain, "Fourier expansion requires ε ≠ 0");
    auto a = mobius_fourier_coeffs(taylor, s, side, N);
    std::vector<DiracAtom> atoms;
    double sg = side == FourierSide::R ? 1.0 : -1.0;
    for (int n = 0; n <= N; ++n)
        if (a[n] != cx{}) atoms.push_back({sg * 2.0 * double(n) * s, Vec::Constant(1, a[n])});
    return atoms;
}

}  // namespace unfold
