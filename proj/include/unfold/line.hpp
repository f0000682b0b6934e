#pragma once

#include "unfold/chi.hpp"
#include "unfold/core.hpp"
#include "unfold/quadrature.hpp"

#include <functional>
#include <limits>
#include <map>

namespace unfold {

// Single-exponential end model: v(u) ≈ a·e^{κ(u - u_end)} beyond the sampled range.
struct TailModel {
    Vec a, kappa;
    cx at(int comp, double du) const { return a(comp) * std::exp(kappa(comp) * du); }
};

// Vector samples on ξ = c + e^{iα}u. Full-line mode uses odd n with u_j = -T + jh; ray mode (used
// at ε = 0) samples u_j = jh on [0, T] and stores right limits at u = 0.
class LineFunction {
public:
    cx base = 0.0;
    double alpha = 0.0, T = 1.0;
    int n = 0;
    bool ray = false;
    Mat values;  // n × m
    TailModel lo, hi;

    int dim() const { return static_cast<int>(values.cols()); }
    double h() const { return ray ? T / (n - 1) : 2 * T / (n - 1); }
    double u(int j) const { return ray ? j * h() : -T + j * h(); }
    cx dir() const { return std::exp(cx(0, alpha)); }
    cx xi(int j) const { return base + dir() * u(j); }
    int center() const { return ray ? 0 : (n - 1) / 2; }

    // Value at integer node index k, extended through the tail models when k is outside [0, n).
    cx ext(int k, int comp) const {
        if (k >= 0 && k < n) return values(k, comp);
        if (k >= n) return hi.at(comp, (k - (n - 1)) * h());
        if (ray) return 0.0;
        return lo.at(comp, k * h());
    }

    void fit_tails() {
        int m = dim();
        int step = std::max(1, n / 10);
        auto fit = [&](int end, int inner, double du) {
            TailModel t{Vec::Zero(m), Vec::Zero(m)};
            for (int c = 0; c < m; ++c) {
                cx ve = values(end, c), vi = values(inner, c);
                t.a(c) = ve;
                if (std::abs(ve) == 0.0 || std::abs(vi) == 0.0) continue;
                t.kappa(c) = std::log(ve / vi) / du;
            }
            return t;
        };
        hi = fit(n - 1, n - 1 - step, step * h());
        if (ray) {
            lo = TailModel{Vec::Zero(m), Vec::Zero(m)};
        } else {
            lo = fit(0, step, -step * h());
        }
    }

    void zero_tails() {
        lo = TailModel{Vec::Zero(dim()), Vec::Zero(dim())};
        hi = lo;
    }

    LineFunction component(int c) const {
        LineFunction r = *this;
        r.values = values.col(c);
        r.lo = TailModel{lo.a.segment(c, 1), lo.kappa.segment(c, 1)};
        r.hi = TailModel{hi.a.segment(c, 1), hi.kappa.segment(c, 1)};
        return r;
    }

    bool same_grid(const LineFunction& o) const {
        return n == o.n && ray == o.ray && std::abs(T - o.T) < 1e-14 * std::max(1.0, T);
    }
};

inline bool same_direction(double a, double b) {
    double d = std::remainder(a - b, 2 * pi);
    return std::abs(d) < 1e-12;
}

using Evaluator = std::function<Vec(cx)>;

inline LineFunction make_line_function(const Evaluator& f, cx c, double alpha, double T, int n,
                                       bool tail_fit = true, bool ray = false) {
    if (n < 8) fail(ErrorKind::config, "line functions need n >= 8");
    if (!ray && n % 2 == 0) fail(ErrorKind::config, "full-line grids need odd n");
    if (!(T > 0)) fail(ErrorKind::config, "half width T must be positive");
    LineFunction L;
    L.base = c;
    L.alpha = alpha;
    L.T = T;
    L.n = n;
    L.ray = ray;
    for (int j = 0; j < n; ++j) {
        Vec v = f(L.xi(j));
        if (j == 0) L.values = Mat::Zero(n, v.size());
        for (int k = 0; k < v.size(); ++k)
            if (!finite(v(k))) fail(ErrorKind::numeric, "non-finite sample");
        L.values.row(j) = v.transpose();
    }
    if (tail_fit)
        L.fit_tails();
    else
        L.zero_tails();
    return L;
}

inline LineFunction zero_like(const LineFunction& g, int m, cx base) {
    LineFunction L = g;
    L.base = base;
    L.values = Mat::Zero(g.n, m);
    L.zero_tails();
    return L;
}

inline const std::vector<double>& cached_gregory(int N) {
    static thread_local std::map<int, std::vector<double>> cache;
    auto it = cache.find(N);
    if (it == cache.end()) it = cache.emplace(N, quad::gregory_weights(N)).first;
    return it->second;
}

namespace detail {

inline void convolve_full(const LineFunction& f, int cf, const LineFunction& g, int cg, Mat& out, int co) {
    const int n = f.n, half = (n - 1) / 2, P = (n - 1) / 4;
    std::vector<cx> fe(n + 2 * P);
    for (int j = -P; j < n + P; ++j) fe[j + P] = f.ext(j, cf);
    // g indices needed: i - j + half for i ∈ [0,n), j ∈ [-P, n+P)
    const int gmin = -(n - 1) - P + half, gmax = (n - 1) + P + half;
    std::vector<cx> ge(gmax - gmin + 1);
    for (int k = gmin; k <= gmax; ++k) ge[k - gmin] = g.ext(k, cg);
    const cx scale = f.dir() * f.h();
    for (int i = 0; i < n; ++i) {
        cx acc = 0.0;
        const cx* gp = ge.data() + (i + half - gmin);
        for (int j = -P; j < n + P; ++j) acc += fe[j + P] * gp[-j];
        out(i, co) = scale * acc;
    }
}

inline void convolve_ray(const LineFunction& f, int cf, const LineFunction& g, int cg, Mat& out, int co) {
    const int n = f.n;
    const cx scale = f.dir() * f.h();
    out(0, co) = 0.0;
    for (int i = 1; i < n; ++i) {
        const auto& w = cached_gregory(i + 1);
        cx acc = 0.0;
        for (int j = 0; j <= i; ++j) acc += w[j] * f.values(j, cf) * g.values(i - j, cg);
        out(i, co) = scale * acc;
    }
}

}  // namespace detail

// (φ*ψ)(ξ) = ∫ φ(σ)ψ(ξ-σ)dσ over the line of φ; result lives on the line through φ.base + ψ.base.
// Equal dimensions convolve componentwise; a scalar factor broadcasts.
inline LineFunction convolve(const LineFunction& f, const LineFunction& g) {
    if (!same_direction(f.alpha, g.alpha)) fail(ErrorKind::domain, "direction mismatch");
    if (!f.same_grid(g)) fail(ErrorKind::config, "grid mismatch in convolution");
    int mf = f.dim(), mg = g.dim();
    if (mf != mg && mf != 1 && mg != 1) fail(ErrorKind::config, "dimension mismatch in convolution");
    int m = std::max(mf, mg);
    LineFunction r = f;
    r.base = f.base + g.base;
    r.values = Mat::Zero(f.n, m);
    for (int c = 0; c < m; ++c) {
        int cf = mf == 1 ? 0 : c, cg = mg == 1 ? 0 : c;
        if (f.ray)
            detail::convolve_ray(f, cf, g, cg, r.values, c);
        else
            detail::convolve_full(f, cf, g, cg, r.values, c);
    }
    r.fit_tails();
    return r;
}

struct DiracAtom {
    cx a = 0.0;
    Vec w;
};

inline DiracAtom convolve_atoms(const DiracAtom& x, const DiracAtom& y) {
    Vec w;
    if (x.w.size() == y.w.size())
        w = x.w.cwiseProduct(y.w);
    else if (x.w.size() == 1)
        w = x.w(0) * y.w;
    else if (y.w.size() == 1)
        w = y.w(0) * x.w;
    else
        fail(ErrorKind::config, "dimension mismatch in atom product");
    return {x.a + y.a, w};
}

inline LineFunction convolve_dirac(const DiracAtom& d, const LineFunction& f) {
    LineFunction r = f;
    r.base = f.base + d.a;
    int m = f.dim();
    if (d.w.size() == 1) {
        r.values *= d.w(0);
        r.lo.a *= d.w(0);
        r.hi.a *= d.w(0);
    } else if (d.w.size() == m) {
        for (int c = 0; c < m; ++c) {
            r.values.col(c) *= d.w(c);
            r.lo.a(c) *= d.w(c);
            r.hi.a(c) *= d.w(c);
        }
    } else {
        fail(ErrorKind::config, "dimension mismatch in Dirac convolution");
    }
    return r;
}

// ------------------------------------------------------------------ strips

inline const std::vector<double>& default_offsets() {
    static const std::vector<double> o{-1.0, -0.5, 0.0, 0.5, 1.0};
    return o;
}

// Lines τs + e^{iα}ℝ for τ in the offset lattice, sharing one u-grid. At s = 0 only τ = 0 exists.
struct StripFunction {
    double alpha = 0.0;
    cx s = 0.0;
    std::vector<double> offsets;
    std::vector<LineFunction> lines;

    int index(double tau) const {
        for (std::size_t i = 0; i < offsets.size(); ++i)
            if (std::abs(offsets[i] - tau) < 1e-12) return static_cast<int>(i);
        return -1;
    }
    const LineFunction& line(double tau) const {
        int i = index(tau);
        if (i < 0) fail(ErrorKind::domain, "required offset line missing");
        return lines[i];
    }
    LineFunction& line(double tau) {
        int i = index(tau);
        if (i < 0) fail(ErrorKind::domain, "required offset line missing");
        return lines[i];
    }
};

inline StripFunction make_strip_function(const Evaluator& f, cx s, double alpha, double T, int n,
                                         bool tail_fit = true) {
    StripFunction S;
    S.alpha = alpha;
    S.s = s;
    if (s == cx{}) {
        S.offsets = {0.0};
        S.lines.push_back(make_line_function(f, 0.0, alpha, T, n, tail_fit, true));
        return S;
    }
    S.offsets = default_offsets();
    for (double tau : S.offsets) S.lines.push_back(make_line_function(f, tau * s, alpha, T, n, tail_fit));
    return S;
}

// χ kernel sampled on the line through c (c = ±s); empty at the χ poles by construction.
inline LineFunction chi_kernel_line(Side side, cx s, cx c, double alpha, double T, int n) {
    return make_line_function([&](cx xi) { return Vec::Constant(1, chi_eval(xi, side, s, alpha)); }, c, alpha,
                              T, n, true);
}

// Cumulative integral ∫_0^ξ φ along a ray.
inline LineFunction ray_primitive(const LineFunction& f) {
    LineFunction r = f;
    const cx scale = f.dir() * f.h();
    for (int c = 0; c < f.dim(); ++c) {
        r.values(0, c) = 0.0;
        for (int i = 1; i < f.n; ++i) {
            const auto& w = cached_gregory(i + 1);
            cx acc = 0.0;
            for (int j = 0; j <= i; ++j) acc += w[j] * f.values(j, c);
            r.values(i, c) = scale * acc;
        }
    }
    r.fit_tails();
    return r;
}

// x̃ * φ on every stored line. For τ >= 0 the kernel runs on the line through s and reads φ on
// τ-1, adding s·φ; for τ < 0 it runs through -s, reads τ+1 and subtracts s·φ.
class XTilde {
public:
    XTilde() = default;
    XTilde(Side side, cx s, double alpha, double T, int n) : side_(side), s_(s) {
        if (s == cx{}) return;
        kp_ = chi_kernel_line(side, s, s, alpha, T, n);
        km_ = chi_kernel_line(side, s, -s, alpha, T, n);
    }

    StripFunction apply(const StripFunction& phi) const {
        StripFunction out = phi;
        if (s_ == cx{}) {
            out.lines[0] = ray_primitive(phi.lines[0]);
            return out;
        }
        for (std::size_t i = 0; i < phi.offsets.size(); ++i) {
            double tau = phi.offsets[i];
            const LineFunction& src = phi.line(tau >= 0 ? tau - 1 : tau + 1);
            LineFunction r = convolve(tau >= 0 ? kp_ : km_, src);
            r.values += (tau >= 0 ? s_ : -s_) * phi.lines[i].values;
            r.base = tau * s_;
            r.fit_tails();
            out.lines[i] = std::move(r);
        }
        return out;
    }

    // Single target line τ from a strip (used when only some lines are needed).
    LineFunction apply_line(const StripFunction& phi, double tau) const {
        if (s_ == cx{}) return ray_primitive(phi.lines[0]);
        const LineFunction& src = phi.line(tau >= 0 ? tau - 1 : tau + 1);
        LineFunction r = convolve(tau >= 0 ? kp_ : km_, src);
        r.values += (tau >= 0 ? s_ : -s_) * phi.line(tau).values;
        r.base = tau * s_;
        r.fit_tails();
        return r;
    }

    // The alternative representation on line τ (kernel through the other root); used to check
    // that both agree where both argument lines are stored.
    LineFunction apply_line_alt(const StripFunction& phi, double tau) const {
        const LineFunction& src = phi.line(tau >= 0 ? tau + 1 : tau - 1);
        LineFunction r = convolve(tau >= 0 ? km_ : kp_, src);
        r.values += (tau >= 0 ? -s_ : s_) * phi.line(tau).values;
        r.base = tau * s_;
        r.fit_tails();
        return r;
    }

private:
    Side side_ = Side::plus;
    cx s_ = 0.0;
    LineFunction kp_, km_;
};

inline StripFunction convolve_xtilde(const StripFunction& phi, Side side, cx s) {
    if (phi.lines.empty()) fail(ErrorKind::config, "empty strip");
    const auto& L = phi.lines.front();
    return XTilde(side, s, phi.alpha, L.T, L.n).apply(phi);
}

// ------------------------------------------------------------------ norms

namespace detail {

// Rate r and offset q with |e^{-Aξ(u)}| = e^{q - r u} on ξ = c + e^{iα}u.
struct Weight {
    double r, q;
};

inline Weight weight(cx A, const LineFunction& f) {
    return {(A * f.dir()).real(), -(A * f.base).real()};
}

inline double node_weight(const Weight& w, double u) { return std::exp(w.q - w.r * u); }

}  // namespace detail

inline double norm_sup(const LineFunction& f, cx A, cx B) {
    if (!((f.dir() * A).real() < (f.dir() * B).real())) fail(ErrorKind::config, "norm needs Re(e^{iα}A) < Re(e^{iα}B)");
    auto wa = detail::weight(A, f), wb = detail::weight(B, f);
    double best = 0.0;
    for (int j = 0; j < f.n; ++j) {
        double wt = detail::node_weight(wa, f.u(j)) + detail::node_weight(wb, f.u(j));
        for (int c = 0; c < f.dim(); ++c) best = std::max(best, std::abs(f.values(j, c)) * wt);
    }
    auto tail_sup = [&](const TailModel& t, double u0, double sgn) {
        for (int c = 0; c < f.dim(); ++c) {
            double amp = std::abs(t.a(c));
            if (amp == 0.0) continue;
            for (const auto& w : {wa, wb}) {
                double rate = sgn * (t.kappa(c).real() - w.r);
                if (rate > 1e-12) return std::numeric_limits<double>::infinity();
                best = std::max(best, amp * detail::node_weight(w, u0));
            }
        }
        return best;
    };
    best = tail_sup(f.hi, f.u(f.n - 1), 1.0);
    if (!f.ray) best = tail_sup(f.lo, f.u(0), -1.0);
    return best;
}

inline double norm_int(const LineFunction& f, cx A, cx B) {
    if (!((f.dir() * A).real() < (f.dir() * B).real())) fail(ErrorKind::config, "norm needs Re(e^{iα}A) < Re(e^{iα}B)");
    auto wa = detail::weight(A, f), wb = detail::weight(B, f);
    const auto& g = cached_gregory(f.n);
    double acc = 0.0;
    for (int j = 0; j < f.n; ++j) {
        double wt = detail::node_weight(wa, f.u(j)) + detail::node_weight(wb, f.u(j));
        double v = 0.0;
        for (int c = 0; c < f.dim(); ++c) v = std::max(v, std::abs(f.values(j, c)));
        acc += g[j] * v * wt;
    }
    acc *= f.h();
    auto tail = [&](const TailModel& t, double u0, double sgn) {
        double add = 0.0;
        for (const auto& w : {wa, wb}) {
            double worst = 0.0;
            for (int c = 0; c < f.dim(); ++c) {
                double amp = std::abs(t.a(c));
                if (amp == 0.0) continue;
                double rate = sgn * (t.kappa(c).real() - w.r);  // growth rate moving outward
                if (rate >= -1e-12) fail(ErrorKind::domain, "norm infinite");
                worst = std::max(worst, amp * detail::node_weight(w, u0) / (-rate));
            }
            add += worst;
        }
        return add;
    };
    acc += tail(f.hi, f.u(f.n - 1), 1.0);
    if (!f.ray) acc += tail(f.lo, f.u(0), -1.0);
    return acc;
}

// ------------------------------------------------------------------ offset resampling

struct Resampled {
    LineFunction line;
    double residual = 0.0;
};

namespace detail {

inline std::vector<double> lagrange_weights(const std::vector<double>& nodes, double x) {
    std::vector<double> w(nodes.size(), 1.0);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t k = 0; k < nodes.size(); ++k)
            if (k != i) w[i] *= (x - nodes[k]) / (nodes[i] - nodes[k]);
    return w;
}

}  // namespace detail

// Interpolates across offsets at matched u. With chi_factored, the data are divided by χ⁺ before
// interpolation and multiplied back afterwards, removing the lattice poles from the interpolant.
inline Resampled resample_offset(const StripFunction& S, double tau_new, bool chi_factored = false) {
    if (S.offsets.empty()) fail(ErrorKind::config, "empty strip");
    double lo = *std::min_element(S.offsets.begin(), S.offsets.end());
    double hi = *std::max_element(S.offsets.begin(), S.offsets.end());
    if (tau_new < lo - 1e-12 || tau_new > hi + 1e-12) fail(ErrorKind::domain, "extrapolation outside the offset hull");
    int at = S.index(tau_new);
    if (at >= 0) return {S.lines[at], 0.0};

    const LineFunction& ref = S.lines.front();
    auto factor = [&](cx xi) -> cx {
        if (!chi_factored) return 1.0;
        return 1.0 - std::exp(xi * pi * I / S.s);
    };
    auto interp = [&](const std::vector<int>& use, Mat& out) {
        std::vector<double> nodes;
        for (int i : use) nodes.push_back(S.offsets[i]);
        auto w = detail::lagrange_weights(nodes, tau_new);
        out = Mat::Zero(ref.n, ref.dim());
        for (int j = 0; j < ref.n; ++j) {
            cx xi_new = tau_new * S.s + ref.dir() * ref.u(j);
            cx back = chi_factored ? 1.0 / factor(xi_new) : 1.0;
            for (std::size_t q = 0; q < use.size(); ++q) {
                const LineFunction& L = S.lines[use[q]];
                out.row(j) += w[q] * factor(L.xi(j)) * L.values.row(j);
            }
            out.row(j) *= back;
        }
    };
    std::vector<int> all(S.offsets.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    Mat full;
    interp(all, full);
    double resid = 0.0;
    if (all.size() >= 3) {
        // drop the node farthest from the target for a second stencil
        int far = 0;
        for (int i : all)
            if (std::abs(S.offsets[i] - tau_new) > std::abs(S.offsets[far] - tau_new)) far = i;
        std::vector<int> less;
        for (int i : all)
            if (i != far) less.push_back(i);
        Mat alt;
        interp(less, alt);
        resid = (full - alt).cwiseAbs().maxCoeff();
    }
    LineFunction L = ref;
    L.base = tau_new * S.s;
    L.values = full;
    L.fit_tails();
    return {L, resid};
}

}  // namespace unfold
