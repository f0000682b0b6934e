#pragma once

#include "unfold/geometry.hpp"
#include "unfold/line.hpp"
#include "unfold/series.hpp"
#include "unfold/transforms.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <sstream>

namespace unfold {

enum class SideSet { both, plus_only };

struct GridOptions {
    int directions = 3;
    double T = 8.0;
    int n = 1025;
    double margin_floor = 1e-3;
    SideSet sides = SideSet::both;
};

struct OmegaGrid {
    cx s = 0.0;
    DirectionRange dr;
    double Lambda = 1.0;
    Interval interval;
    std::vector<double> alphas;
    std::vector<double> offsets;
    double T = 8.0;
    int n = 1025;
    SideSet sides = SideSet::both;
    std::vector<cx> eigenvalues;
    double spectral_margin = 0.0;
};

inline std::vector<cx> eigenvalues_of(const Mat& M) {
    Eigen::ComplexEigenSolver<Mat> es(M, false);
    std::vector<cx> ev;
    for (int i = 0; i < M.rows(); ++i) ev.push_back(es.eigenvalues()(i));
    return ev;
}

inline double lambda_upper(const DirectionRange& dr) { return pi * std::sin(dr.eta) / (2 * dr.rho); }

// Distance from a point to the closed segment between the stored lines τ ∈ [-1, 1] in direction α,
// measured transversally; negative when the point lies inside the closed strip of |τ| <= 1.5.
inline double transverse_margin(cx p, double alpha, cx s) {
    double tau = strip_offset(p, alpha, s);
    double unit = std::abs((std::exp(cx(0, -alpha)) * s).imag());
    return (std::abs(tau) - 1.5) * unit;
}

inline OmegaGrid build_omega_grid(const SystemSpec& spec, cx s, const DirectionRange& dr, double Lambda,
                                  const GridOptions& opt = {}) {
    spec.validate();
    dr.validate();
    if (opt.directions < 1) fail(ErrorKind::config, "need at least one direction");
    if (s != cx{} && !in_sector(s, dr)) fail(ErrorKind::domain, "√ε outside the sector S");
    OmegaGrid g;
    g.s = s;
    g.dr = dr;
    g.Lambda = Lambda;
    g.T = opt.T;
    g.n = opt.n;
    g.sides = opt.sides;
    if (!(Lambda > spec.Lambda1 && Lambda < lambda_upper(dr)))
        fail(ErrorKind::config, "Λ must lie in (Λ₁, π sin η / 2ρ)");
    g.interval = admissible_alphas(s, dr);
    if (g.interval.empty()) fail(ErrorKind::domain, "empty admissible direction interval");
    for (int i = 0; i < opt.directions; ++i)
        g.alphas.push_back(g.interval.lo + (i + 1) * (g.interval.hi - g.interval.lo) / (opt.directions + 1));
    g.offsets = s == cx{} ? std::vector<double>{0.0} : default_offsets();
    g.eigenvalues = eigenvalues_of(spec.M_at(s * s));

    double margin = std::numeric_limits<double>::infinity();
    for (double a : g.alphas) {
        if (s == cx{}) {
            for (cx lam : g.eigenvalues) {
                cx z = std::exp(cx(0, -a)) * lam;
                for (int sg : {+1, -1}) {
                    if (sg < 0 && opt.sides == SideSet::plus_only) continue;
                    // distance from λ to the ray sg·e^{ia}[0, ∞)
                    double along = sg * z.real();
                    double d = along >= 0 ? std::abs(z.imag()) : std::abs(z);
                    if (d <= membership_margin) fail(ErrorKind::domain, "Ω intersects spectrum");
                    margin = std::min(margin, d);
                }
            }
            continue;
        }
        if (2 * Lambda >= strip_width(a, s)) fail(ErrorKind::config, "Λ too large for the strip width");
        for (cx lam : g.eigenvalues) {
            double d = transverse_margin(lam, a, s);
            if (d <= 0) fail(ErrorKind::domain, "Ω intersects spectrum");
            margin = std::min(margin, d);
        }
        // nearest χ pole off the central line: ±2s is one unit from the outer lines
        margin = std::min(margin, std::abs((std::exp(cx(0, -a)) * s).imag()));
    }
    g.spectral_margin = margin;
    if (margin < opt.margin_floor) fail(ErrorKind::domain, "spectral margin below floor");
    return g;
}

// ------------------------------------------------------------------ operator G

// Per-direction precomputation: sampled h̃_l, resolvents (ξ - M)^{-1}, and the x̃ kernels.
struct DirectionContext {
    double alpha = 0.0;  // line direction (for ε = 0 the ray direction)
    cx s = 0.0;
    Side side = Side::plus;
    std::vector<double> offsets;
    std::vector<std::vector<Mat>> resolvent;  // [line][node]
    std::vector<LineFunction> h0;             // per line
    std::map<MultiIndex, LineFunction> hl;    // on the central line
    std::map<MultiIndex, Vec> m_terms, a_terms;
    std::vector<MultiIndex> powers;           // convolution powers needed, sorted by order
    XTilde xt;
    double Lambda = 1.0;
    int m = 1;
};

inline void add_power_chain(const MultiIndex& l, std::vector<MultiIndex>& out) {
    if (l.order() == 0) return;
    for (const auto& q : out)
        if (q == l) return;
    if (l.order() > 1) {
        MultiIndex p = l;
        for (auto& v : p.l)
            if (v > 0) {
                --v;
                break;
            }
        add_power_chain(p, out);
    }
    out.push_back(l);
}

inline DirectionContext make_context(const SystemSpec& spec, const OmegaGrid& g, double alpha, Side side) {
    DirectionContext c;
    c.alpha = alpha;
    c.s = g.s;
    c.side = side;
    c.offsets = g.offsets;
    c.Lambda = g.Lambda;
    c.m = spec.m;
    const bool ray = g.s == cx{};
    // at ε = 0 both sides are the classical ray calculus on their own ray with χ = 1
    const Side kside = ray ? Side::plus : side;
    auto rhs = system_rhs_borel(spec, g.s, kside);
    c.m_terms = rhs.m_terms;
    c.a_terms = rhs.a_terms;
    const Mat M = spec.M_at(g.s * g.s);
    const int m = spec.m;
    auto sample = [&](const ChiPoly& cp, cx base) {
        return make_line_function([&](cx xi) { return cp.eval(xi, alpha); }, base, alpha, g.T, g.n, true, ray);
    };
    ChiPoly empty;
    empty.m = m;
    MultiIndex zero{std::vector<int>(m, 0)};
    const ChiPoly& h0 = rhs.h.count(zero) ? rhs.h.at(zero) : empty;
    for (double tau : c.offsets) {
        cx base = tau * g.s;
        c.h0.push_back(sample(h0, base));
        std::vector<Mat> res;
        const LineFunction& L = c.h0.back();
        for (int j = 0; j < L.n; ++j) {
            cx xi = L.xi(j);
            for (cx lam : g.eigenvalues)
                if (std::abs(xi - lam) < 1e-12) fail(ErrorKind::domain, "singular (ξI - M) on the grid");
            res.push_back((xi * Mat::Identity(m, m) - M).inverse());
        }
        c.resolvent.push_back(std::move(res));
    }
    for (const auto& [l, cp] : rhs.h) {
        if (l.order() == 0) continue;
        c.hl[l] = sample(cp, 0.0);
        add_power_chain(l, c.powers);
    }
    for (const auto& [l, v] : c.m_terms) add_power_chain(l, c.powers);
    for (const auto& [l, v] : c.a_terms) add_power_chain(l, c.powers);
    std::sort(c.powers.begin(), c.powers.end(),
              [](const MultiIndex& a, const MultiIndex& b) { return a.order() < b.order() || (a.order() == b.order() && a < b); });
    if (!c.a_terms.empty()) c.xt = XTilde(kside, g.s, alpha, g.T, g.n);
    return c;
}

inline StripFunction scalar_strip(const StripFunction& S, int comp) {
    StripFunction r = S;
    for (auto& L : r.lines) L = L.component(comp);
    return r;
}

inline StripFunction apply_G(const DirectionContext& c, const StripFunction& phi) {
    const int m = c.m;
    const std::size_t nl = c.offsets.size();
    // convolution powers P_l on every line
    std::map<MultiIndex, StripFunction> P;
    int center = 0;
    for (std::size_t i = 0; i < nl; ++i)
        if (c.offsets[i] == 0.0) center = static_cast<int>(i);
    for (const auto& l : c.powers) {
        int first = -1;
        for (int i = 0; i < m; ++i)
            if (l.l[i] > 0) {
                first = i;
                break;
            }
        if (l.order() == 1) {
            P[l] = scalar_strip(phi, first);
            continue;
        }
        MultiIndex prev = l;
        --prev.l[first];
        const StripFunction& Pp = P.at(prev);
        LineFunction yi = phi.lines[center].component(first);
        StripFunction out = Pp;
        for (std::size_t k = 0; k < nl; ++k) out.lines[k] = convolve(Pp.lines[k], yi);
        P[l] = std::move(out);
    }
    std::map<MultiIndex, StripFunction> XP;
    for (const auto& [l, v] : c.a_terms) XP[l] = c.xt.apply(P.at(l));

    StripFunction out = phi;
    for (std::size_t k = 0; k < nl; ++k) {
        LineFunction acc = c.h0[k];
        for (const auto& [l, v] : c.m_terms) {
            const Mat& p = P.at(l).lines[k].values;
            for (int r = 0; r < m; ++r) acc.values.col(r) += v(r) * p.col(0);
        }
        for (const auto& [l, v] : c.a_terms) {
            const Mat& p = XP.at(l).lines[k].values;
            for (int r = 0; r < m; ++r) acc.values.col(r) += v(r) * p.col(0);
        }
        for (const auto& [l, H] : c.hl) acc.values += convolve(H, P.at(l).lines[k]).values;
        for (int j = 0; j < acc.n; ++j) acc.values.row(j) = (c.resolvent[k][j] * acc.values.row(j).transpose()).transpose();
        acc.fit_tails();
        out.lines[k] = std::move(acc);
    }
    return out;
}

// Weighted sup of the difference over all stored lines, with A = e^{-iα}Λ, B = -πi/s - e^{-iα}Λ.
inline double weighted_sup_diff(const StripFunction& a, const StripFunction& b, double Lambda) {
    double best = 0.0;
    for (std::size_t k = 0; k < a.lines.size(); ++k) {
        const LineFunction& L = a.lines[k];
        cx A = std::exp(cx(0, -L.alpha)) * Lambda;
        bool ray = L.ray;
        cx B = ray ? cx{} : -pi * I / a.s - A;
        for (int j = 0; j < L.n; ++j) {
            cx xi = L.xi(j);
            double w = std::abs(std::exp(-A * xi)) + (ray ? 0.0 : std::abs(std::exp(-B * xi)));
            double d = (L.values.row(j) - b.lines[k].values.row(j)).cwiseAbs().maxCoeff();
            best = std::max(best, d * w);
        }
    }
    return best;
}

struct DirectionSolution {
    double alpha = 0.0;      // direction of the strip (ε ≠ 0) or of the + ray (ε = 0)
    Side side = Side::plus;  // at ε = 0: plus is the ray α, minus the ray α+π
    StripFunction values;    // ỹ⁺ lines (at ε = 0 the classical ray solution)
    int iterations = 0;
    double rate = 0.0;
    double residual = 0.0;
};

struct OmegaSolution {
    OmegaGrid grid;
    std::vector<DirectionSolution> dirs;
    int iterations = 0;
    double contraction_rate = 0.0;
    double residual = 0.0;
    double Lambda_used = 0.0, rho_used = 0.0;
    int retries = 0;
};

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 200;
    int max_retries = 3;
};

namespace detail {

inline DirectionSolution picard(const SystemSpec& spec, const OmegaGrid& g, double ray_alpha, double strip_alpha,
                                Side side, const SolveOptions& opt) {
    DirectionContext c = make_context(spec, g, ray_alpha, side);
    StripFunction zero;
    zero.alpha = ray_alpha;
    zero.s = g.s;
    zero.offsets = g.offsets;
    for (const auto& L : c.h0) zero.lines.push_back(zero_like(L, spec.m, L.base));
    DirectionSolution ds;
    ds.alpha = strip_alpha;
    ds.side = side;
    StripFunction cur = apply_G(c, zero);
    ds.iterations = 1;
    if (!spec.has_unknown_terms()) {
        ds.values = std::move(cur);
        return ds;
    }
    double prev = weighted_sup_diff(cur, zero, g.Lambda);
    int bad = 0;
    for (;;) {
        if (ds.iterations >= opt.max_iter) fail(ErrorKind::convergence, "Picard iteration hit max_iter");
        StripFunction next = apply_G(c, cur);
        ++ds.iterations;
        double d = weighted_sup_diff(next, cur, g.Lambda);
        ds.rate = prev > 0 ? d / prev : 0.0;
        cur = std::move(next);
        if (!std::isfinite(d)) fail(ErrorKind::convergence, "not contractive at this (Λ, ρ)");
        if (d < opt.tol) break;
        bad = ds.rate >= 1.0 ? bad + 1 : 0;
        if (bad >= 3) fail(ErrorKind::convergence, "not contractive at this (Λ, ρ)");
        prev = d;
    }
    ds.residual = weighted_sup_diff(apply_G(c, cur), cur, g.Lambda);
    ds.values = std::move(cur);
    return ds;
}

}  // namespace detail

inline OmegaSolution solve_fixed_point(const SystemSpec& spec, const OmegaGrid& grid0, const SolveOptions& opt = {}) {
    OmegaGrid grid = grid0;
    for (int attempt = 0;; ++attempt) {
        try {
            OmegaSolution sol;
            sol.grid = grid;
            sol.Lambda_used = grid.Lambda;
            sol.rho_used = grid.dr.rho;
            sol.retries = attempt;
            for (double a : grid.alphas) {
                if (grid.s == cx{}) {
                    sol.dirs.push_back(detail::picard(spec, grid, a, a, Side::plus, opt));
                    if (grid.sides == SideSet::both)
                        sol.dirs.push_back(detail::picard(spec, grid, a + pi, a, Side::minus, opt));
                } else {
                    sol.dirs.push_back(detail::picard(spec, grid, a, a, Side::plus, opt));
                }
            }
            for (const auto& d : sol.dirs) {
                sol.iterations = std::max(sol.iterations, d.iterations);
                sol.contraction_rate = std::max(sol.contraction_rate, d.rate);
                sol.residual = std::max(sol.residual, d.residual);
            }
            return sol;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::convergence || std::string(e.what()).find("not contractive") == std::string::npos)
                throw;
            // raise Λ, shrink ρ while the configuration stays admissible
            DirectionRange dr = grid.dr;
            double L = grid.Lambda * 1.25;
            dr.rho *= 0.85;
            bool ok = attempt < opt.max_retries && std::abs(grid.s) < dr.rho && L < lambda_upper(dr);
            if (!ok) {
                std::ostringstream os;
                os << "not contractive at this (Λ, ρ) = (" << grid.Lambda << ", " << grid.dr.rho
                   << "); increase Λ or shrink ρ";
                fail(ErrorKind::convergence, os.str());
            }
            grid.Lambda = L;
            grid.dr = dr;
        }
    }
}

// ỹ⁻ = e^{ξπi/s} ỹ⁺ nodewise.
inline StripFunction conjugate_minus(const StripFunction& plus) {
    if (plus.s == cx{}) fail(ErrorKind::domain, "conjugation needs ε ≠ 0");
    StripFunction r = plus;
    for (auto& L : r.lines) {
        for (int j = 0; j < L.n; ++j) {
            cx f = std::exp(L.xi(j) * pi * I / plus.s);
            L.values.row(j) *= f;
            for (int c = 0; c < L.dim(); ++c)
                if (!finite(L.values(j, c))) fail(ErrorKind::numeric, "overflow in e^{ξπi/s}");
        }
        L.fit_tails();
    }
    return r;
}

// G⁻ data for checking the conjugated fixed point.
inline DirectionContext minus_context(const SystemSpec& spec, const OmegaGrid& g, double alpha) {
    return make_context(spec, g, alpha, Side::minus);
}

// ------------------------------------------------------------------ residue series at x = -s

// Series in w = (x+s)/(x-s) of the local analytic solution at x = -s:
// y = -2s Σ_{k>=1} r_k w^k, using x = -s(1+w)/(1-w), x²-ε = 4s²w/(1-w)², and
// (x²-ε) d/dx = -2s w d/dw.
inline std::vector<Vec> residue_coefficients(const SystemSpec& spec, cx s, int K, double margin = 1e-8) {
    spec.validate();
    if (s == cx{}) fail(ErrorKind::domain, "residue series requires ε ≠ 0");
    if (K < 1) fail(ErrorKind::config, "K must be >= 1");
    const int m = spec.m;
    const cx eps = s * s;
    // Poincaré type: 0 outside the convex hull of Spec M(0)
    {
        auto ev = eigenvalues_of(spec.M[0]);
        bool poincare = false;
        for (int k = 0; k < 720 && !poincare; ++k) {
            cx d = std::exp(cx(0, 2 * pi * k / 720));
            bool all = true;
            for (cx l : ev)
                if ((std::conj(d) * l).real() <= 0) all = false;
            poincare = all;
        }
        if (!poincare) fail(ErrorKind::domain, "Spec M(0) is not of Poincaré type");
    }
    using Ser = std::vector<cx>;
    auto mul = [&](const Ser& a, const Ser& b) {
        Ser r(K + 1, cx{});
        for (int i = 0; i <= K; ++i)
            if (a[i] != cx{})
                for (int j = 0; i + j <= K; ++j) r[i + j] += a[i] * b[j];
        return r;
    };
    Ser xs(K + 1), P(K + 1, cx{});
    // x = -s(1+w)/(1-w) = -s(1 + 2Σ_{k>=1} w^k)
    xs[0] = -s;
    for (int k = 1; k <= K; ++k) xs[k] = -2.0 * s;
    // x²-ε = 4s² Σ k w^k
    for (int k = 1; k <= K; ++k) P[k] = 4.0 * eps * double(k);
    auto power = [&](const Ser& b, int p) {
        Ser r(K + 1, cx{});
        r[0] = 1.0;
        for (int i = 0; i < p; ++i) r = mul(r, b);
        return r;
    };
    std::vector<Ser> u(m, Ser(K + 1, cx{}));
    Mat Mm = spec.M_at(eps);
    Mat A1 = Mat::Zero(m, m);
    for (const auto& t : spec.terms)
        if (t.kind == TermKind::a && t.l.order() == 1) {
            int i = 0;
            while (t.l.l[i] == 0) ++i;
            A1(t.row, i) += t.poly.eval(0.0, eps);
        }
    std::vector<Vec> r;
    for (int k = 1; k <= K; ++k) {
        // f at order k from orders < k (u_k is still zero)
        Vec F = Vec::Zero(m);
        for (const auto& t : spec.terms) {
            Ser term(K + 1, cx{});
            auto px = t.poly.in_x(eps);
            for (std::size_t p = 0; p < px.size(); ++p) {
                if (px[p] == cx{}) continue;
                Ser xp = power(xs, static_cast<int>(p));
                for (int i = 0; i <= K; ++i) term[i] += px[p] * xp[i];
            }
            if (t.kind == TermKind::a) term = mul(term, xs);
            if (t.kind == TermKind::g) term = mul(term, P);
            for (int i = 0; i < m; ++i)
                if (t.l.l[i] > 0) term = mul(term, power(u[i], t.l.l[i]));
            F(t.row) += term[k];
        }
        Mat L = Mm + 2.0 * s * double(k) * Mat::Identity(m, m) - s * A1;
        Eigen::JacobiSVD<Mat> svd(L);
        if (svd.singularValues().minCoeff() < margin) fail(ErrorKind::domain, "resonant ε");
        // -2sk u_k = M u_k + F_k with F_k's a-linear part -s·A₁u_k moved left
        Vec uk = -L.fullPivLu().solve(F);
        for (int i = 0; i < m; ++i) u[i][k] = uk(i);
        r.push_back(-uk / (2.0 * s));
    }
    return r;
}

struct ResidueEval {
    Vec value;
    double remainder_bound;
};

inline ResidueEval residue_series_eval(const std::vector<Vec>& r, const SheetPoint& x, cx s) {
    if (s == cx{}) fail(ErrorKind::domain, "residue series requires ε ≠ 0");
    if (r.empty()) fail(ErrorKind::config, "empty residue sequence");
    cx w = (x.x + s) / (x.x - s);
    const int K = static_cast<int>(r.size());
    // radius from the decay of the last few coefficients
    double ratio = 0.0;
    for (int k = std::max(1, K - 5); k < K; ++k) {
        double a = r[k - 1].cwiseAbs().maxCoeff(), b = r[k].cwiseAbs().maxCoeff();
        if (a > 0) ratio = std::max(ratio, b / a);
    }
    double q = std::abs(w) * std::max(ratio, 1e-300);
    if (q >= 1.0) fail(ErrorKind::domain, "|w| too large for the residue series");
    Vec acc = Vec::Zero(r[0].size());
    cx wk = 1.0;
    for (int k = 0; k < K; ++k) {
        wk *= w;
        acc += r[k] * wk;
    }
    double last = r.back().cwiseAbs().maxCoeff() * std::abs(wk);
    return {-2.0 * s * acc, 2.0 * std::abs(s) * last * q / (1.0 - q)};
}

}  // namespace unfold
