#pragma once

#include "unfold/solver.hpp"

#include <optional>

namespace unfold {

// ------------------------------------------------------------------ synthesis of y(x, √ε)

struct EvalChoice {
    int dir = -1;
    Side side = Side::plus;
    cx t = 0.0;
    double margin = -std::numeric_limits<double>::infinity();
};

// Time coordinate of x for direction k and side, with its strip margin.
inline EvalChoice evaluation_choice(const OmegaSolution& sol, int k, Side side, const SheetPoint& x) {
    const cx s = sol.grid.s;
    const auto& d = sol.dirs[k];
    EvalChoice c;
    c.dir = k;
    c.side = side;
    if (s == cx{}) {
        if (x.x == cx{}) return c;
        c.t = 1.0 / x.x;
        double a = d.values.lines[0].alpha;
        c.margin = (std::exp(cx(0, a)) * c.t).real() - sol.grid.Lambda;
        return c;
    }
    if (on_cut(x.x, s) && std::abs(x.x) == std::abs(s)) return c;
    auto lift = lift_to_strip(x.x, side, d.alpha, s);
    c.t = lift.t;
    c.margin = strip_margin(lift.r, side, d.alpha, sol.grid.Lambda, s);
    return c;
}

inline EvalChoice choose_evaluation(const OmegaSolution& sol, const SheetPoint& x) {
    EvalChoice best;
    const double mid = sol.grid.interval.mid();
    for (int k = 0; k < static_cast<int>(sol.dirs.size()); ++k) {
        std::vector<Side> sides{Side::plus};
        if (sol.grid.s != cx{}) sides.push_back(Side::minus);
        for (Side side : sides) {
            EvalChoice c = evaluation_choice(sol, k, side, x);
            bool better = c.margin > best.margin + 1e-12;
            bool tie = std::abs(c.margin - best.margin) <= 1e-12 && best.dir >= 0 &&
                       std::abs(sol.dirs[k].alpha - mid) < std::abs(sol.dirs[best.dir].alpha - mid);
            if (better || tie) best = c;
        }
    }
    if (best.dir < 0 || !(best.margin > membership_margin)) fail(ErrorKind::domain, "x outside Z(√ε)");
    return best;
}

// L[ỹ±] at a time value t for direction k.
inline Vec solution_at_time(const OmegaSolution& sol, int k, Side side, cx t) {
    const cx s = sol.grid.s;
    const LineFunction& L = sol.dirs[k].values.line(0.0);
    cx tl = (s != cx{} && side == Side::minus) ? t - pi * I / s : t;
    return laplace_line(L, tl);
}

inline Vec center_manifold_eval(const OmegaSolution& sol, const SheetPoint& x) {
    EvalChoice c = choose_evaluation(sol, x);
    return solution_at_time(sol, c.dir, c.side, c.t);
}

using VecEval = std::function<Vec(cx)>;

// y evaluated with the (α, side) chosen at a reference point, so nearby stencils stay on one branch.
inline VecEval fixed_branch_evaluator(const OmegaSolution& sol, const EvalChoice& c) {
    return [&sol, c](cx x) {
        EvalChoice e = evaluation_choice(sol, c.dir, c.side, {x, 0});
        if (!(e.margin > 0)) fail(ErrorKind::domain, "x outside the chosen strip");
        return solution_at_time(sol, c.dir, c.side, e.t);
    };
}

// |(x²-ε)y' - M y - f| with a Richardson-extrapolated central difference along e^{iθ}.
inline double ode_residual(const SystemSpec& spec, const VecEval& y, cx x, cx s, double h, double theta = 0.0) {
    if (!(h > 0)) fail(ErrorKind::config, "step h must be positive");
    const cx eps = s * s;
    const cx e = std::exp(cx(0, theta));
    auto central = [&](double hh) -> Vec { return (y(x + hh * e) - y(x - hh * e)) / (2.0 * hh * e); };
    Vec d1, d2, y0;
    try {
        d1 = central(h);
        d2 = central(h / 2);
        y0 = y(x);
    } catch (const Error& err) {
        fail(ErrorKind::domain, std::string("stencil exits domain: ") + err.what());
    }
    Vec dy = (4.0 * d2 - d1) / 3.0;
    Vec r = (x * x - eps) * dy - spec.M_at(eps) * y0 - system_f(spec, x, y0, eps);
    return max_abs(r);
}

// ------------------------------------------------------------------ confluence

struct ConfluenceRow {
    double nu = 0.0;
    cx x = 0.0;
    double abs_diff = 0.0;
    bool skipped = false;
};

struct ConfluenceOptions {
    double Lambda = 0.5;
    GridOptions grid;
    SolveOptions solve;
    double refine = 0.25;  // line step at most refine·|s|·sin γ
};

// Rows (ν, x, |y(x, ν s₀) - y(x, 0)|). ν = 0 rows are 0 by construction.
inline std::vector<ConfluenceRow> confluence_table(const SystemSpec& spec, const DirectionRange& dr, cx s0,
                                                   const std::vector<double>& nus, const std::vector<cx>& xs,
                                                   const ConfluenceOptions& opt = {}) {
    GridOptions g0 = opt.grid;
    g0.sides = SideSet::both;
    OmegaSolution base = solve_fixed_point(spec, build_omega_grid(spec, 0.0, dr, opt.Lambda, g0), opt.solve);
    std::vector<std::optional<Vec>> y0(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        try {
            y0[i] = center_manifold_eval(base, {xs[i], 0});
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::domain) throw;
        }
    }
    std::vector<ConfluenceRow> rows;
    for (double nu : nus) {
        std::optional<OmegaSolution> sol;
        cx s = nu * s0;
        if (nu != 0.0) {
            GridOptions g = opt.grid;
            Interval iv = admissible_alphas(s, dr);
            double gmin = std::numeric_limits<double>::infinity();
            for (int i = 0; i < g.directions; ++i) {
                double a = iv.lo + (i + 1) * (iv.hi - iv.lo) / (g.directions + 1);
                gmin = std::min(gmin, std::abs(std::sin(a - std::arg(s))));
            }
            double hmax = opt.refine * std::abs(s) * gmin;
            int n = static_cast<int>(std::ceil(2 * g.T / hmax)) + 1;
            if (n % 2 == 0) ++n;
            g.n = std::max(g.n, n);
            sol = solve_fixed_point(spec, build_omega_grid(spec, s, dr, opt.Lambda, g), opt.solve);
        }
        for (std::size_t i = 0; i < xs.size(); ++i) {
            ConfluenceRow r{nu, xs[i], 0.0, false};
            if (!y0[i]) {
                r.skipped = true;
            } else if (sol) {
                try {
                    r.abs_diff = max_abs(center_manifold_eval(*sol, {xs[i], 0}) - *y0[i]);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::domain) throw;
                    r.skipped = true;
                }
            }
            rows.push_back(r);
        }
    }
    return rows;
}

// ------------------------------------------------------------------ linear-system normalization

// (x²-ε)Y' = (Λ(x,ε) + (x²-ε)R(x,ε))Y with Λ = Diag(λ⁰_i(ε) + x λ¹_i(ε)).
struct LinearSystemSpec {
    int n = 2;
    std::vector<std::vector<cx>> lambda0, lambda1;  // per i, ascending in ε
    std::vector<std::vector<Poly2>> R;              // n × n

    static cx peval(const std::vector<cx>& p, cx eps) {
        cx r = 0.0, e = 1.0;
        for (cx c : p) {
            r += c * e;
            e *= eps;
        }
        return r;
    }
    void validate() const {
        if (n < 2) fail(ErrorKind::config, "linear system needs n >= 2");
        if (static_cast<int>(lambda0.size()) != n || static_cast<int>(lambda1.size()) != n)
            fail(ErrorKind::config, "λ⁰ and λ¹ need n entries");
        if (static_cast<int>(R.size()) != n) fail(ErrorKind::config, "R needs n rows");
        for (const auto& row : R)
            if (static_cast<int>(row.size()) != n) fail(ErrorKind::config, "R needs n columns");
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (std::abs(peval(lambda0[i], 0.0) - peval(lambda0[j], 0.0)) < 1e-8)
                    fail(ErrorKind::config, "coalescing leading eigenvalues λ⁰_i(0)");
    }
    Mat Lambda_at(cx x, cx eps) const {
        Mat L = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) L(i, i) = peval(lambda0[i], eps) + x * peval(lambda1[i], eps);
        return L;
    }
    Mat R_at(cx x, cx eps) const {
        Mat r(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r(i, j) = R[i][j].coeffs.empty() ? cx{} : R[i][j].eval(x, eps);
        return r;
    }
    Mat A_at(cx x, cx eps) const { return Lambda_at(x, eps) + (x * x - eps) * R_at(x, eps); }
};

// Position of u_ij (i ≠ j) in lexicographic order.
inline int pair_index(int n, int i, int j) { return i * (n - 1) + (j < i ? j : j - 1); }

inline Mat unpack_U(int n, const Vec& u) {
    Mat U = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) U(i, j) = u(pair_index(n, i, j));
    return U;
}

inline SystemSpec riccati_reduce(const LinearSystemSpec& lin) {
    lin.validate();
    const int n = lin.n, m = n * (n - 1);
    SystemSpec spec;
    spec.m = m;
    std::size_t deg0 = 0;
    for (const auto& p : lin.lambda0) deg0 = std::max(deg0, p.size());
    spec.M.assign(std::max<std::size_t>(deg0, 1), Mat::Zero(m, m));
    auto coef = [](const std::vector<cx>& p, std::size_t j) { return j < p.size() ? p[j] : cx{}; };
    auto unit = [&](int idx) {
        MultiIndex l{std::vector<int>(m, 0)};
        if (idx >= 0) ++l.l[idx];
        return l;
    };
    auto nonzero = [](const Poly2& p) {
        for (cx c : p.coeffs)
            if (c != cx{}) return true;
        return false;
    };
    auto neg = [](Poly2 p) {
        for (auto& c : p.coeffs) c = -c;
        return p;
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const int r = pair_index(n, i, j);
            for (std::size_t d = 0; d < spec.M.size(); ++d)
                spec.M[d](r, r) = coef(lin.lambda0[i], d) - coef(lin.lambda0[j], d);
            // x(λ¹_i - λ¹_j) u_ij
            std::size_t d1 = std::max(lin.lambda1[i].size(), lin.lambda1[j].size());
            if (d1 > 0) {
                Poly2 p{static_cast<int>(d1) - 1, 0, std::vector<cx>(d1, cx{})};
                for (std::size_t d = 0; d < d1; ++d) p.coeffs[d] = coef(lin.lambda1[i], d) - coef(lin.lambda1[j], d);
                if (nonzero(p)) spec.terms.push_back({unit(r), TermKind::a, r, p});
            }
            // r_ij + Σ_{k≠j} r_ik u_kj - u_ij r_jj - u_ij Σ_{k≠j} r_jk u_kj
            if (nonzero(lin.R[i][j])) spec.terms.push_back({unit(-1), TermKind::g, r, lin.R[i][j]});
            for (int k = 0; k < n; ++k) {
                if (k == j || !nonzero(lin.R[i][k])) continue;
                spec.terms.push_back({unit(pair_index(n, k, j)), TermKind::g, r, lin.R[i][k]});
            }
            if (nonzero(lin.R[j][j])) spec.terms.push_back({unit(r), TermKind::g, r, neg(lin.R[j][j])});
            for (int k = 0; k < n; ++k) {
                if (k == j || !nonzero(lin.R[j][k])) continue;
                MultiIndex l = unit(r);
                ++l.l[pair_index(n, k, j)];
                spec.terms.push_back({l, TermKind::g, r, neg(lin.R[j][k])});
            }
        }
    spec.validate();
    return spec;
}

struct TOptions {
    int panels_per_unit = 1;  // Gauss-20 panels per 1/rate of the decay
    double decay_lengths = 32.0;
};

// T = (I + U)·T_D at time t of direction k, with T_D = exp(∫_{√ε}^x D), D = diag R(I+U).
// The path runs from x(t) to √ε along t + i e^{-iα} v, v ∈ [0, ∞), inside the strip.
inline Mat assemble_T_at_time(const LinearSystemSpec& lin, const OmegaSolution& sol, int k, Side side, cx t,
                              const TOptions& opt = {}) {
    const cx s = sol.grid.s;
    if (s == cx{}) fail(ErrorKind::domain, "normalization path requires ε ≠ 0");
    const int n = lin.n;
    const cx eps = s * s;
    const double alpha = sol.dirs[k].alpha;
    const cx dir = I * std::exp(cx(0, -alpha));
    const double rate = 2 * std::abs(s) * std::abs(std::sin(alpha - std::arg(s)));
    const double V = opt.decay_lengths / rate;
    const int np = std::max(8, static_cast<int>(std::ceil(opt.decay_lengths * opt.panels_per_unit / 2)));
    auto x_of = [&](cx tt) { return inverse_time(tt, s).x; };
    auto Dvec = [&](cx tt) -> Vec {
        cx x = x_of(tt);
        Mat U = unpack_U(n, solution_at_time(sol, k, side, tt));
        Mat RU = lin.R_at(x, eps) * (Mat::Identity(n, n) + U);
        return RU.diagonal() * (x * x - eps);
    };
    Vec integral = Vec::Zero(n);
    {
        const auto& g = quad::gauss20();
        for (int p = 0; p < np; ++p) {
            double a = V * p / np, b = V * (p + 1) / np;
            double c = 0.5 * (a + b), r = 0.5 * (b - a);
            for (std::size_t i = 0; i < g.x.size(); ++i) integral += (g.w[i] * r) * Dvec(t + dir * (c + r * g.x[i]));
        }
    }
    integral *= dir;
    Mat TD = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) TD(i, i) = std::exp(integral(i));
    Mat U = unpack_U(n, solution_at_time(sol, k, side, t));
    return (Mat::Identity(n, n) + U) * TD;
}

// T at x, using the best (α, side) for x; x = √ε returns I.
inline Mat assemble_T(const LinearSystemSpec& lin, const OmegaSolution& sol, const SheetPoint& x,
                      const TOptions& opt = {}) {
    if (x.x == sol.grid.s) return Mat::Identity(lin.n, lin.n);
    EvalChoice c = choose_evaluation(sol, x);
    return assemble_T_at_time(lin, sol, c.dir, c.side, c.t, opt);
}

using MatEval = std::function<Mat(cx)>;

inline MatEval fixed_branch_T(const LinearSystemSpec& lin, const OmegaSolution& sol, const EvalChoice& c,
                              const TOptions& opt = {}) {
    return [&lin, &sol, c, opt](cx x) {
        if (x == sol.grid.s) return Mat(Mat::Identity(lin.n, lin.n));
        EvalChoice e = evaluation_choice(sol, c.dir, c.side, {x, 0});
        if (!(e.margin > 0)) fail(ErrorKind::domain, "x outside the chosen strip");
        return assemble_T_at_time(lin, sol, c.dir, c.side, e.t, opt);
    };
}

// (x²-ε)T' - A T + T Λ with a Richardson central difference along e^{iθ}.
inline Mat normalization_residual_matrix(const LinearSystemSpec& lin, const MatEval& T, cx x, cx s, double h,
                                         double theta = 0.0) {
    if (!(h > 0)) fail(ErrorKind::config, "step h must be positive");
    const cx eps = s * s;
    const cx e = std::exp(cx(0, theta));
    auto central = [&](double hh) -> Mat { return (T(x + hh * e) - T(x - hh * e)) / (2.0 * hh * e); };
    Mat d1, d2, T0;
    try {
        d1 = central(h);
        d2 = central(h / 2);
        T0 = T(x);
    } catch (const Error& err) {
        fail(ErrorKind::domain, std::string("stencil exits domain: ") + err.what());
    }
    Mat dT = (4.0 * d2 - d1) / 3.0;
    return (x * x - eps) * dT - lin.A_at(x, eps) * T0 + T0 * lin.Lambda_at(x, eps);
}

// Max-abs-entry norm of the residual matrix.
inline double normalization_residual(const LinearSystemSpec& lin, const MatEval& T, cx x, cx s, double h,
                                     double theta = 0.0) {
    return normalization_residual_matrix(lin, T, x, s, h, theta).cwiseAbs().maxCoeff();
}

}  // namespace unfold
