#pragma once

#include "unfold/core.hpp"

#include <algorithm>
#include <map>
#include <optional>

namespace unfold {

// ---------------------------------------------------------------- univariate series

struct PowerSeries1 {
    std::vector<cx> coeffs;  // y_0 .. y_N

    PowerSeries1() = default;
    explicit PowerSeries1(std::vector<cx> c) : coeffs(std::move(c)) {
        for (auto& z : coeffs)
            if (!finite(z)) fail(ErrorKind::config, "non-finite series coefficient");
    }
    int order() const { return static_cast<int>(coeffs.size()) - 1; }
    cx operator[](int k) const { return k >= 0 && k <= order() ? coeffs[k] : cx{}; }
    cx eval(cx x) const {
        cx r = 0.0;
        for (int k = order(); k >= 0; --k) r = r * x + coeffs[k];
        return r;
    }
};

// φ_j = y_{j+1}/j!
inline PowerSeries1 formal_borel(const PowerSeries1& s) {
    if (s.order() < 1) fail(ErrorKind::config, "formal Borel transform needs order >= 1");
    if (s.coeffs[0] != cx{}) fail(ErrorKind::domain, "series must vanish at origin");
    std::vector<cx> phi(s.order());
    double fact = 1.0;
    for (int j = 0; j < s.order(); ++j) {
        if (j > 0) fact *= j;
        phi[j] = s.coeffs[j + 1] / fact;
    }
    return PowerSeries1(std::move(phi));
}

struct GevreyEstimate {
    double c_est = 0.0;
    bool factorial_flag = true;
};

// b_k = |y_k/k!|^{1/k}; a relative growth slope k·b'/b near 1 over the last third signals
// super-factorial growth.
inline GevreyEstimate gevrey_bound(const PowerSeries1& s) {
    int N = s.order();
    if (N < 4) fail(ErrorKind::config, "gevrey_bound needs order >= 4");
    std::vector<double> b(N + 1, 0.0);
    double lf = 0.0;
    GevreyEstimate g;
    for (int k = 1; k <= N; ++k) {
        lf += std::log(double(k));
        double a = std::abs(s.coeffs[k]);
        b[k] = a > 0 ? std::exp((std::log(a) - lf) / k) : 0.0;
        g.c_est = std::max(g.c_est, b[k]);
    }
    int k0 = std::max(1, N - N / 3);
    int cnt = N - k0 + 1;
    if (cnt >= 2) {
        double mk = 0, mb = 0;
        for (int k = k0; k <= N; ++k) mk += k, mb += b[k];
        mk /= cnt, mb /= cnt;
        double sxy = 0, sxx = 0;
        for (int k = k0; k <= N; ++k) sxy += (k - mk) * (b[k] - mb), sxx += (k - mk) * (k - mk);
        double slope = sxx > 0 ? sxy / sxx : 0.0;
        if (mb > 0 && slope * mk / mb > 0.5) g.factorial_flag = false;
    }
    return g;
}

enum class FourierSide { R, L };

// Coefficients of f = Σ a_n w^n with w = (x-s)/(x+s) (R) or (x+s)/(x-s) (L), from the Taylor
// data of f at x = s (R) or x = -s (L). Uses x∓s = ±2s·w/(1-w).
inline std::vector<cx> mobius_fourier_coeffs(const PowerSeries1& taylor, cx s, FourierSide side,
                                             int N) {
    if (s == cx{}) fail(ErrorKind::domain, "Fourier expansion requires ε ≠ 0");
    if (taylor.order() < N) fail(ErrorKind::config, "Taylor data shorter than requested order");
    cx q = side == FourierSide::R ? 2.0 * s : -2.0 * s;
    std::vector<cx> a(N + 1, cx{});
    a[0] = taylor[0];
    for (int n = 1; n <= N; ++n) {
        cx acc = 0.0, qk = 1.0;
        for (int k = 1; k <= n; ++k) {
            qk *= q;
            acc += taylor[k] * qk * binom(n - 1, k - 1);
        }
        a[n] = acc;
    }
    return a;
}

// ---------------------------------------------------------------- system data

struct MultiIndex {
    std::vector<int> l;
    int order() const {
        int s = 0;
        for (int v : l) s += v;
        return s;
    }
    bool operator<(const MultiIndex& o) const { return l < o.l; }
    bool operator==(const MultiIndex& o) const { return l == o.l; }
};

// Polynomial Σ c_{jk} ε^j x^k, stored row-major in ε.
struct Poly2 {
    int eps_degree = 0, x_degree = 0;
    std::vector<cx> coeffs;

    cx at(int k, int j) const {
        if (k < 0 || j < 0 || k > x_degree || j > eps_degree) return 0.0;
        return coeffs[j * (x_degree + 1) + k];
    }
    // Coefficients in x at fixed ε.
    std::vector<cx> in_x(cx eps) const {
        std::vector<cx> c(x_degree + 1, cx{});
        for (int k = 0; k <= x_degree; ++k) {
            cx e = 1.0;
            for (int j = 0; j <= eps_degree; ++j, e *= eps) c[k] += at(k, j) * e;
        }
        return c;
    }
    cx eval(cx x, cx eps) const {
        auto c = in_x(eps);
        cx r = 0.0;
        for (int k = x_degree; k >= 0; --k) r = r * x + c[k];
        return r;
    }
};

enum class TermKind { m, a, g };

struct Term {
    MultiIndex l;
    TermKind kind = TermKind::g;
    int row = 0;  // equation component the polynomial feeds
    Poly2 poly;
};

struct SystemSpec {
    int m = 1;
    std::vector<Mat> M;  // M(ε) = Σ M_j ε^j
    std::vector<Term> terms;
    double L1 = 1.0, Lambda1 = 0.1, rho1 = 1.0;

    Mat M_at(cx eps) const {
        Mat r = Mat::Zero(m, m);
        cx e = 1.0;
        for (const auto& Mj : M) {
            r += e * Mj;
            e *= eps;
        }
        return r;
    }

    void validate(double sv_floor = 1e-10) const {
        if (m < 1) fail(ErrorKind::config, "dimension m must be positive");
        if (M.empty()) fail(ErrorKind::config, "M(ε) needs at least the ε⁰ matrix");
        for (const auto& Mj : M)
            if (Mj.rows() != m || Mj.cols() != m) fail(ErrorKind::config, "M_j has wrong shape");
        for (const auto& t : terms) {
            if (static_cast<int>(t.l.l.size()) != m) fail(ErrorKind::config, "multi-index length != m");
            for (int v : t.l.l)
                if (v < 0) fail(ErrorKind::config, "negative multi-index entry");
            if (t.row < 0 || t.row >= m) fail(ErrorKind::config, "term row out of range");
            int need = (t.poly.eps_degree + 1) * (t.poly.x_degree + 1);
            if (static_cast<int>(t.poly.coeffs.size()) != need)
                fail(ErrorKind::config, "polynomial coefficient count mismatch");
            for (auto z : t.poly.coeffs)
                if (!finite(z)) fail(ErrorKind::config, "non-finite polynomial coefficient");
            if (t.kind == TermKind::m && t.l.order() < 2) fail(ErrorKind::config, "m-terms need |l| >= 2");
            if (t.kind == TermKind::a && t.l.order() < 1) fail(ErrorKind::config, "a-terms need |l| >= 1");
            if (t.kind != TermKind::g && t.poly.x_degree != 0)
                fail(ErrorKind::config, "m- and a-terms are polynomials in ε only");
        }
        Eigen::JacobiSVD<Mat> svd(M[0]);
        if (svd.singularValues().minCoeff() <= sv_floor)
            fail(ErrorKind::config, "M(0) is singular below the floor");
    }

    // Vector coefficients at fixed ε: m_l, a_l.
    std::map<MultiIndex, Vec> const_terms(TermKind kind, cx eps) const {
        std::map<MultiIndex, Vec> out;
        for (const auto& t : terms) {
            if (t.kind != kind) continue;
            auto it = out.try_emplace(t.l, Vec::Zero(m)).first;
            it->second(t.row) += t.poly.eval(0.0, eps);
        }
        return out;
    }

    // g_l(x, ε) at fixed ε as vector polynomials in x: result[l][k] ∈ ℂ^m.
    std::map<MultiIndex, std::vector<Vec>> g_terms(cx eps) const {
        std::map<MultiIndex, std::vector<Vec>> out;
        for (const auto& t : terms) {
            if (t.kind != TermKind::g) continue;
            auto& v = out[t.l];
            auto c = t.poly.in_x(eps);
            if (v.size() < c.size()) v.resize(c.size(), Vec::Zero(m));
            for (std::size_t k = 0; k < c.size(); ++k) v[k](t.row) += c[k];
        }
        return out;
    }

    // Whether G depends on its argument (any term with |l| >= 1).
    bool has_unknown_terms() const {
        for (const auto& t : terms)
            if (t.l.order() >= 1) return true;
        return false;
    }
};

inline cx monomial(const Vec& y, const MultiIndex& l) {
    cx r = 1.0;
    for (int i = 0; i < static_cast<int>(l.l.size()); ++i)
        for (int p = 0; p < l.l[i]; ++p) r *= y(i);
    return r;
}

// f(x, y, ε) = Σ m_l y^l + x Σ a_l y^l + (x²-ε) Σ g_l(x,ε) y^l
inline Vec system_f(const SystemSpec& spec, cx x, const Vec& y, cx eps) {
    Vec f = Vec::Zero(spec.m);
    for (const auto& t : spec.terms) {
        cx c = t.poly.eval(x, eps) * monomial(y, t.l);
        if (t.kind == TermKind::a) c *= x;
        if (t.kind == TermKind::g) c *= (x * x - eps);
        f(t.row) += c;
    }
    return f;
}

// ---------------------------------------------------------------- bivariate series

// Scalar series on the triangle k+j <= N (k: power of x, j: power of ε).
class TriSeries {
public:
    explicit TriSeries(int N = 0) : N_(N), c_((N + 1) * (N + 2) / 2, cx{}) {}
    int order() const { return N_; }
    static int index(int k, int j) {
        int n = k + j;
        return n * (n + 1) / 2 + j;
    }
    cx get(int k, int j) const {
        if (k < 0 || j < 0 || k + j > N_) return 0.0;
        return c_[index(k, j)];
    }
    void set(int k, int j, cx v) { c_[index(k, j)] = v; }
    void add(int k, int j, cx v) {
        if (k >= 0 && j >= 0 && k + j <= N_) c_[index(k, j)] += v;
    }
    TriSeries operator*(const TriSeries& o) const {
        TriSeries r(N_);
        for (int n1 = 0; n1 <= N_; ++n1)
            for (int j1 = 0; j1 <= n1; ++j1) {
                cx a = get(n1 - j1, j1);
                if (a == cx{}) continue;
                for (int n2 = 0; n1 + n2 <= N_; ++n2)
                    for (int j2 = 0; j2 <= n2; ++j2) {
                        cx b = o.get(n2 - j2, j2);
                        if (b != cx{}) r.add(n1 - j1 + n2 - j2, j1 + j2, a * b);
                    }
            }
        return r;
    }
    TriSeries& operator+=(const TriSeries& o) {
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    TriSeries scaled(cx a) const {
        TriSeries r = *this;
        for (auto& v : r.c_) v *= a;
        return r;
    }

private:
    int N_;
    std::vector<cx> c_;
};

struct PowerSeries2 {
    int dim = 1, order = 0;
    std::vector<Vec> coeffs;  // indexed by TriSeries::index(k, j)

    const Vec& at(int k, int j) const { return coeffs[TriSeries::index(k, j)]; }
};

// ŷ = (x²-ε) Σ y_{kj} x^k ε^j; order by k+j, then by j.
inline PowerSeries2 formal_solution(const SystemSpec& spec, int N, double sv_floor = 1e-10) {
    spec.validate(sv_floor);
    if (N < 0) fail(ErrorKind::config, "order N must be >= 0");
    const int m = spec.m;
    Eigen::FullPivLU<Mat> lu(spec.M[0]);

    std::vector<TriSeries> Y(m, TriSeries(N));
    TriSeries P(N);  // x² - ε
    P.add(2, 0, 1.0);
    P.add(0, 1, -1.0);

    auto power = [&](const TriSeries& base, int p) {
        TriSeries r(N);
        r.set(0, 0, 1.0);
        for (int i = 0; i < p; ++i) r = r * base;
        return r;
    };

    auto rhs_series = [&]() {
        std::vector<TriSeries> F(m, TriSeries(N));
        for (const auto& t : spec.terms) {
            TriSeries term(N);
            for (int j = 0; j <= t.poly.eps_degree; ++j)
                for (int k = 0; k <= t.poly.x_degree; ++k) term.add(k, j, t.poly.at(k, j));
            int L = t.l.order();
            int pexp = t.kind == TermKind::g ? L : L - 1;
            if (pexp > 0) term = term * power(P, pexp);
            if (t.kind == TermKind::a) {
                TriSeries xs(N);
                xs.add(1, 0, 1.0);
                term = term * xs;
            }
            for (int i = 0; i < m; ++i)
                if (t.l.l[i] > 0) term = term * power(Y[i], t.l.l[i]);
            F[t.row] += term;
        }
        return F;
    };

    PowerSeries2 out;
    out.dim = m;
    out.order = N;
    out.coeffs.assign((N + 1) * (N + 2) / 2, Vec::Zero(m));

    for (int n = 0; n <= N; ++n) {
        auto F = rhs_series();  // depends only on orders < n
        for (int j = 0; j <= n; ++j) {
            int k = n - j;
            Vec rhs(m);
            for (int i = 0; i < m; ++i)
                rhs(i) = double(k + 1) * (Y[i].get(k - 1, j) - Y[i].get(k + 1, j - 1)) - F[i].get(k, j);
            for (std::size_t q = 1; q < spec.M.size(); ++q) {
                if (j - int(q) < 0) break;
                Vec prev(m);
                for (int i = 0; i < m; ++i) prev(i) = Y[i].get(k, j - int(q));
                rhs -= spec.M[q] * prev;
            }
            Vec y = lu.solve(rhs);
            for (int i = 0; i < m; ++i) Y[i].set(k, j, y(i));
            out.coeffs[TriSeries::index(k, j)] = y;
        }
    }
    return out;
}

inline Vec eval_truncated(const PowerSeries2& s, cx x, cx eps) {
    Vec acc = Vec::Zero(s.dim);
    for (int n = 0; n <= s.order; ++n)
        for (int j = 0; j <= n; ++j) acc += s.at(n - j, j) * (std::pow(x, n - j) * std::pow(eps, j));
    return (x * x - eps) * acc;
}

}  // namespace unfold
