#pragma once

#include "unfold/core.hpp"

#include <algorithm>
#include <optional>

namespace unfold {

struct DirectionRange {
    double beta1 = pi / 4, beta2 = 3 * pi / 4;
    double eta = pi / 12;
    double rho = 0.15;

    void validate() const {
        if (!(beta1 < beta2)) fail(ErrorKind::config, "β₁ < β₂ required");
        if (!(eta > 0 && eta < (beta2 - beta1) / 2)) fail(ErrorKind::config, "0 < η < (β₂-β₁)/2 required");
        if ((beta2 - beta1) / 2 > pi / 2 + 1e-15) fail(ErrorKind::config, "(β₂-β₁)/2 <= π/2 required");
        if (!(rho > 0)) fail(ErrorKind::config, "ρ must be positive");
    }
};

struct SheetPoint {
    cx x;
    int sheet = 0;
};

struct Interval {
    double lo = 0, hi = 0;
    bool empty() const { return !(lo < hi); }
    double mid() const { return 0.5 * (lo + hi); }
};

inline constexpr double membership_margin = 1e-9;

// Width of the t-strip in direction α: W = -Re(e^{iα}πi/s).
inline double strip_width(double alpha, cx s) {
    return -(std::exp(cx(0, alpha)) * pi * I / s).real();
}

inline bool on_cut(cx x, cx s) {
    // x ∈ [-s, s]  ⇔  x/s real in [-1, 1]
    cx r = x / s;
    return std::abs(r.imag()) <= 1e-14 * std::max(1.0, std::abs(r)) && std::abs(r.real()) <= 1.0;
}

// Principal-sheet time without the cut check; on the segment the principal Log gives the boundary
// value from the side where arg((x-s)/(x+s)) = π.
inline cx time_principal(cx x, cx s) {
    if (s == cx{}) return 1.0 / x;
    cx q = (x - s) / (x + s);
    if (q.imag() == 0.0 && q.real() < 0) q = cx(q.real(), +0.0);
    return -std::log(q) / (2.0 * s);
}

inline cx time_coord(const SheetPoint& p, cx s) {
    if (s == cx{}) {
        if (p.x == cx{}) fail(ErrorKind::domain, "t undefined at x = 0 for ε = 0");
        return 1.0 / p.x;
    }
    if (on_cut(p.x, s)) fail(ErrorKind::domain, "on cut");
    return time_principal(p.x, s) + double(p.sheet) * pi * I / s;
}

inline SheetPoint inverse_time(cx t, cx s) {
    if (s == cx{}) {
        if (t == cx{}) fail(ErrorKind::domain, "x undefined at t = 0 for ε = 0");
        return {1.0 / t, 0};
    }
    cx z = -2.0 * s * t;
    cx x;
    if (z.real() <= 0) {
        cx e = std::exp(z);
        if (std::abs(1.0 - e) < 1e-14) fail(ErrorKind::domain, "t at a pole of the inverse map");
        x = s * (1.0 + e) / (1.0 - e);
    } else {
        cx q = std::exp(-z);
        if (std::abs(1.0 - q) < 1e-14) fail(ErrorKind::domain, "t at a pole of the inverse map");
        x = -s * (1.0 + q) / (1.0 - q);
    }
    cx t0 = time_principal(x, s);
    int k = static_cast<int>(std::lround(((t - t0) * s / (pi * I)).real()));
    return {x, k};
}

// dx/dt = -(x²-ε)
inline cx dx_dt(cx x, cx s) { return -(x * x - s * s); }

// Branch of arg s inside the sector S = (β₁-π+η, β₂-η).
inline std::optional<double> sector_arg(cx s, const DirectionRange& dr) {
    double lo = dr.beta1 - pi + dr.eta, hi = dr.beta2 - dr.eta;
    double th = arg_near(s, 0.5 * (lo + hi));
    if (th > lo && th < hi) return th;
    return std::nullopt;
}

inline bool in_sector(cx s, const DirectionRange& dr) {
    if (s == cx{}) return true;
    return std::abs(s) < dr.rho && sector_arg(s, dr).has_value();
}

inline Interval admissible_alphas(cx s, const DirectionRange& dr) {
    dr.validate();
    if (s == cx{}) return {dr.beta1, dr.beta2};
    if (!in_sector(s, dr)) fail(ErrorKind::domain, "√ε outside the sector S");
    double th = *sector_arg(s, dr);
    return {std::max(th + dr.eta, dr.beta1), std::min(dr.beta2, th + pi - dr.eta)};
}

// Re(e^{iα}t) for the lift of x into the + strip (r ∈ [0, W)) or the - strip (r ∈ [-W, 0)).
struct StripLift {
    cx t;
    int sheet;
    double r;
};

inline StripLift lift_to_strip(cx x, Side side, double alpha, cx s) {
    cx e = std::exp(cx(0, alpha));
    cx t0 = time_principal(x, s);
    double W = strip_width(alpha, s);
    double r0 = (e * t0).real();
    int k = static_cast<int>(std::floor(r0 / W));
    if (side == Side::minus) k += 1;
    cx t = t0 + double(k) * pi * I / s;
    return {t, k, (e * t).real()};
}

inline void check_strip_pre(double alpha, double Lambda, cx s) {
    if (Lambda < 0) fail(ErrorKind::domain, "Λ must be >= 0");
    if (s != cx{} && !(2 * Lambda < strip_width(alpha, s)))
        fail(ErrorKind::domain, "strip empty: 2Λ >= -Re(e^{iα}πi/s)");
}

// Signed distance of Re(e^{iα}t) to the nearer boundary of the side's strip (positive inside).
inline double strip_margin(double r, Side side, double alpha, double Lambda, cx s) {
    if (s == cx{}) return side == Side::plus ? r - Lambda : -Lambda - r;
    double W = strip_width(alpha, s);
    if (side == Side::plus) return std::min(r - Lambda, W - Lambda - r);
    return std::min(r + W - Lambda, -Lambda - r);
}

inline bool x_strip_contains(const SheetPoint& p, Side side, double alpha, double Lambda, cx s) {
    check_strip_pre(alpha, Lambda, s);
    cx t;
    if (s == cx{}) {
        if (p.x == cx{}) return false;
        t = 1.0 / p.x;
    } else {
        t = time_principal(p.x, s) + double(p.sheet) * pi * I / s;
    }
    double r = (std::exp(cx(0, alpha)) * t).real();
    return strip_margin(r, side, alpha, Lambda, s) > membership_margin;
}

// Transverse lattice coordinate τ with ξ ∈ τs + e^{iα}ℝ.
inline double strip_offset(cx xi, double alpha, cx s) {
    cx e = std::exp(cx(0, -alpha));
    return (e * xi).imag() / (e * s).imag();
}

inline std::vector<double> alpha_scan(const Interval& iv, int count = 181) {
    std::vector<double> a;
    for (int i = 1; i <= count; ++i) a.push_back(iv.lo + (iv.hi - iv.lo) * i / (count + 1));
    return a;
}

inline bool omega_alpha_contains(cx xi, double alpha, cx s) {
    if (s == cx{}) return std::abs((std::exp(cx(0, -alpha)) * xi).imag()) <= membership_margin;
    return std::abs(strip_offset(xi, alpha, s)) <= 1.5 + membership_margin;
}

inline bool omega_contains(cx xi, cx s, const DirectionRange& dr) {
    if (s != cx{} && !in_sector(s, dr)) fail(ErrorKind::domain, "√ε outside the sector S");
    auto iv = admissible_alphas(s, dr);
    if (iv.empty()) return false;
    if (xi == cx{}) return true;
    for (double a : alpha_scan(iv))
        if (omega_alpha_contains(xi, a, s)) return true;
    return false;
}

enum class Membership { inside, outside, adherent };

inline Membership z_membership(const SheetPoint& p, cx s, double Lambda, const DirectionRange& dr) {
    if (s != cx{} && (p.x == s || p.x == -s)) return Membership::adherent;
    if (s == cx{} && p.x == cx{}) return Membership::adherent;
    auto iv = admissible_alphas(s, dr);
    if (iv.empty()) return Membership::outside;
    for (double a : alpha_scan(iv)) {
        if (s != cx{} && !(2 * Lambda < strip_width(a, s))) continue;
        for (Side side : {Side::plus, Side::minus}) {
            if (s == cx{}) {
                if (x_strip_contains(p, side, a, Lambda, s)) return Membership::inside;
                continue;
            }
            if (on_cut(p.x, s) && std::abs(p.x) == std::abs(s)) continue;
            auto L = lift_to_strip(p.x, side, a, s);
            if (strip_margin(L.r, side, a, Lambda, s) > membership_margin) return Membership::inside;
        }
    }
    return Membership::outside;
}

inline bool z_contains(const SheetPoint& p, cx s, double Lambda, const DirectionRange& dr) {
    return z_membership(p, s, Lambda, dr) == Membership::inside;
}

// Points x(t_j) with t_j = e^{-iα}(C + i u_j), u_j uniform on [-T, T].
inline std::vector<SheetPoint> path_gamma(Side side, double alpha, cx s, double C, double T, int n) {
    if (n < 2) fail(ErrorKind::config, "path needs n >= 2");
    if (s == cx{}) {
        if (side == Side::plus ? !(C > 0) : !(C < 0)) fail(ErrorKind::domain, "C outside strip");
    } else {
        double W = strip_width(alpha, s);
        bool ok = side == Side::plus ? (C > 0 && C < W) : (C > -W && C < 0);
        if (!ok) fail(ErrorKind::domain, "C outside strip");
    }
    std::vector<SheetPoint> out;
    cx e = std::exp(cx(0, -alpha));
    for (int j = 0; j < n; ++j) {
        double u = -T + 2 * T * j / (n - 1);
        out.push_back(inverse_time(e * cx(C, u), s));
    }
    return out;
}

}  // namespace unfold
