#pragma once

#include "unfold/core.hpp"

namespace unfold {

// z / (e^z - 1), finite at z = 0.
inline cx z_over_expm1(cx z) {
    if (std::abs(z) < 1e-4) return 1.0 - z / 2.0 + z * z / 12.0;
    return z / (std::exp(z) - 1.0);
}

inline void check_chi_pole(cx xi, cx s) {
    cx z = xi / (2.0 * s);
    double k = std::round(z.real());
    if (std::abs(xi - 2.0 * s * k) < 1e-12) fail(ErrorKind::domain, "χ pole");
}

// χ⁺(ξ) = 1/(1 - e^{ξπi/s}), evaluated without overflow on both sides of the strip.
inline cx chi_plus(cx xi, cx s) {
    check_chi_pole(xi, s);
    cx e = xi * pi * I / s;
    if (e.real() <= 0) return 1.0 / (1.0 - std::exp(e));
    cx q = std::exp(-e);
    return -q / (1.0 - q);
}

// Position of ξ along the ray e^{iα}ℝ: 1 on the positive half, ½ at 0, 0 on the negative half.
inline cx chi_plus_ray(cx xi, double alpha) {
    double u = (xi * std::exp(cx(0, -alpha))).real();
    if (u > 0) return 1.0;
    if (u < 0) return 0.0;
    return 0.5;
}

inline cx chi_eval(cx xi, Side side, cx s, double alpha) {
    if (s == cx{}) {
        cx c = chi_plus_ray(xi, alpha);
        return side == Side::plus ? c : c - 1.0;
    }
    cx c = chi_plus(xi, s);
    if (side == Side::plus) return c;
    // χ⁻ = χ⁺ - 1 = e^{ξπi/s} χ⁺
    cx e = xi * pi * I / s;
    if (e.real() <= 0) return std::exp(e) * c;
    return c - 1.0;
}

// ξ·χ⁺(ξ) with the removable singularity at ξ = 0 handled.
inline cx xi_chi_plus(cx xi, cx s) {
    cx z = xi * pi * I / s;
    if (std::abs(z) < 0.5) return -(s / (pi * I)) * z_over_expm1(z);
    return xi * chi_plus(xi, s);
}

// ξ·χ±(ξ) for either side, without cancellation near 0.
inline cx xi_chi(cx xi, Side side, cx s) {
    if (side == Side::plus) return xi_chi_plus(xi, s);
    cx z = xi * pi * I / s;
    if (std::abs(z) < 0.5) return -(s / (pi * I)) * z_over_expm1(z) * std::exp(z);
    return xi * chi_eval(xi, side, s, 0.0);
}

}  // namespace unfold
