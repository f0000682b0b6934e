#pragma once

#include "unfold/applications.hpp"

namespace unfold::systems {

inline Poly2 constant(cx c) { return Poly2{0, 0, {c}}; }

inline MultiIndex index1(int v) { return MultiIndex{{v}}; }

// (x²-ε)u' = u + (x²-ε)
inline SystemSpec unfolding_linear() {
    SystemSpec sp;
    sp.m = 1;
    sp.M = {Mat::Constant(1, 1, 1.0)};
    sp.terms.push_back({index1(0), TermKind::g, 0, constant(1.0)});
    sp.Lambda1 = 0.05;
    return sp;
}

// (x²-ε)y' = y + 2xy + (x²-ε)², solved by y = (x²-ε)u
inline SystemSpec unfolding_nonlinear() {
    SystemSpec sp;
    sp.m = 1;
    sp.M = {Mat::Constant(1, 1, 1.0)};
    sp.terms.push_back({index1(1), TermKind::a, 0, constant(2.0)});
    // g₀ = x² - ε: rows in ε, columns in x
    sp.terms.push_back({index1(0), TermKind::g, 0, Poly2{1, 2, {0.0, 0.0, 1.0, -1.0, 0.0, 0.0}}});
    sp.Lambda1 = 0.05;
    return sp;
}

// Euler's equation x²y' = y - x for v = y - x: x²v' = v - x².
inline SystemSpec euler_shifted() {
    SystemSpec sp;
    sp.m = 1;
    sp.M = {Mat::Constant(1, 1, 1.0)};
    sp.terms.push_back({index1(0), TermKind::g, 0, constant(-1.0)});
    sp.Lambda1 = 0.05;
    return sp;
}

// n = 2: λ = (1, -1) + x(0.1, -0.1), R = [[0, 0.3], [0.2, 0]].
inline LinearSystemSpec desk_linear() {
    LinearSystemSpec lin;
    lin.n = 2;
    lin.lambda0 = {{1.0}, {-1.0}};
    lin.lambda1 = {{0.1}, {-0.1}};
    lin.R = {{constant(0.0), constant(0.3)}, {constant(0.2), constant(0.0)}};
    return lin;
}

// ũ = ξχ⁺/(ξ-1) for unfolding_linear; at ε = 0 on a ray, ξ/(ξ-1).
inline cx unfolding_linear_borel(cx xi, cx s) {
    if (s == cx{}) return xi / (xi - 1.0);
    return xi_chi_plus(xi, s) / (xi - 1.0);
}

}  // namespace unfold::systems
