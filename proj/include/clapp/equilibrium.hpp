#pragma once

// =============================================================================
// Equilibrium point
// =============================================================================
// Setting p' = 0 gives i_L3 = 0, v_C1 + v_C2 = v_C3 and, with i_B,eq as the
// only unknown,
//
//   v_C3 = (V_CC/R1 - i_B) / (1/R1 + 1/R2)
//   v_C2 = (1 + beta) R_E i_B
//   v_C1 = v_C3 - v_C2
//   g(i_B) = i_B - (I_S/beta)(exp(eta v_C1(i_B)/V_T) - 1) = 0
//
// g is strictly increasing in i_B and changes sign between 0 and the current
// i_B0 at which v_C1 vanishes, so the root is unique and bracketed.
// =============================================================================

#include "clapp/error.hpp"
#include "clapp/model.hpp"
#include "clapp/root_finding.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace clapp {

enum class RootMethod { newton_bisection, bisection };

struct EquilibriumOptions {
    double tol = 1e-12;  ///< relative tolerance on i_B,eq
    int max_iter = 200;
    RootMethod method = RootMethod::newton_bisection;
};

struct EquilibriumPoint {
    State state;            ///< p_eq
    double i_b_eq = 0.0;    ///< [A]
    StateDerivative residual;  ///< rhs at p_eq
    int iterations = 0;

    /// max_k |residual_k| / scale_k, see residual_scales().
    [[nodiscard]] double scaled_residual(const CircuitParams& c, const BjtParams& bjt) const;
};

/// Base current that drives v_C1 to zero.
[[nodiscard]] inline double zero_vbe_base_current(const CircuitParams& c, const BjtParams& bjt) {
    return (c.v_cc / c.r1) / (1.0 + (1.0 + bjt.beta) * c.r_e * c.bias_conductance());
}

/// Characteristic magnitudes of each rhs component, used to judge residuals.
[[nodiscard]] inline std::array<double, 4> residual_scales(const CircuitParams& c, const BjtParams& bjt) {
    const double v = std::abs(c.v_cc);
    return {v / (c.r1 * c.c1), v / (c.r1 * c.c2), std::abs(zero_vbe_base_current(c, bjt)) / c.c3, v / c.l3};
}

/// Equilibrium state for a given base current.
[[nodiscard]] inline State equilibrium_state_for(const CircuitParams& c, const BjtParams& bjt, double i_b) {
    // (V_CC/R1 - i_B)/(1/R1 + 1/R2) rewritten to keep the I_S = 0 case exact.
    const double v_c3 = (c.v_cc - c.r1 * i_b) * c.r2 / (c.r1 + c.r2);
    const double v_c2 = (1.0 + bjt.beta) * c.r_e * i_b;
    return {v_c3 - v_c2, v_c2, v_c3, 0.0};
}

[[nodiscard]] inline StateDerivative equilibrium_residual(const CircuitParams& c, const BjtParams& bjt,
                                                          const EquilibriumPoint& eq) {
    return rhs(c, bjt, eq.state);
}

inline double EquilibriumPoint::scaled_residual(const CircuitParams& c, const BjtParams& bjt) const {
    const auto scales = residual_scales(c, bjt);
    const auto r = residual.to_array();
    double worst = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        if (r[k] == 0.0) continue;
        const double s = scales[k] > 0.0 ? scales[k] : std::numeric_limits<double>::min();
        worst = std::max(worst, std::abs(r[k]) / s);
    }
    return worst;
}

[[nodiscard]] inline EquilibriumPoint solve_equilibrium(const CircuitParams& c, const BjtParams& bjt,
                                                        const EquilibriumOptions& opt = {}) {
    c.validate();
    bjt.validate();
    if (!(opt.tol > 0.0)) throw InputError("solve_equilibrium: tol must be > 0");
    if (opt.max_iter < 1) throw InputError("solve_equilibrium: max_iter must be >= 1");

    const double k_exp = bjt.eta / bjt.v_t;
    // dv_C1/di_B
    const double dv_di = -(c.r1 * c.r2 / (c.r1 + c.r2)) - (1.0 + bjt.beta) * c.r_e;

    // The solver evaluates g without the range guard: beyond the cap the
    // exponential term only contributes its sign.
    auto g_value = [&](double i_b) -> double {
        const double x = k_exp * equilibrium_state_for(c, bjt, i_b).v_c1;
        if (x > 709.0) return -std::numeric_limits<double>::infinity();
        return i_b - bjt.i_s / bjt.beta * std::expm1(x);
    };
    auto g_newton = [&](double i_b) -> ValueAndSlope {
        const double x = k_exp * equilibrium_state_for(c, bjt, i_b).v_c1;
        if (x > 709.0) return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        const double e = std::exp(x);
        return {i_b - bjt.i_s / bjt.beta * std::expm1(x), 1.0 - bjt.i_s / bjt.beta * e * k_exp * dv_di};
    };

    const double i_b0 = zero_vbe_base_current(c, bjt);
    const double lo = std::min(0.0, i_b0);
    const double hi = std::max(0.0, i_b0);

    RootResult root{0.0, 0};
    if (lo != hi) {
        root = opt.method == RootMethod::newton_bisection
                   ? newton_bisect_root(g_newton, lo, hi, opt.tol, opt.max_iter)
                   : bisect_root(g_value, lo, hi, opt.tol, opt.max_iter);
    }

    // A relative step of tol in i_B can still leave a visible rhs residual when
    // the loop gain (slope of g) is large. Extra Newton steps are kept while
    // they reduce |g| and stay in the bracket.
    if (opt.method == RootMethod::newton_bisection && lo != hi) {
        for (int polish = 0; polish < 3; ++polish) {
            const auto v = g_newton(root.root);
            if (v.value == 0.0 || !(v.slope != 0.0) || !std::isfinite(v.value)) break;
            const double next = root.root - v.value / v.slope;
            if (!(next >= lo && next <= hi)) break;
            if (!(std::abs(g_value(next)) < std::abs(v.value))) break;
            root.root = next;
        }
    }

    EquilibriumPoint eq;
    eq.i_b_eq = root.root;
    eq.state = equilibrium_state_for(c, bjt, root.root);
    eq.iterations = root.iterations;
    eq.residual = rhs(c, bjt, eq.state);
    return eq;
}

}  // namespace clapp
