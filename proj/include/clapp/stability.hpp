#pragma once

// =============================================================================
// Linearization and local stability
// =============================================================================
// The vector field splits as p' = J(p_eq) p + h(p): J is the analytic
// Jacobian at the equilibrium, h collects the exponential remainder, the
// linearization compensation and the V_CC/R1 drive. Only rows 1-2 carry a
// nonlinearity; rows 3-4 are linear.
// =============================================================================

#include "clapp/eigen.hpp"
#include "clapp/equilibrium.hpp"
#include "clapp/matrix.hpp"
#include "clapp/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

namespace clapp {

/// Analytic partial derivatives of rhs at an arbitrary state.
[[nodiscard]] inline Matrix4 jacobian(const CircuitParams& c, const BjtParams& bjt, const State& p) {
    const double e = std::exp(junction_exponent(bjt, p.v_c1));
    const double g = c.bias_conductance();
    const double gm = bjt.eta * bjt.i_s / bjt.v_t * e;  // di_C/dv_BE

    Matrix4 j;
    j(0, 0) = -(g + gm / bjt.beta) / c.c1;
    j(0, 1) = -g / c.c1;
    j(0, 2) = 0.0;
    j(0, 3) = -1.0 / c.c1;

    j(1, 0) = -(g - gm) / c.c2;
    j(1, 1) = -(g + 1.0 / c.r_e) / c.c2;
    j(1, 2) = 0.0;
    j(1, 3) = -1.0 / c.c2;

    j(2, 3) = 1.0 / c.c3;

    j(3, 0) = 1.0 / c.l3;
    j(3, 1) = 1.0 / c.l3;
    j(3, 2) = -1.0 / c.l3;
    return j;
}

/// h(p) such that rhs(p) = jacobian(p_eq) p + h(p).
[[nodiscard]] inline StateDerivative nonlinearity(const CircuitParams& c, const BjtParams& bjt, const State& p,
                                                  const EquilibriumPoint& eq) {
    const double i_c = collector_current(bjt, p.v_c1);
    const double gm_eq = bjt.eta * bjt.i_s / bjt.v_t * std::exp(junction_exponent(bjt, eq.state.v_c1));
    const double drive = c.v_cc / c.r1;
    return {
        (-i_c / bjt.beta + gm_eq / bjt.beta * p.v_c1 + drive) / c.c1,
        (i_c - gm_eq * p.v_c1 + drive) / c.c2,
        0.0,
        0.0,
    };
}

enum class Stability { stable, marginal, unstable };

[[nodiscard]] inline std::string_view stability_name(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::marginal: return "marginal";
        case Stability::unstable: return "unstable";
    }
    return "?";
}

struct StabilityReport {
    Matrix4 jacobian;
    std::array<Complex, 4> eigenvalues{};  ///< sorted, see sort_eigenvalues
    double max_real_part = 0.0;            ///< [1/s]
    Stability classification = Stability::stable;
};

struct StabilityOptions {
    /// |max Re| at or below zero_band * spectral radius counts as marginal.
    double zero_band = 1e-3;
};

[[nodiscard]] inline Stability classify(const std::array<Complex, 4>& eig, const StabilityOptions& opt = {}) {
    double radius = 0.0;
    for (const auto& z : eig) radius = std::max(radius, std::abs(z));
    const double max_re = eig.front().real();
    if (std::abs(max_re) <= opt.zero_band * radius) return Stability::marginal;
    return max_re > 0.0 ? Stability::unstable : Stability::stable;
}

[[nodiscard]] inline StabilityReport stability_report(const CircuitParams& c, const BjtParams& bjt,
                                                      const EquilibriumPoint& eq,
                                                      const StabilityOptions& opt = {}) {
    StabilityReport r;
    r.jacobian = jacobian(c, bjt, eq.state);
    r.eigenvalues = eigenvalues(r.jacobian);
    r.max_real_part = r.eigenvalues.front().real();
    r.classification = classify(r.eigenvalues, opt);
    return r;
}

}  // namespace clapp
