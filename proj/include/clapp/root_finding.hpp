#pragma once

// Bracketed scalar root finders. The function object returns g(x) for
// bisection and {g(x), g'(x)} for the safeguarded Newton iteration. g may
// return +-inf where the true value overflows; only its sign is used then.

#include "clapp/error.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace clapp {

struct RootResult {
    double root = 0.0;
    int iterations = 0;
};

struct ValueAndSlope {
    double value;
    double slope;
};

namespace detail {

inline bool sign_change(double a, double b) { return (a <= 0.0 && b >= 0.0) || (a >= 0.0 && b <= 0.0); }

inline bool converged(double lo, double hi, double x, double rel_tol) {
    return std::abs(hi - lo) <= rel_tol * std::abs(x) || hi - lo <= 0.0;
}

}  // namespace detail

/// Plain bisection on [lo, hi] until the bracket width is below rel_tol*|x|
/// or no representable midpoint remains.
template <class F>
[[nodiscard]] RootResult bisect_root(F&& g, double lo, double hi, double rel_tol, int max_iter) {
    double g_lo = g(lo);
    double g_hi = g(hi);
    if (g_lo == 0.0) return {lo, 0};
    if (g_hi == 0.0) return {hi, 0};
    if (!detail::sign_change(g_lo, g_hi)) throw SolverError("bisect_root: no sign change on bracket");

    for (int it = 1; it <= max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) return {mid, it};
        const double g_mid = g(mid);
        if (g_mid == 0.0) return {mid, it};
        if (detail::sign_change(g_lo, g_mid)) {
            hi = mid;
        } else {
            lo = mid;
            g_lo = g_mid;
        }
        if (detail::converged(lo, hi, 0.5 * (lo + hi), rel_tol)) return {0.5 * (lo + hi), it};
    }
    throw ConvergenceError("bisect_root: iteration cap " + std::to_string(max_iter) + " reached",
                           0.5 * (lo + hi));
}

/// Newton iteration kept inside a shrinking bracket. A Newton step that
/// leaves the bracket, or fails to halve the previous step, is replaced by
/// bisection.
template <class F>
[[nodiscard]] RootResult newton_bisect_root(F&& g, double lo, double hi, double rel_tol, int max_iter) {
    ValueAndSlope v_lo = g(lo);
    ValueAndSlope v_hi = g(hi);
    if (v_lo.value == 0.0) return {lo, 0};
    if (v_hi.value == 0.0) return {hi, 0};
    if (!detail::sign_change(v_lo.value, v_hi.value))
        throw SolverError("newton_bisect_root: no sign change on bracket");

    // Orient so that g(neg) < 0 < g(pos).
    double neg = v_lo.value < 0.0 ? lo : hi;
    double pos = v_lo.value < 0.0 ? hi : lo;

    double x = 0.5 * (lo + hi);
    double step_old = std::abs(hi - lo);
    double step = step_old;
    ValueAndSlope v = g(x);

    for (int it = 1; it <= max_iter; ++it) {
        const double newton = v.slope != 0.0 && std::isfinite(v.value) ? x - v.value / v.slope : NAN;
        const bool inside = std::isfinite(newton) && (newton - neg) * (newton - pos) < 0.0;
        const bool fast = std::abs(2.0 * v.value) < std::abs(step_old * v.slope);
        step_old = step;
        double next;
        if (inside && fast) {
            next = newton;
        } else {
            next = 0.5 * (neg + pos);
        }
        step = next - x;
        x = next;
        if (std::abs(step) <= rel_tol * std::abs(x) || step == 0.0) return {x, it};
        v = g(x);
        if (v.value == 0.0) return {x, it};
        if (v.value < 0.0)
            neg = x;
        else
            pos = x;
    }
    throw ConvergenceError("newton_bisect_root: iteration cap " + std::to_string(max_iter) + " reached", x);
}

}  // namespace clapp
