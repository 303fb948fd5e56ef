#pragma once

// =============================================================================
// Dormand-Prince 5(4) embedded Runge-Kutta pair
// =============================================================================
// FSAL stepping with the standard error-per-step controller and the
// fourth-order continuous extension of Hairer/Norsett/Wanner (DOPRI5) for
// output between steps. Works on std::array<double, N>; the vector field is a
// callable f(t, y) -> std::array<double, N>.
//
// A trial step whose stages overflow the model's exponent guard (RangeError)
// or produce non-finite values is rejected and retried with a smaller step.
// Failure conditions are reported through OdeFailure.
// =============================================================================

#include "clapp/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

namespace clapp {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
struct OdeOptions {
    double rel_tol = 1e-9;
    Vec<N> abs_tol{};
    double initial_step = 0.0;  ///< 0: automatic
    double max_step = 0.0;      ///< 0: unbounded
    double fixed_step = 0.0;    ///< > 0: no error control, uniform steps
    double min_step = 1e-18;
    std::size_t max_steps = 100'000'000;
    int max_consecutive_failures = 60;
};

struct StepStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double min_step = std::numeric_limits<double>::infinity();
    double max_step = 0.0;

    void record(double h) {
        ++accepted;
        min_step = std::min(min_step, h);
        max_step = std::max(max_step, h);
    }

    friend bool operator==(const StepStats&, const StepStats&) = default;
};

/// Why an integration stopped early. `t` is the last accepted time.
struct OdeFailure {
    enum class Kind { step_underflow, non_finite, range, too_many_steps };
    Kind kind;
    double t;
    std::string message;
};

namespace dp45 {

inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
// fifth-minus-fourth order weights
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense output
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace dp45

/// Continuous extension over one accepted step [t0, t0 + h].
template <std::size_t N>
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    std::array<Vec<N>, 5> r{};

    [[nodiscard]] Vec<N> operator()(double t) const {
        const double s = (t - t0) / h;
        const double s1 = 1.0 - s;
        Vec<N> y;
        for (std::size_t i = 0; i < N; ++i)
            y[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        return y;
    }
};

template <std::size_t N>
class DormandPrince45 {
public:
    explicit DormandPrince45(OdeOptions<N> opt) : opt_(opt) {
        if (!(opt_.rel_tol > 0.0)) throw InputError("ode: rel_tol must be > 0");
        for (double a : opt_.abs_tol)
            if (!(a > 0.0)) throw InputError("ode: abs_tol entries must be > 0");
    }

    [[nodiscard]] const StepStats& stats() const noexcept { return stats_; }
    [[nodiscard]] double next_step() const noexcept { return h_; }

    /// Call after modifying the state between advance() calls.
    void state_changed() noexcept { have_k1_ = false; }

    /// Integrates from (t, y) to t_end. `on_step(dense, t_new, y_new)` is called
    /// after every accepted step. Returns OdeFailure::Kind via `fail` when the
    /// run stops early; on success `fail` is untouched and t == t_end.
    template <class F, class OnStep>
    bool advance(F&& f, double& t, Vec<N>& y, double t_end, OnStep&& on_step, OdeFailure& fail) {
        if (!have_k1_ || t != t_k1_) {
            if (!eval(f, t, y, k1_)) {
                fail = {OdeFailure::Kind::range, t, "vector field not evaluable at the current state"};
                return false;
            }
            have_k1_ = true;
            t_k1_ = t;
        }

        const double span = t_end - t;
        if (span <= 0.0) return true;

        const bool fixed = opt_.fixed_step > 0.0;
        std::size_t fixed_left = 0;
        double fixed_h = 0.0;
        if (fixed) {
            fixed_left = static_cast<std::size_t>(std::ceil(span / opt_.fixed_step - 1e-9));
            fixed_left = std::max<std::size_t>(fixed_left, 1);
            fixed_h = span / static_cast<double>(fixed_left);
        } else if (h_ <= 0.0) {
            h_ = opt_.initial_step > 0.0 ? opt_.initial_step : initial_step(f, t, y, span);
        }

        int failures = 0;
        bool last_rejected = false;
        while (t < t_end) {
            if (stats_.accepted + stats_.rejected >= opt_.max_steps) {
                fail = {OdeFailure::Kind::too_many_steps, t, "step budget exhausted"};
                return false;
            }

            double h;
            bool last;
            if (fixed) {
                h = fixed_h;
                last = fixed_left == 1;
                if (last) h = t_end - t;
            } else {
                h = h_;
                if (opt_.max_step > 0.0) h = std::min(h, opt_.max_step);
                last = t + 1.01 * h >= t_end;
                if (last) h = t_end - t;
            }
            if (h < opt_.min_step) {
                fail = {OdeFailure::Kind::step_underflow, t,
                        "step size " + detail::sci(h) + " s below minimum (stiff or singular problem)"};
                return false;
            }

            Vec<N> y_new, k7, err;
            const bool ok = try_step(f, t, y, h, y_new, k7, err);
            double err_norm = std::numeric_limits<double>::infinity();
            if (ok) err_norm = error_norm(err, y, y_new);

            if (!ok || !std::isfinite(err_norm)) {
                if (fixed) {
                    fail = {ok ? OdeFailure::Kind::non_finite : OdeFailure::Kind::range, t,
                            "fixed step produced a non-finite or out-of-range state"};
                    return false;
                }
                ++stats_.rejected;
                if (++failures > opt_.max_consecutive_failures) {
                    fail = {ok ? OdeFailure::Kind::non_finite : OdeFailure::Kind::range, t,
                            "repeated non-finite or out-of-range trial steps"};
                    return false;
                }
                h_ = 0.25 * h;
                last_rejected = true;
                continue;
            }

            if (!fixed && err_norm > 1.0) {
                ++stats_.rejected;
                failures = 0;
                h_ = h * std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
                last_rejected = true;
                continue;
            }

            failures = 0;
            DenseStep<N> dense = make_dense(t, h, y, y_new, k7);
            const double t_new = last ? t_end : t + h;
            stats_.record(h);
            t = t_new;
            y = y_new;
            k1_ = k7;
            t_k1_ = t;
            on_step(dense, t, y);

            if (fixed) {
                --fixed_left;
            } else {
                double fac = err_norm == 0.0 ? 10.0 : 0.9 * std::pow(err_norm, -0.2);
                fac = std::clamp(fac, 0.2, 10.0);
                if (last_rejected) fac = std::min(fac, 1.0);
                // keep the controller's proposal even when the last step was clipped
                if (!last || fac * h > h_) h_ = fac * h;
                last_rejected = false;
            }
        }
        return true;
    }

private:
    template <class F>
    bool eval(F& f, double t, const Vec<N>& y, Vec<N>& out) {
        try {
            out = f(t, y);
        } catch (const Error&) {  // RangeError or non-finite state
            return false;
        }
        for (double v : out)
            if (!std::isfinite(v)) return false;
        return true;
    }

    template <class F>
    bool try_step(F& f, double t, const Vec<N>& y, double h, Vec<N>& y_new, Vec<N>& k7, Vec<N>& err) {
        using namespace dp45;
        Vec<N> k2, k3, k4, k5, k6, tmp;
        const Vec<N>& k1 = k1_;
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        if (!eval(f, t + c2 * h, tmp, k2)) return false;
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        if (!eval(f, t + c3 * h, tmp, k3)) return false;
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        if (!eval(f, t + c4 * h, tmp, k4)) return false;
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        if (!eval(f, t + c5 * h, tmp, k5)) return false;
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        if (!eval(f, t + h, tmp, k6)) return false;
        for (std::size_t i = 0; i < N; ++i)
            y_new[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        if (!eval(f, t + h, y_new, k7)) return false;
        for (std::size_t i = 0; i < N; ++i)
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        k_[0] = k3;
        k_[1] = k4;
        k_[2] = k5;
        k_[3] = k6;
        return true;
    }

    DenseStep<N> make_dense(double t, double h, const Vec<N>& y, const Vec<N>& y_new, const Vec<N>& k7) const {
        using namespace dp45;
        DenseStep<N> d;
        d.t0 = t;
        d.h = h;
        const Vec<N>& k1 = k1_;
        const auto& [k3, k4, k5, k6] = k_;
        for (std::size_t i = 0; i < N; ++i) {
            const double dy = y_new[i] - y[i];
            const double bspl = h * k1[i] - dy;
            d.r[0][i] = y[i];
            d.r[1][i] = dy;
            d.r[2][i] = bspl;
            d.r[3][i] = dy - h * k7[i] - bspl;
            d.r[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        return d;
    }

    [[nodiscard]] double error_norm(const Vec<N>& err, const Vec<N>& y0, const Vec<N>& y1) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = opt_.abs_tol[i] + opt_.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
            const double q = err[i] / sc;
            sum += q * q;
        }
        return std::sqrt(sum / static_cast<double>(N));
    }

    [[nodiscard]] double weighted_norm(const Vec<N>& v, const Vec<N>& y) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double q = v[i] / (opt_.abs_tol[i] + opt_.rel_tol * std::abs(y[i]));
            sum += q * q;
        }
        return std::sqrt(sum / static_cast<double>(N));
    }

    // Starting step heuristic (Hairer, Norsett & Wanner, II.4).
    template <class F>
    double initial_step(F& f, double t, const Vec<N>& y, double span) {
        const double d0 = weighted_norm(y, y);
        const double d1 = weighted_norm(k1_, y);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
        h0 = std::min(h0, span);
        if (opt_.max_step > 0.0) h0 = std::min(h0, opt_.max_step);

        Vec<N> y1, f1;
        for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + h0 * k1_[i];
        if (!eval(f, t + h0, y1, f1)) return h0 * 1e-3;
        Vec<N> df;
        for (std::size_t i = 0; i < N; ++i) df[i] = f1[i] - k1_[i];
        const double d2 = weighted_norm(df, y) / h0;
        const double dmax = std::max(d1, d2);
        const double h1 = dmax <= 1e-15 ? std::max(1e-6 * span, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
        double h = std::min(100.0 * h0, h1);
        if (opt_.max_step > 0.0) h = std::min(h, opt_.max_step);
        return std::min(h, span);
    }

    OdeOptions<N> opt_;
    StepStats stats_;
    double h_ = 0.0;
    Vec<N> k1_{};
    bool have_k1_ = false;
    double t_k1_ = 0.0;
    std::array<Vec<N>, 4> k_{};
};

}  // namespace clapp
