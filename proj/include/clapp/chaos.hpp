#pragma once

// =============================================================================
// Chaos indicators
// =============================================================================
// - sweep of the equilibrium's largest eigenvalue real part over R_E
// - bisection for the R_E at which that real part changes sign
// - largest Lyapunov exponent by the tangent-space (Benettin) method
// - calibration of the unpublished current gain against a target spectrum
// =============================================================================

#include "clapp/dormand_prince.hpp"
#include "clapp/equilibrium.hpp"
#include "clapp/error.hpp"
#include "clapp/integrate.hpp"
#include "clapp/model.hpp"
#include "clapp/stability.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace clapp {

// =============================================================================
// Parameter grids
// =============================================================================

enum class Spacing { linear, log };

[[nodiscard]] inline std::string_view spacing_name(Spacing s) { return s == Spacing::linear ? "linear" : "log"; }

[[nodiscard]] inline Spacing parse_spacing(std::string_view s) {
    if (s == "linear") return Spacing::linear;
    if (s == "log") return Spacing::log;
    throw InputError("unknown grid spacing '" + std::string(s) + "' (expected linear or log)");
}

[[nodiscard]] inline std::vector<double> make_grid(double lo, double hi, std::size_t count, Spacing spacing) {
    if (count < 1) throw InputError("grid: count must be >= 1");
    if (!(lo > 0.0) || !(hi >= lo)) throw InputError("grid: need 0 < lo <= hi");
    std::vector<double> g(count);
    if (count == 1) {
        g[0] = lo;
        return g;
    }
    const double n = static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) {
        const double s = static_cast<double>(k) / n;
        g[k] = spacing == Spacing::linear ? lo + s * (hi - lo) : lo * std::pow(hi / lo, s);
    }
    g.back() = hi;
    return g;
}

// =============================================================================
// R_E sweep
// =============================================================================

struct SweepPoint {
    double r_e = 0.0;
    double max_real_part = std::numeric_limits<double>::quiet_NaN();
    Stability classification = Stability::stable;
    bool ok = false;
    std::string error;  ///< set when !ok

    friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

struct SweepResult {
    std::vector<SweepPoint> points;
};

struct ChaosOptions {
    EquilibriumOptions equilibrium{};
    StabilityOptions stability{};
    unsigned threads = 0;  ///< 0: hardware concurrency
};

[[nodiscard]] inline StabilityReport stability_at(CircuitParams circuit, const BjtParams& bjt, double r_e,
                                                  const ChaosOptions& opt = {}) {
    circuit.r_e = r_e;
    const auto eq = solve_equilibrium(circuit, bjt, opt.equilibrium);
    return stability_report(circuit, bjt, eq, opt.stability);
}

/// Largest eigenvalue real part at the (re-solved) equilibrium for this R_E.
[[nodiscard]] inline double max_real_part_at(const CircuitParams& circuit, const BjtParams& bjt, double r_e,
                                             const ChaosOptions& opt = {}) {
    return stability_at(circuit, bjt, r_e, opt).max_real_part;
}

[[nodiscard]] inline SweepResult sweep_re(const CircuitParams& circuit, const BjtParams& bjt,
                                          std::span<const double> r_e_grid, const ChaosOptions& opt = {}) {
    if (r_e_grid.empty()) throw InputError("sweep_re: grid is empty");
    for (double r : r_e_grid)
        if (!(r > 0.0) || !std::isfinite(r)) throw InputError("sweep_re: grid values must be > 0");

    SweepResult result;
    result.points.resize(r_e_grid.size());

    auto evaluate = [&](std::size_t k) {
        SweepPoint& pt = result.points[k];
        pt.r_e = r_e_grid[k];
        try {
            const auto rep = stability_at(circuit, bjt, pt.r_e, opt);
            pt.max_real_part = rep.max_real_part;
            pt.classification = rep.classification;
            pt.ok = true;
        } catch (const Error& e) {
            pt.ok = false;
            pt.error = e.what();
        }
    };

    unsigned workers = opt.threads != 0 ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, r_e_grid.size()));
    if (workers <= 1) {
        for (std::size_t k = 0; k < r_e_grid.size(); ++k) evaluate(k);
        return result;
    }

    // Strided partition; each slot is written by exactly one worker.
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t k = w; k < r_e_grid.size(); k += workers) evaluate(k);
        });
    }
    pool.clear();
    return result;
}

// =============================================================================
// Instability boundary
// =============================================================================

struct BoundaryResult {
    double r_e = 0.0;  ///< midpoint of the final bracket
    double lo = 0.0;
    double hi = 0.0;
    int iterations = 0;
};

[[nodiscard]] inline BoundaryResult find_instability_boundary(const CircuitParams& circuit, const BjtParams& bjt,
                                                              double r_e_lo, double r_e_hi, double tol,
                                                              const ChaosOptions& opt = {}) {
    if (!(r_e_lo > 0.0) || !(r_e_hi > r_e_lo)) throw InputError("boundary: need 0 < lo < hi");
    if (!(tol > 0.0)) throw InputError("boundary: tol must be > 0");

    auto unstable = [&](double r) { return max_real_part_at(circuit, bjt, r, opt) > 0.0; };
    const bool lo_unstable = unstable(r_e_lo);
    const bool hi_unstable = unstable(r_e_hi);
    if (lo_unstable == hi_unstable) {
        throw BracketError(std::string("boundary: no stability change on [") + detail::sci(r_e_lo) + ", " +
                           detail::sci(r_e_hi) + "] Ohm (both ends " +
                           (lo_unstable ? "unstable" : "stable") + ")");
    }

    double lo = r_e_lo, hi = r_e_hi;
    int it = 0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (unstable(mid) == lo_unstable)
            lo = mid;
        else
            hi = mid;
        ++it;
    }
    return {0.5 * (lo + hi), lo, hi, it};
}

// =============================================================================
// Largest Lyapunov exponent
// =============================================================================

/// A vector field with its Jacobian, the input of the tangent-space method.
template <class D>
concept TangentDynamics = requires(const D& d, const State& p) {
    { d.rhs(p) } -> std::convertible_to<State>;
    { d.jacobian(p) } -> std::convertible_to<Matrix4>;
};

struct CircuitDynamics {
    CircuitParams circuit;
    BjtParams bjt;

    [[nodiscard]] State rhs(const State& p) const { return clapp::rhs(circuit, bjt, p); }
    [[nodiscard]] Matrix4 jacobian(const State& p) const { return clapp::jacobian(circuit, bjt, p); }
};

/// p' = A p
struct LinearDynamics {
    Matrix4 a;

    [[nodiscard]] State rhs(const State& p) const { return State::from_array(a * p.to_array()); }
    [[nodiscard]] Matrix4 jacobian(const State&) const { return a; }
};

struct LyapunovSample {
    std::size_t index = 0;  ///< 1-based renormalization count
    double t = 0.0;
    double lambda_running = 0.0;
};

struct LyapunovEstimate {
    double lambda1 = 0.0;  ///< [1/s]
    double horizon = 0.0;
    std::size_t renorm_count = 0;
    std::vector<LyapunovSample> trace;
};

struct LyapunovOptions {
    double rel_tol = 1e-9;
    std::array<double, 4> abs_tol{1e-9, 1e-9, 1e-9, 1e-12};
    std::array<double, 4> tangent_abs_tol{1e-9, 1e-9, 1e-9, 1e-12};
};

class LyapunovError : public NumericError {
public:
    LyapunovError(const std::string& what, LyapunovEstimate partial)
        : NumericError(what), partial_(std::move(partial)) {}

    [[nodiscard]] const LyapunovEstimate& partial() const noexcept { return partial_; }

private:
    LyapunovEstimate partial_;
};

template <TangentDynamics D>
[[nodiscard]] LyapunovEstimate largest_lyapunov(const D& dyn, const State& p0, double horizon,
                                                double renorm_interval, const LyapunovOptions& opt = {}) {
    if (!(renorm_interval > 0.0)) throw InputError("lyapunov: renorm_interval must be > 0");
    if (!(horizon >= 100.0 * renorm_interval * (1.0 - 1e-12)))
        throw InputError("lyapunov: horizon must be at least 100 renormalization intervals");
    if (!p0.is_finite()) throw InputError("lyapunov: initial state has non-finite entries");

    // y = [p, delta]
    auto f = [&](double, const Vec<8>& y) {
        const State p{y[0], y[1], y[2], y[3]};
        const State dp = dyn.rhs(p);
        const Matrix4 j = dyn.jacobian(p);
        const Vec<4> delta{y[4], y[5], y[6], y[7]};
        const Vec<4> dd = j * delta;
        return Vec<8>{dp.v_c1, dp.v_c2, dp.v_c3, dp.i_l3, dd[0], dd[1], dd[2], dd[3]};
    };

    OdeOptions<8> ode;
    ode.rel_tol = opt.rel_tol;
    for (std::size_t i = 0; i < 4; ++i) {
        ode.abs_tol[i] = opt.abs_tol[i];
        ode.abs_tol[i + 4] = opt.tangent_abs_tol[i];
    }
    DormandPrince45<8> stepper(ode);

    const auto count = static_cast<std::size_t>(std::floor(horizon / renorm_interval + 1e-9));
    LyapunovEstimate est;
    est.trace.reserve(count);

    Vec<8> y{p0.v_c1, p0.v_c2, p0.v_c3, p0.i_l3, 0.5, 0.5, 0.5, 0.5};
    double t = 0.0;
    double log_sum = 0.0;
    auto no_samples = [](const DenseStep<8>&, double, const Vec<8>&) {};

    for (std::size_t k = 1; k <= count; ++k) {
        const double t_next = static_cast<double>(k) * renorm_interval;
        OdeFailure fail{};
        if (!stepper.advance(f, t, y, t_next, no_samples, fail)) {
            est.renorm_count = est.trace.size();
            est.horizon = est.trace.empty() ? 0.0 : est.trace.back().t;
            est.lambda1 = est.trace.empty() ? 0.0 : est.trace.back().lambda_running;
            throw LyapunovError("lyapunov: integration failed at t = " + detail::sci(fail.t) + " s: " +
                                    fail.message,
                                std::move(est));
        }
        const double norm = std::sqrt(y[4] * y[4] + y[5] * y[5] + y[6] * y[6] + y[7] * y[7]);
        log_sum += std::log(norm);
        for (std::size_t i = 4; i < 8; ++i) y[i] /= norm;
        stepper.state_changed();
        est.trace.push_back({k, t_next, log_sum / t_next});
    }

    est.renorm_count = count;
    est.horizon = static_cast<double>(count) * renorm_interval;
    est.lambda1 = log_sum / est.horizon;
    return est;
}

[[nodiscard]] inline LyapunovEstimate largest_lyapunov(const CircuitParams& circuit, const BjtParams& bjt,
                                                       const State& p0, double horizon, double renorm_interval,
                                                       const LyapunovOptions& opt = {}) {
    circuit.validate();
    bjt.validate();
    return largest_lyapunov(CircuitDynamics{circuit, bjt}, p0, horizon, renorm_interval, opt);
}

// =============================================================================
// Current-gain calibration
// =============================================================================

struct BetaCalibration {
    double beta = 0.0;
    double max_rel_error = std::numeric_limits<double>::infinity();
    std::array<double, 4> real_parts{};  ///< sorted eigenvalue real parts at the best beta
};

/// Picks the beta on `grid` whose sorted eigenvalue real parts at the
/// equilibrium are closest (max relative deviation) to `target`.
[[nodiscard]] inline BetaCalibration calibrate_beta(const CircuitParams& circuit, BjtParams bjt,
                                                    const std::array<double, 4>& target,
                                                    std::span<const double> grid, const ChaosOptions& opt = {}) {
    if (grid.empty()) throw InputError("calibrate_beta: grid is empty");
    BetaCalibration best;
    for (double beta : grid) {
        bjt.beta = beta;
        StabilityReport rep;
        try {
            rep = stability_report(circuit, bjt, solve_equilibrium(circuit, bjt, opt.equilibrium), opt.stability);
        } catch (const Error&) {
            continue;
        }
        std::array<double, 4> re{};
        double worst = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            re[k] = rep.eigenvalues[k].real();
            worst = std::max(worst, std::abs(re[k] - target[k]) / std::abs(target[k]));
        }
        if (worst < best.max_rel_error) best = {beta, worst, re};
    }
    if (!std::isfinite(best.max_rel_error)) throw NumericError("calibrate_beta: no grid point could be evaluated");
    return best;
}

}  // namespace clapp
