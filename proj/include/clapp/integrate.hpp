#pragma once

// =============================================================================
// Time-domain simulation
// =============================================================================

#include "clapp/dormand_prince.hpp"
#include "clapp/error.hpp"
#include "clapp/model.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace clapp {

struct IntegratorConfig {
    double rel_tol = 1e-9;
    std::array<double, 4> abs_tol{1e-9, 1e-9, 1e-9, 1e-12};  ///< V, V, V, A
    double t_start = 0.0;
    double t_end = 200e-9;
    double max_step = 0.0;      ///< 0: unbounded
    double initial_step = 0.0;  ///< 0: automatic
    double sample_interval = 1e-12;
    double fixed_step = 0.0;    ///< > 0 disables error control (convergence studies)

    void validate() const {
        if (!(rel_tol > 0.0)) throw InputError("integrator: rel_tol must be > 0");
        for (double a : abs_tol)
            if (!(a > 0.0)) throw InputError("integrator: abs_tol entries must be > 0");
        if (!std::isfinite(t_start) || !std::isfinite(t_end) || !(t_end > t_start))
            throw InputError("integrator: t_end must exceed t_start");
        if (!(sample_interval > 0.0)) throw InputError("integrator: sample_interval must be > 0");
        if (max_step < 0.0 || initial_step < 0.0 || fixed_step < 0.0)
            throw InputError("integrator: step sizes must be >= 0");
    }

    friend bool operator==(const IntegratorConfig&, const IntegratorConfig&) = default;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    StepStats steps;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

/// Run stopped early. The samples emitted so far are kept.
class IntegrationError : public NumericError {
public:
    IntegrationError(const std::string& what, Trajectory partial, double failure_time)
        : NumericError(what), partial_(std::move(partial)), failure_time_(failure_time) {}

    [[nodiscard]] const Trajectory& partial() const noexcept { return partial_; }
    [[nodiscard]] double failure_time() const noexcept { return failure_time_; }

private:
    Trajectory partial_;
    double failure_time_;
};

/// Step size fell below 1e-18 s.
class StiffnessError : public IntegrationError {
public:
    using IntegrationError::IntegrationError;
};

namespace detail {

/// Output grid t_start + k*dt, k = 0..last, with the last point clamped to
/// t_end when it lands on it up to rounding.
class SampleClock {
public:
    SampleClock(double t_start, double t_end, double dt) : t0_(t_start), t_end_(t_end), dt_(dt) {
        count_ = static_cast<std::size_t>(std::floor((t_end - t_start) / dt + 1e-9)) + 1;
    }

    [[nodiscard]] bool done() const noexcept { return k_ >= count_; }
    [[nodiscard]] double next() const noexcept {
        const double t = t0_ + static_cast<double>(k_) * dt_;
        return std::abs(t - t_end_) <= 1e-9 * dt_ ? t_end_ : t;
    }
    void pop() noexcept { ++k_; }
    [[nodiscard]] std::size_t count() const noexcept { return count_; }

private:
    double t0_, t_end_, dt_;
    std::size_t count_ = 0;
    std::size_t k_ = 0;
};

inline OdeOptions<4> ode_options(const IntegratorConfig& cfg) {
    OdeOptions<4> o;
    o.rel_tol = cfg.rel_tol;
    o.abs_tol = cfg.abs_tol;
    o.initial_step = cfg.initial_step;
    o.max_step = cfg.max_step;
    o.fixed_step = cfg.fixed_step;
    return o;
}

}  // namespace detail

/// Integrates an arbitrary autonomous four-state field f(State) -> State over
/// cfg's horizon and samples it on the output grid.
template <class Field>
[[nodiscard]] Trajectory simulate_field(Field&& field, const State& p0, const IntegratorConfig& cfg) {
    cfg.validate();
    if (!p0.is_finite()) throw InputError("simulate: initial state has non-finite entries");

    auto f = [&](double, const Vec<4>& y) { return field(State::from_array(y)).to_array(); };

    Trajectory traj;
    detail::SampleClock clock(cfg.t_start, cfg.t_end, cfg.sample_interval);
    traj.times.reserve(clock.count());
    traj.states.reserve(clock.count());

    DormandPrince45<4> stepper(detail::ode_options(cfg));
    double t = cfg.t_start;
    Vec<4> y = p0.to_array();

    traj.times.push_back(t);
    traj.states.push_back(p0);
    clock.pop();

    auto on_step = [&](const DenseStep<4>& dense, double t_new, const Vec<4>& y_new) {
        while (!clock.done() && clock.next() <= t_new) {
            const double ts = clock.next();
            traj.times.push_back(ts);
            traj.states.push_back(State::from_array(ts == t_new ? y_new : dense(ts)));
            clock.pop();
        }
    };

    OdeFailure fail{};
    const bool ok = stepper.advance(f, t, y, cfg.t_end, on_step, fail);
    traj.steps = stepper.stats();
    if (!ok) {
        const std::string what = "simulate: integration failed at t = " + detail::sci(fail.t) + " s: " + fail.message;
        if (fail.kind == OdeFailure::Kind::step_underflow) throw StiffnessError(what, std::move(traj), fail.t);
        throw IntegrationError(what, std::move(traj), fail.t);
    }
    return traj;
}

/// Integrates p' = rhs(p) from p0.
[[nodiscard]] inline Trajectory simulate(const CircuitParams& circuit, const BjtParams& bjt, const State& p0,
                                         const IntegratorConfig& cfg) {
    circuit.validate();
    bjt.validate();
    return simulate_field([&](const State& p) { return rhs(circuit, bjt, p); }, p0, cfg);
}

[[nodiscard]] inline std::vector<std::pair<double, double>> phase_projection(const Trajectory& traj, Component x,
                                                                             Component y) {
    if (x == y) throw InputError("phase_projection: x and y components must differ");
    if (static_cast<std::size_t>(x) > 3 || static_cast<std::size_t>(y) > 3)
        throw InputError("phase_projection: unknown component id");
    std::vector<std::pair<double, double>> out;
    out.reserve(traj.size());
    for (const auto& s : traj.states) out.emplace_back(s[x], s[y]);
    return out;
}

}  // namespace clapp
