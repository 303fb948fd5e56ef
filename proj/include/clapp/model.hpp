#pragma once

// =============================================================================
// Clapp oscillator model
// =============================================================================
// Large-signal BJT current laws, the four-state nonlinear state-space model
//
//   p = [v_C1, v_C2, v_C3, i_L3],   p' = rhs(p)
//
// and the exponential I-V fitter used to characterize the transistor.
// Everything is SI: farads, henries, ohms, volts, amperes, seconds.
// =============================================================================

#include "clapp/error.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace clapp {

// =============================================================================
// Parameters
// =============================================================================

/// Large-signal transistor constants. Defaults: BFU730F exponential fit,
/// thermal voltage at 300 K, beta = 100 (not published for this device).
struct BjtParams {
    double i_s = 47.1e-12;  ///< saturation current [A]
    double beta = 100.0;    ///< forward current gain
    double eta = 0.7894;    ///< exponential slope factor
    double v_t = 25.85e-3;  ///< thermal voltage [V]
    double exponent_cap = 700.0;  ///< largest eta*v/V_T accepted before RangeError

    void validate() const {
        if (!(i_s >= 0.0) || !std::isfinite(i_s)) throw InputError("bjt: i_s must be >= 0");
        if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("bjt: beta must be > 0");
        if (!(eta > 0.0) || !std::isfinite(eta)) throw InputError("bjt: eta must be > 0");
        if (!(v_t > 0.0) || !std::isfinite(v_t)) throw InputError("bjt: v_t must be > 0");
        if (!(exponent_cap > 0.0)) throw InputError("bjt: exponent_cap must be > 0");
    }

    friend bool operator==(const BjtParams&, const BjtParams&) = default;
};

/// Passive components and supply. Defaults are the chaotic design point.
struct CircuitParams {
    double c1 = 2e-12;     ///< [F]
    double c2 = 2e-12;     ///< [F]
    double c3 = 0.1e-12;   ///< [F]
    double l3 = 0.753e-9;  ///< [H]
    double r1 = 5e3;       ///< [Ohm]
    double r2 = 7e3;       ///< [Ohm]
    double r_e = 500.0;    ///< [Ohm]
    double v_cc = 12.0;    ///< [V]

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw InputError(std::string("circuit: ") + name + " must be > 0");
        };
        positive(c1, "c1");
        positive(c2, "c2");
        positive(c3, "c3");
        positive(l3, "l3");
        positive(r1, "r1");
        positive(r2, "r2");
        positive(r_e, "r_e");
        if (!std::isfinite(v_cc)) throw InputError("circuit: v_cc must be finite");
    }

    /// 1/R1 + 1/R2
    [[nodiscard]] double bias_conductance() const noexcept { return 1.0 / r1 + 1.0 / r2; }

    friend bool operator==(const CircuitParams&, const CircuitParams&) = default;
};

// =============================================================================
// State vector
// =============================================================================

enum class Component : std::size_t { v_c1 = 0, v_c2 = 1, v_c3 = 2, i_l3 = 3 };

inline constexpr std::array<Component, 4> kComponents{
    Component::v_c1, Component::v_c2, Component::v_c3, Component::i_l3};

[[nodiscard]] inline std::string_view component_name(Component c) {
    switch (c) {
        case Component::v_c1: return "v_c1";
        case Component::v_c2: return "v_c2";
        case Component::v_c3: return "v_c3";
        case Component::i_l3: return "i_l3";
    }
    return "?";
}

[[nodiscard]] inline Component parse_component(std::string_view name) {
    for (auto c : kComponents)
        if (component_name(c) == name) return c;
    throw InputError("unknown state component '" + std::string(name) +
                     "' (expected v_c1, v_c2, v_c3 or i_l3)");
}

/// Capacitor voltages [V] and inductor current [A]. Also used for the time
/// derivative of the state (V/s, A/s).
struct State {
    double v_c1 = 0.0;
    double v_c2 = 0.0;
    double v_c3 = 0.0;
    double i_l3 = 0.0;

    static constexpr std::size_t size = 4;

    [[nodiscard]] constexpr std::array<double, 4> to_array() const { return {v_c1, v_c2, v_c3, i_l3}; }
    [[nodiscard]] static constexpr State from_array(const std::array<double, 4>& a) {
        return {a[0], a[1], a[2], a[3]};
    }

    [[nodiscard]] constexpr double operator[](Component c) const {
        switch (c) {
            case Component::v_c1: return v_c1;
            case Component::v_c2: return v_c2;
            case Component::v_c3: return v_c3;
            case Component::i_l3: return i_l3;
        }
        return 0.0;
    }
    [[nodiscard]] constexpr double& operator[](Component c) {
        switch (c) {
            case Component::v_c1: return v_c1;
            case Component::v_c2: return v_c2;
            case Component::v_c3: return v_c3;
            case Component::i_l3: break;
        }
        return i_l3;
    }

    [[nodiscard]] bool is_finite() const {
        return std::isfinite(v_c1) && std::isfinite(v_c2) && std::isfinite(v_c3) && std::isfinite(i_l3);
    }

    friend constexpr State operator+(const State& a, const State& b) {
        return {a.v_c1 + b.v_c1, a.v_c2 + b.v_c2, a.v_c3 + b.v_c3, a.i_l3 + b.i_l3};
    }
    friend constexpr State operator-(const State& a, const State& b) {
        return {a.v_c1 - b.v_c1, a.v_c2 - b.v_c2, a.v_c3 - b.v_c3, a.i_l3 - b.i_l3};
    }
    friend bool operator==(const State&, const State&) = default;
};

using StateDerivative = State;

// =============================================================================
// Transistor currents
// =============================================================================

/// Exponent eta*v/V_T, guarded by the cap.
[[nodiscard]] inline double junction_exponent(const BjtParams& bjt, double v_be) {
    const double x = bjt.eta * v_be / bjt.v_t;
    if (!(x <= bjt.exponent_cap)) {
        throw RangeError("junction exponent " + detail::sci(x) + " exceeds cap " + detail::sci(bjt.exponent_cap),
                         x);
    }
    return x;
}

/// i_C = I_S (exp(eta v_BE / V_T) - 1)
[[nodiscard]] inline double collector_current(const BjtParams& bjt, double v_be) {
    return bjt.i_s * std::expm1(junction_exponent(bjt, v_be));
}

/// i_B = i_C / beta
[[nodiscard]] inline double base_current(const BjtParams& bjt, double v_be) {
    return collector_current(bjt, v_be) / bjt.beta;
}

// =============================================================================
// State-space right-hand side
// =============================================================================

/// Exact nonlinear vector field with v_BE = v_C1.
[[nodiscard]] inline StateDerivative rhs(const CircuitParams& c, const BjtParams& bjt, const State& p) {
    if (!p.is_finite()) throw InputError("rhs: state has non-finite entries");
    const double i_b = base_current(bjt, p.v_c1);
    const double g = c.bias_conductance();
    const double bias = -(p.v_c1 + p.v_c2) * g + c.v_cc / c.r1;
    return {
        (bias - p.i_l3 - i_b) / c.c1,
        (bias - p.v_c2 / c.r_e - p.i_l3 + bjt.beta * i_b) / c.c2,
        p.i_l3 / c.c3,
        (p.v_c1 + p.v_c2 - p.v_c3) / c.l3,
    };
}

// =============================================================================
// Exponential I-V fit
// =============================================================================

struct IvSample {
    double v_be = 0.0;  ///< [V]
    double i_dc = 0.0;  ///< [A]
};

struct ExponentialFit {
    double i_s = 0.0;
    double eta = 0.0;
    std::size_t samples_used = 0;
};

/// Unweighted least squares of ln(i_dc) = ln(I_S) + (eta/V_T) v_be. The "-1"
/// of the diode law is dropped, which is exact for the pure exponential form
/// and negligible for v_be >> V_T. Samples with i_dc <= 0 are skipped.
[[nodiscard]] inline ExponentialFit fit_exponential(std::span<const IvSample> samples, double v_t) {
    if (!(v_t > 0.0)) throw InputError("fit_exponential: v_t must be > 0");

    std::vector<IvSample> usable;
    usable.reserve(samples.size());
    for (const auto& s : samples)
        if (s.i_dc > 0.0 && std::isfinite(s.i_dc) && std::isfinite(s.v_be)) usable.push_back(s);
    if (usable.size() < 2)
        throw InputError("fit_exponential: need at least 2 samples with i_dc > 0, got " +
                         std::to_string(usable.size()));

    // Centered sums keep the normal equations well conditioned.
    const double n = static_cast<double>(usable.size());
    double mean_v = 0.0, mean_y = 0.0;
    for (const auto& s : usable) {
        mean_v += s.v_be;
        mean_y += std::log(s.i_dc);
    }
    mean_v /= n;
    mean_y /= n;

    double sxx = 0.0, sxy = 0.0;
    for (const auto& s : usable) {
        const double dv = s.v_be - mean_v;
        sxx += dv * dv;
        sxy += dv * (std::log(s.i_dc) - mean_y);
    }
    if (sxx == 0.0) throw DegenerateDesignError("fit_exponential: all v_be values are equal");

    const double slope = sxy / sxx;
    const double intercept = mean_y - slope * mean_v;
    return {std::exp(intercept), slope * v_t, usable.size()};
}

/// Two-column `v_be,i_dc` CSV with a single header line; LF or CRLF.
[[nodiscard]] inline std::vector<IvSample> read_iv_csv(std::istream& in) {
    std::vector<IvSample> out;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
                line.erase(0, 3);  // UTF-8 BOM
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw InputError("iv csv line " + std::to_string(line_no) + ": expected two columns");
        IvSample s;
        try {
            std::size_t used = 0;
            const std::string a = line.substr(0, comma);
            const std::string b = line.substr(comma + 1);
            s.v_be = std::stod(a, &used);
            if (a.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(a);
            s.i_dc = std::stod(b, &used);
            if (b.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(b);
        } catch (const std::logic_error&) {
            throw InputError("iv csv line " + std::to_string(line_no) + ": non-numeric field");
        }
        out.push_back(s);
    }
    if (!header_seen) throw InputError("iv csv: empty input");
    return out;
}

// =============================================================================
// Tank resonance
// =============================================================================

enum class TankMode { two_cap, three_cap };

[[nodiscard]] inline std::string_view tank_mode_name(TankMode m) {
    return m == TankMode::two_cap ? "two-cap" : "three-cap";
}

[[nodiscard]] inline TankMode parse_tank_mode(std::string_view s) {
    if (s == "two-cap") return TankMode::two_cap;
    if (s == "three-cap") return TankMode::three_cap;
    throw InputError("unknown tank mode '" + std::string(s) + "' (expected two-cap or three-cap)");
}

/// two-cap: C1 in series with C2 (Colpitts divider).
/// three-cap: C1, C2 and C3 all in series (Clapp series tank).
[[nodiscard]] inline double resonant_frequency(const CircuitParams& c, TankMode mode) {
    c.validate();
    const double cs = mode == TankMode::two_cap ? c.c1 * c.c2 / (c.c1 + c.c2)
                                                : 1.0 / (1.0 / c.c1 + 1.0 / c.c2 + 1.0 / c.c3);
    return 1.0 / (2.0 * std::numbers::pi * std::sqrt(c.l3 * cs));
}

}  // namespace clapp
