#pragma once

// =============================================================================
// Run configuration
// =============================================================================
// Line-based `key = value` text. `#` starts a comment. Numbers accept one SI
// suffix: p n u m k M G (so `47.1p`, `0.753n`, `5k`). Keys missing from the
// text keep the shipped defaults, which are the chaotic design point.
// =============================================================================

#include "clapp/chaos.hpp"
#include "clapp/csv.hpp"
#include "clapp/equilibrium.hpp"
#include "clapp/error.hpp"
#include "clapp/integrate.hpp"
#include "clapp/model.hpp"
#include "clapp/stability.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace clapp {

struct SweepSpec {
    double lo = 1.0;
    double hi = 500.0;
    std::size_t count = 100;
    Spacing spacing = Spacing::log;

    friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct RunConfig {
    BjtParams bjt;
    CircuitParams circuit;
    IntegratorConfig integrator;
    State initial_offset{1e-3, 0.0, 0.0, 0.0};  ///< added to p_eq for simulate/phase/lyapunov

    double eq_tol = 1e-12;
    std::size_t eq_max_iter = 200;
    double zero_band = 1e-3;

    SweepSpec sweep;
    double boundary_lo = 1.0;
    double boundary_hi = 500.0;
    double boundary_tol = 1e-3;

    double lyapunov_horizon = 200e-9;
    double lyapunov_renorm = 10e-12;

    TankMode freq_mode = TankMode::two_cap;
    Component phase_x = Component::v_c1;
    Component phase_y = Component::v_c2;
    std::string fit_input;
    std::string out_dir = ".";

    [[nodiscard]] EquilibriumOptions equilibrium_options() const {
        return {eq_tol, static_cast<int>(eq_max_iter), RootMethod::newton_bisection};
    }
    [[nodiscard]] ChaosOptions chaos_options() const { return {equilibrium_options(), {zero_band}, 0}; }
    [[nodiscard]] LyapunovOptions lyapunov_options() const {
        return {integrator.rel_tol, integrator.abs_tol, integrator.abs_tol};
    }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Configuration problem; `key()` names the offending key when known.
class ConfigError : public InputError {
public:
    ConfigError(const std::string& what, std::string key = {}) : InputError(what), key_(std::move(key)) {}
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_si_number(std::string_view text, const std::string& key) {
    const std::string s(trim(text));
    if (s.empty()) throw ConfigError(key + ": missing value", key);
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || errno == ERANGE) throw ConfigError(key + ": '" + s + "' is not a number", key);
    std::string_view rest(end);
    if (rest.size() == 1) {
        switch (rest[0]) {
            case 'p': v *= 1e-12; break;
            case 'n': v *= 1e-9; break;
            case 'u': v *= 1e-6; break;
            case 'm': v *= 1e-3; break;
            case 'k': v *= 1e3; break;
            case 'M': v *= 1e6; break;
            case 'G': v *= 1e9; break;
            default: throw ConfigError(key + ": unknown suffix '" + std::string(rest) + "'", key);
        }
    } else if (!rest.empty()) {
        throw ConfigError(key + ": trailing characters '" + std::string(rest) + "'", key);
    }
    if (!std::isfinite(v)) throw ConfigError(key + ": value must be finite", key);
    return v;
}

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

enum class Constraint { any, positive, non_negative };

struct KeySpec {
    std::string_view name;
    std::function<void(RunConfig&, std::string_view, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline void check(double v, Constraint c, const std::string& key) {
    if (c == Constraint::positive && !(v > 0.0)) throw ConfigError(key + ": must be > 0", key);
    if (c == Constraint::non_negative && !(v >= 0.0)) throw ConfigError(key + ": must be >= 0", key);
}

template <class Member>
KeySpec real_key(std::string_view name, Member member, Constraint c) {
    return {name,
            [member, c](RunConfig& cfg, std::string_view v, const std::string& key) {
                const double x = parse_si_number(v, key);
                check(x, c, key);
                member(cfg) = x;
            },
            [member](const RunConfig& cfg) { return format_double(member(cfg)); }};
}

template <class Member>
KeySpec count_key(std::string_view name, Member member) {
    return {name,
            [member](RunConfig& cfg, std::string_view v, const std::string& key) {
                const double x = parse_si_number(v, key);
                if (!(x >= 1.0) || x != std::floor(x) || x > 1e15)
                    throw ConfigError(key + ": must be a positive integer", key);
                member(cfg) = static_cast<std::size_t>(x);
            },
            [member](const RunConfig& cfg) { return std::to_string(member(cfg)); }};
}

inline const std::vector<KeySpec>& key_table() {
    using C = Constraint;
    static const std::vector<KeySpec> table = [] {
        std::vector<KeySpec> t;
        // transistor
        t.push_back(real_key("i_s", [](auto& c) -> auto& { return c.bjt.i_s; }, C::non_negative));
        t.push_back(real_key("beta", [](auto& c) -> auto& { return c.bjt.beta; }, C::positive));
        t.push_back(real_key("eta", [](auto& c) -> auto& { return c.bjt.eta; }, C::positive));
        t.push_back(real_key("v_t", [](auto& c) -> auto& { return c.bjt.v_t; }, C::positive));
        t.push_back(real_key("exponent_cap", [](auto& c) -> auto& { return c.bjt.exponent_cap; }, C::positive));
        // circuit
        t.push_back(real_key("c1", [](auto& c) -> auto& { return c.circuit.c1; }, C::positive));
        t.push_back(real_key("c2", [](auto& c) -> auto& { return c.circuit.c2; }, C::positive));
        t.push_back(real_key("c3", [](auto& c) -> auto& { return c.circuit.c3; }, C::positive));
        t.push_back(real_key("l3", [](auto& c) -> auto& { return c.circuit.l3; }, C::positive));
        t.push_back(real_key("r1", [](auto& c) -> auto& { return c.circuit.r1; }, C::positive));
        t.push_back(real_key("r2", [](auto& c) -> auto& { return c.circuit.r2; }, C::positive));
        t.push_back(real_key("r_e", [](auto& c) -> auto& { return c.circuit.r_e; }, C::positive));
        t.push_back(real_key("v_cc", [](auto& c) -> auto& { return c.circuit.v_cc; }, C::any));
        // equilibrium / stability
        t.push_back(real_key("eq_tol", [](auto& c) -> auto& { return c.eq_tol; }, C::positive));
        t.push_back(count_key("eq_max_iter", [](auto& c) -> auto& { return c.eq_max_iter; }));
        t.push_back(real_key("zero_band", [](auto& c) -> auto& { return c.zero_band; }, C::non_negative));
        // integrator
        t.push_back(real_key("rel_tol", [](auto& c) -> auto& { return c.integrator.rel_tol; }, C::positive));
        t.push_back(real_key("abs_tol_v_c1", [](auto& c) -> auto& { return c.integrator.abs_tol[0]; }, C::positive));
        t.push_back(real_key("abs_tol_v_c2", [](auto& c) -> auto& { return c.integrator.abs_tol[1]; }, C::positive));
        t.push_back(real_key("abs_tol_v_c3", [](auto& c) -> auto& { return c.integrator.abs_tol[2]; }, C::positive));
        t.push_back(real_key("abs_tol_i_l3", [](auto& c) -> auto& { return c.integrator.abs_tol[3]; }, C::positive));
        t.push_back(real_key("t_start", [](auto& c) -> auto& { return c.integrator.t_start; }, C::any));
        t.push_back(real_key("t_end", [](auto& c) -> auto& { return c.integrator.t_end; }, C::any));
        t.push_back(real_key("max_step", [](auto& c) -> auto& { return c.integrator.max_step; }, C::non_negative));
        t.push_back(real_key("initial_step", [](auto& c) -> auto& { return c.integrator.initial_step; }, C::non_negative));
        t.push_back(real_key("sample_interval", [](auto& c) -> auto& { return c.integrator.sample_interval; }, C::positive));
        t.push_back(real_key("init_dv_c1", [](auto& c) -> auto& { return c.initial_offset.v_c1; }, C::any));
        t.push_back(real_key("init_dv_c2", [](auto& c) -> auto& { return c.initial_offset.v_c2; }, C::any));
        t.push_back(real_key("init_dv_c3", [](auto& c) -> auto& { return c.initial_offset.v_c3; }, C::any));
        t.push_back(real_key("init_di_l3", [](auto& c) -> auto& { return c.initial_offset.i_l3; }, C::any));
        // sweep / boundary / lyapunov
        t.push_back(real_key("sweep_lo", [](auto& c) -> auto& { return c.sweep.lo; }, C::positive));
        t.push_back(real_key("sweep_hi", [](auto& c) -> auto& { return c.sweep.hi; }, C::positive));
        t.push_back(count_key("sweep_count", [](auto& c) -> auto& { return c.sweep.count; }));
        t.push_back({"sweep_spacing",
                     [](RunConfig& c, std::string_view v, const std::string& key) {
                         try {
                             c.sweep.spacing = parse_spacing(trim(v));
                         } catch (const InputError& e) {
                             throw ConfigError(key + ": " + e.what(), key);
                         }
                     },
                     [](const RunConfig& c) { return std::string(spacing_name(c.sweep.spacing)); }});
        t.push_back(real_key("boundary_lo", [](auto& c) -> auto& { return c.boundary_lo; }, C::positive));
        t.push_back(real_key("boundary_hi", [](auto& c) -> auto& { return c.boundary_hi; }, C::positive));
        t.push_back(real_key("boundary_tol", [](auto& c) -> auto& { return c.boundary_tol; }, C::positive));
        t.push_back(real_key("lyapunov_horizon", [](auto& c) -> auto& { return c.lyapunov_horizon; }, C::positive));
        t.push_back(real_key("lyapunov_renorm", [](auto& c) -> auto& { return c.lyapunov_renorm; }, C::positive));
        // output selection
        t.push_back({"freq_mode",
                     [](RunConfig& c, std::string_view v, const std::string& key) {
                         try {
                             c.freq_mode = parse_tank_mode(trim(v));
                         } catch (const InputError& e) {
                             throw ConfigError(key + ": " + e.what(), key);
                         }
                     },
                     [](const RunConfig& c) { return std::string(tank_mode_name(c.freq_mode)); }});
        t.push_back({"phase_x",
                     [](RunConfig& c, std::string_view v, const std::string& key) {
                         try {
                             c.phase_x = parse_component(trim(v));
                         } catch (const InputError& e) {
                             throw ConfigError(key + ": " + e.what(), key);
                         }
                     },
                     [](const RunConfig& c) { return std::string(component_name(c.phase_x)); }});
        t.push_back({"phase_y",
                     [](RunConfig& c, std::string_view v, const std::string& key) {
                         try {
                             c.phase_y = parse_component(trim(v));
                         } catch (const InputError& e) {
                             throw ConfigError(key + ": " + e.what(), key);
                         }
                     },
                     [](const RunConfig& c) { return std::string(component_name(c.phase_y)); }});
        t.push_back({"fit_input", [](RunConfig& c, std::string_view v, const std::string&) { c.fit_input = trim(v); },
                     [](const RunConfig& c) { return c.fit_input; }});
        t.push_back({"out_dir",
                     [](RunConfig& c, std::string_view v, const std::string& key) {
                         if (trim(v).empty()) throw ConfigError(key + ": must not be empty", key);
                         c.out_dir = trim(v);
                     },
                     [](const RunConfig& c) { return c.out_dir; }});
        return t;
    }();
    return table;
}

inline const KeySpec* find_key(std::string_view name) {
    for (const auto& k : key_table())
        if (k.name == name) return &k;
    return nullptr;
}

inline std::string nearest_key(std::string_view name) {
    std::string best;
    std::size_t best_d = static_cast<std::size_t>(-1);
    for (const auto& k : key_table()) {
        const auto d = edit_distance(name, k.name);
        if (d < best_d) {
            best_d = d;
            best = k.name;
        }
    }
    return best;
}

}  // namespace detail

/// Names of every accepted key, in dump order.
[[nodiscard]] inline std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : detail::key_table()) out.emplace_back(k.name);
    return out;
}

/// Checks cross-key invariants.
inline void validate(const RunConfig& c) {
    if (!(c.integrator.t_end > c.integrator.t_start)) throw ConfigError("t_end: must exceed t_start", "t_end");
    if (!(c.sweep.hi >= c.sweep.lo)) throw ConfigError("sweep_hi: must be >= sweep_lo", "sweep_hi");
    if (!(c.boundary_hi > c.boundary_lo)) throw ConfigError("boundary_hi: must exceed boundary_lo", "boundary_hi");
    if (c.phase_x == c.phase_y) throw ConfigError("phase_y: must differ from phase_x", "phase_y");
    if (c.eq_max_iter > 1'000'000) throw ConfigError("eq_max_iter: must be <= 1000000", "eq_max_iter");
}

/// Applies one `key = value` assignment.
inline void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
    const std::string k(detail::trim(key));
    const auto* spec = detail::find_key(k);
    if (spec == nullptr)
        throw ConfigError("unknown key '" + k + "' (did you mean '" + detail::nearest_key(k) + "'?)", k);
    spec->set(cfg, value, k);
}

/// Applies a `key=value` override as given on the command line.
inline void apply_override(RunConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "': expected key=value");
    apply_setting(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

/// Parses configuration text on top of `base` (the defaults unless given).
/// Keys that appear in the text are added to `seen` when it is non-null.
[[nodiscard]] inline RunConfig parse_config(std::string_view text, std::set<std::string>* seen = nullptr,
                                            RunConfig base = {}) {
    RunConfig cfg = std::move(base);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        const std::string where = "config line " + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
        const std::string key(detail::trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigError(where + "missing key before '='");
        try {
            apply_setting(cfg, key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what(), e.key());
        }
        if (seen != nullptr) seen->insert(key);
    }
    validate(cfg);
    return cfg;
}

/// Normalized `key = value` listing of every key; parse_config() of the
/// result reproduces `cfg` exactly.
[[nodiscard]] inline std::string dump_config(const RunConfig& cfg) {
    std::ostringstream out;
    for (const auto& k : detail::key_table()) out << k.name << " = " << k.get(cfg) << '\n';
    return out.str();
}

}  // namespace clapp
