#pragma once

// =============================================================================
// Subcommand dispatch
// =============================================================================
// Each subcommand runs one analysis on a resolved RunConfig, writes
// `<out_dir>/<name>.csv` and prints a one-line summary. Exit codes:
//   0 success, 1 input error, 2 numeric / convergence error.
// =============================================================================

#include "clapp/chaos.hpp"
#include "clapp/config.hpp"
#include "clapp/csv.hpp"
#include "clapp/equilibrium.hpp"
#include "clapp/error.hpp"
#include "clapp/integrate.hpp"
#include "clapp/model.hpp"
#include "clapp/stability.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace clapp {

inline constexpr std::array<std::string_view, 9> kSubcommands{
    "fit", "equilibrium", "eigs", "simulate", "phase", "sweep", "boundary", "lyapunov", "freq"};

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitNumeric = 2 };

struct RunFlags {
    bool beta_explicit = false;  ///< beta came from the config file or --set
};

namespace detail {

class CsvFile {
public:
    CsvFile(const std::string& dir, std::string_view name) {
        std::filesystem::create_directories(dir);
        path_ = (std::filesystem::path(dir) / (std::string(name) + ".csv")).string();
        out_.open(path_, std::ios::binary | std::ios::trunc);
        if (!out_) throw InputError("cannot open " + path_ + " for writing");
    }
    ~CsvFile() = default;

    std::ostream& stream() { return out_; }
    void close() {
        out_.close();
        if (!out_) throw InputError("failed writing " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
};

inline std::string complex_text(const Complex& z) {
    std::string s = format_double(z.real());
    s += z.imag() < 0.0 ? "-" : "+";
    s += format_double(std::abs(z.imag()));
    s += "i";
    return s;
}

inline State initial_state(const RunConfig& cfg) {
    const auto eq = solve_equilibrium(cfg.circuit, cfg.bjt, cfg.equilibrium_options());
    return eq.state + cfg.initial_offset;
}

inline void run_fit(const RunConfig& cfg, std::ostream& out) {
    if (cfg.fit_input.empty()) throw InputError("fit: set fit_input to a v_be,i_dc CSV file");
    std::ifstream in(cfg.fit_input, std::ios::binary);
    if (!in) throw InputError("fit: cannot open " + cfg.fit_input);
    const auto samples = read_iv_csv(in);
    const auto fit = fit_exponential(samples, cfg.bjt.v_t);
    CsvFile f(cfg.out_dir, "fit");
    f.stream() << "i_s,eta,samples_used\n"
               << format_double(fit.i_s) << ',' << format_double(fit.eta) << ',' << fit.samples_used << '\n';
    f.close();
    out << "fit: i_s=" << format_double(fit.i_s) << " A eta=" << format_double(fit.eta) << " from "
        << fit.samples_used << " samples\n";
}

inline void run_equilibrium(const RunConfig& cfg, std::ostream& out) {
    const auto eq = solve_equilibrium(cfg.circuit, cfg.bjt, cfg.equilibrium_options());
    const double scaled = eq.scaled_residual(cfg.circuit, cfg.bjt);
    CsvFile f(cfg.out_dir, "equilibrium");
    f.stream() << "v_c1,v_c2,v_c3,i_l3,i_b_eq,res_v_c1,res_v_c2,res_v_c3,res_i_l3,scaled_residual\n";
    const auto s = eq.state.to_array();
    const auto r = eq.residual.to_array();
    for (double v : s) f.stream() << format_double(v) << ',';
    f.stream() << format_double(eq.i_b_eq);
    for (double v : r) f.stream() << ',' << format_double(v);
    f.stream() << ',' << format_double(scaled) << '\n';
    f.close();
    out << "equilibrium: v_c1=" << format_double(s[0]) << " v_c2=" << format_double(s[1])
        << " v_c3=" << format_double(s[2]) << " i_l3=" << format_double(s[3])
        << " i_b_eq=" << format_double(eq.i_b_eq) << " scaled_residual=" << format_double(scaled) << '\n';
}

inline void run_eigs(const RunConfig& cfg, std::ostream& out) {
    const auto eq = solve_equilibrium(cfg.circuit, cfg.bjt, cfg.equilibrium_options());
    const auto rep = stability_report(cfg.circuit, cfg.bjt, eq, {cfg.zero_band});
    CsvFile f(cfg.out_dir, "eigs");
    f.stream() << "index,real,imag\n";
    for (std::size_t k = 0; k < 4; ++k)
        f.stream() << k << ',' << format_double(rep.eigenvalues[k].real()) << ','
                   << format_double(rep.eigenvalues[k].imag()) << '\n';
    f.close();
    out << "eigs:";
    for (const auto& z : rep.eigenvalues) out << ' ' << complex_text(z);
    out << " max_real=" << format_double(rep.max_real_part) << " " << stability_name(rep.classification) << '\n';
}

inline void run_simulate(const RunConfig& cfg, std::ostream& out) {
    const auto traj = simulate(cfg.circuit, cfg.bjt, initial_state(cfg), cfg.integrator);
    CsvFile f(cfg.out_dir, "simulate");
    write_trajectory_csv(f.stream(), traj);
    f.close();
    const State& last = traj.states.back();
    out << "simulate: " << traj.size() << " samples, " << traj.steps.accepted << " steps ("
        << traj.steps.rejected << " rejected), final v_c3=" << format_double(last.v_c3) << '\n';
}

inline void run_phase(const RunConfig& cfg, std::ostream& out) {
    const auto traj = simulate(cfg.circuit, cfg.bjt, initial_state(cfg), cfg.integrator);
    const auto pts = phase_projection(traj, cfg.phase_x, cfg.phase_y);
    CsvFile f(cfg.out_dir, "phase");
    write_phase_csv(f.stream(), cfg.phase_x, cfg.phase_y, pts);
    f.close();
    out << "phase: " << pts.size() << " points " << component_name(cfg.phase_x) << " vs "
        << component_name(cfg.phase_y) << '\n';
}

inline void run_sweep(const RunConfig& cfg, std::ostream& out) {
    const auto grid = make_grid(cfg.sweep.lo, cfg.sweep.hi, cfg.sweep.count, cfg.sweep.spacing);
    const auto sweep = sweep_re(cfg.circuit, cfg.bjt, grid, cfg.chaos_options());
    CsvFile f(cfg.out_dir, "sweep");
    write_sweep_csv(f.stream(), sweep);
    f.close();
    std::size_t unstable = 0, failed = 0, changes = 0;
    for (std::size_t k = 0; k < sweep.points.size(); ++k) {
        const auto& p = sweep.points[k];
        if (!p.ok) {
            ++failed;
            continue;
        }
        if (p.max_real_part > 0.0) ++unstable;
        if (k > 0 && sweep.points[k - 1].ok && (sweep.points[k - 1].max_real_part > 0.0) != (p.max_real_part > 0.0))
            ++changes;
    }
    out << "sweep: " << sweep.points.size() << " points, " << unstable << " unstable, " << changes
        << " sign changes, " << failed << " failed\n";
}

inline void run_boundary(const RunConfig& cfg, std::ostream& out) {
    const auto b = find_instability_boundary(cfg.circuit, cfg.bjt, cfg.boundary_lo, cfg.boundary_hi, cfg.boundary_tol,
                                             cfg.chaos_options());
    CsvFile f(cfg.out_dir, "boundary");
    f.stream() << "r_e,lo,hi,iterations\n"
               << format_double(b.r_e) << ',' << format_double(b.lo) << ',' << format_double(b.hi) << ','
               << b.iterations << '\n';
    f.close();
    out << "boundary: r_e=" << format_double(b.r_e) << " Ohm (bracket " << format_double(b.lo) << " .. "
        << format_double(b.hi) << ", " << b.iterations << " bisections)\n";
}

inline void run_lyapunov(const RunConfig& cfg, std::ostream& out) {
    const auto est = largest_lyapunov(cfg.circuit, cfg.bjt, initial_state(cfg), cfg.lyapunov_horizon,
                                      cfg.lyapunov_renorm, cfg.lyapunov_options());
    CsvFile f(cfg.out_dir, "lyapunov");
    write_lyapunov_csv(f.stream(), est);
    f.close();
    out << "lyapunov: lambda1=" << format_double(est.lambda1) << " 1/s over " << format_double(est.horizon)
        << " s (" << est.renorm_count << " renormalizations)\n";
}

inline void run_freq(const RunConfig& cfg, std::ostream& out) {
    const double two = resonant_frequency(cfg.circuit, TankMode::two_cap);
    const double three = resonant_frequency(cfg.circuit, TankMode::three_cap);
    CsvFile f(cfg.out_dir, "freq");
    f.stream() << "mode,frequency\n"
               << "two-cap," << format_double(two) << '\n'
               << "three-cap," << format_double(three) << '\n';
    f.close();
    out << "freq: " << format_double(cfg.freq_mode == TankMode::two_cap ? two : three) << " Hz ("
        << tank_mode_name(cfg.freq_mode) << ")\n";
}

}  // namespace detail

/// Runs one subcommand. Errors are reported on `err` and mapped to exit codes.
[[nodiscard]] inline int run_subcommand(std::string_view name, const RunConfig& cfg, const RunFlags& flags,
                                        std::ostream& out, std::ostream& err) {
    using Runner = void (*)(const RunConfig&, std::ostream&);
    Runner runner = nullptr;
    if (name == "fit") runner = detail::run_fit;
    else if (name == "equilibrium") runner = detail::run_equilibrium;
    else if (name == "eigs") runner = detail::run_eigs;
    else if (name == "simulate") runner = detail::run_simulate;
    else if (name == "phase") runner = detail::run_phase;
    else if (name == "sweep") runner = detail::run_sweep;
    else if (name == "boundary") runner = detail::run_boundary;
    else if (name == "lyapunov") runner = detail::run_lyapunov;
    else if (name == "freq") runner = detail::run_freq;

    if (runner == nullptr) {
        err << "error: unknown subcommand '" << name << "'\n";
        return kExitInput;
    }
    if (!flags.beta_explicit && name != "fit" && name != "freq") {
        err << "warning: beta not set explicitly, using " << format_double(cfg.bjt.beta)
            << " (no published current gain for this transistor)\n";
    }
    try {
        validate(cfg);
        runner(cfg, out);
        return kExitOk;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

}  // namespace clapp
