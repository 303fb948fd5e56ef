#pragma once

// CSV emitters. Doubles are written with 17 significant digits so every value
// round-trips exactly.

#include "clapp/chaos.hpp"
#include "clapp/integrate.hpp"
#include "clapp/model.hpp"

#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace clapp {

[[nodiscard]] inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "t,v_c1,v_c2,v_c3,i_l3\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const State& s = traj.states[k];
        out << format_double(traj.times[k]) << ',' << format_double(s.v_c1) << ',' << format_double(s.v_c2) << ','
            << format_double(s.v_c3) << ',' << format_double(s.i_l3) << '\n';
    }
}

inline void write_phase_csv(std::ostream& out, Component x, Component y,
                            const std::vector<std::pair<double, double>>& pts) {
    out << component_name(x) << ',' << component_name(y) << '\n';
    for (const auto& [a, b] : pts) out << format_double(a) << ',' << format_double(b) << '\n';
}

/// Failed points carry `nan` and the classification `error`.
inline void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
    out << "r_e,max_real_part,classification\n";
    for (const auto& p : sweep.points) {
        out << format_double(p.r_e) << ',' << (p.ok ? format_double(p.max_real_part) : std::string("nan")) << ','
            << (p.ok ? stability_name(p.classification) : std::string_view("error")) << '\n';
    }
}

inline void write_lyapunov_csv(std::ostream& out, const LyapunovEstimate& est) {
    out << "renorm_index,t,lambda_running\n";
    for (const auto& s : est.trace)
        out << s.index << ',' << format_double(s.t) << ',' << format_double(s.lambda_running) << '\n';
}

}  // namespace clapp
