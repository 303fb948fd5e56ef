// clapp: command-line front end for the Clapp oscillator analysis library.
//
//   clapp <subcommand> [--config file] [--out dir] [--set key=value]... [--seed n]

#include "clapp/cli.hpp"
#include "clapp/config.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"Clapp oscillator analysis: equilibrium, eigenvalues, chaos boundary, Lyapunov exponent"};

    std::string command;
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool dump = false;

    std::string names;
    for (auto n : clapp::kSubcommands) names += (names.empty() ? "" : ", ") + std::string(n);

    app.add_option("subcommand", command, "One of: " + names)->required();
    app.add_option("--config", config_path, "Configuration file (key = value lines)");
    app.add_option("--out", out_dir, "Output directory for CSV files (overrides out_dir)");
    app.add_option("--set", overrides, "Override one key, e.g. --set beta=150 (repeatable)");
    app.add_option("--seed", seed, "Reserved for randomized tooling; analyses are deterministic");
    app.add_flag("--dump-config", dump, "Print the resolved configuration before running");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : clapp::kExitInput;
    }

    clapp::RunConfig cfg;
    std::set<std::string> seen;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path, std::ios::binary);
            if (!in) throw clapp::InputError("cannot open config file " + config_path);
            std::ostringstream text;
            text << in.rdbuf();
            cfg = clapp::parse_config(text.str(), &seen);
        }
        for (const auto& o : overrides) {
            clapp::apply_override(cfg, o);
            seen.insert(std::string(clapp::detail::trim(o.substr(0, o.find('=')))));
        }
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        clapp::validate(cfg);
    } catch (const clapp::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return clapp::kExitInput;
    }

    if (dump) std::cout << clapp::dump_config(cfg);

    clapp::RunFlags flags;
    flags.beta_explicit = seen.count("beta") != 0;
    return clapp::run_subcommand(command, cfg, flags, std::cout, std::cerr);
}
