// Batch front-end: simulate / calibrate / compare over a key=value config,
// with presets carrying both shipped case studies.
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <armsim/armsim.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIo = 4;

struct CommonFlags {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    std::string seed;
    std::string jobs;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "key = value config file");
    cmd->add_option("--preset", flags.preset, "named preset (heat-2.4, re-wall-3.4)");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--seed", flags.seed, "RNG seed for synthetic boundary data");
    cmd->add_option("--jobs", flags.jobs, "parallel workers for cell/sweep loops");
}

armsim::BuiltRun materialize(const CommonFlags& flags) {
    armsim::KvMap map;
    if (!flags.preset.empty()) map = armsim::preset_map(flags.preset);
    if (!flags.config_path.empty()) {
        map = armsim::overlay(std::move(map), armsim::load_config_file(flags.config_path));
    }
    if (map.empty()) {
        throw armsim::ConfigError("no configuration: pass --preset and/or --config");
    }
    // Command-line flags override both preset and file.
    if (!flags.out_dir.empty()) map["out"] = flags.out_dir;
    if (!flags.seed.empty()) map["seed"] = flags.seed;
    if (!flags.jobs.empty()) map["jobs"] = flags.jobs;
    return armsim::build_run(map);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Averaged and complete heat / heat-moisture wall models"};
    app.require_subcommand(1);

    CommonFlags flags;
    CLI::App* cmd_simulate = app.add_subcommand("simulate", "run one model over the horizon");
    CLI::App* cmd_calibrate =
        app.add_subcommand("calibrate", "fit fluctuation candidates against a reference run");
    CLI::App* cmd_compare =
        app.add_subcommand("compare", "sweep (tau, dt) and report errors and cost");
    add_common(cmd_simulate, flags);
    add_common(cmd_calibrate, flags);
    add_common(cmd_compare, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const armsim::BuiltRun run = materialize(flags);
        if (cmd_simulate->parsed()) {
            armsim::run_simulate(run);
        } else if (cmd_calibrate->parsed()) {
            if (!armsim::run_calibrate(run)) {
                std::cerr << "error: no calibration cell converged\n";
                return kExitDiverged;
            }
        } else {
            armsim::run_compare(run);
        }
    } catch (const armsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const armsim::DivergedError& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const armsim::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
