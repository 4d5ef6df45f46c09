#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "wefsim/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"wefsim: federated-learning simulator with free-rider separation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    int verbosity = 0;

    auto* run = app.add_subcommand("run", "Run an experiment from a config file");
    run->add_option("--config", config_path, "Config file path")->required();
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--seed", seed, "Override master_seed");
    run->add_option("--threads", threads, "Override worker thread count");
    run->add_flag("-v,--verbose", verbosity, "Per-round (and per-client at -vv) logging");

    std::string inspect_config;
    auto* inspect = app.add_subcommand("inspect-partition",
                                       "Show per-client sample counts and class histograms");
    inspect->add_option("--config", inspect_config, "Config file path")->required();

    std::string run_dir;
    std::string to_dir;
    std::vector<int> rounds;
    auto* export_cmd = app.add_subcommand("export-heatmaps", "Export WEF snapshot grids");
    export_cmd->add_option("--run", run_dir, "Run directory written by `run`")->required();
    export_cmd->add_option("--rounds", rounds, "Rounds to export")->required()->delimiter(',');
    export_cmd->add_option("--to", to_dir, "Target directory (default <run>/heatmaps)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wefsim::kExitConfig;
    }

    if (run->parsed()) {
        return wefsim::cmd_run(config_path, out_dir, seed, threads, std::cout, std::cerr,
                               verbosity);
    }
    if (inspect->parsed()) {
        return wefsim::cmd_inspect_partition(inspect_config, std::cout, std::cerr);
    }
    if (export_cmd->parsed()) {
        return wefsim::cmd_export_heatmaps(run_dir, rounds, to_dir, std::cout, std::cerr);
    }
    return wefsim::kExitConfig;
}
