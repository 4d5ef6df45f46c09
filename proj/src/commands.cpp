#include "wefsim/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <regex>
#include <set>

#include "wefsim/config.hpp"
#include "wefsim/errors.hpp"
#include "wefsim/output.hpp"
#include "wefsim/sim.hpp"

namespace fs = std::filesystem;

namespace wefsim {

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override, std::optional<int> threads_override,
            std::ostream& out, std::ostream& err, int verbosity) {
    ExperimentConfig cfg;
    try {
        cfg = parse_config_file(config_path);
        if (seed_override) cfg.master_seed = *seed_override;
        if (threads_override) cfg.threads = *threads_override;
        validate_config(cfg);
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        const RunResult result = run_experiment(cfg, verbosity > 0 ? &out : nullptr, verbosity);
        write_run_outputs(out_dir, cfg, result);
        out << "run complete: " << result.records.size() << " rounds\n";
        out << "hma_benign = " << format_double(result.hma_benign) << "\n";
        out << "hma_free_rider = " << format_double(result.hma_free_rider) << "\n";
        out << "detection_round = "
            << (result.detection_round ? std::to_string(*result.detection_round) : "none") << "\n";
        out << "results written to " << out_dir << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_inspect_partition(const std::string& config_path, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg;
    try {
        cfg = parse_config_file(config_path);
        validate_config(cfg);
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        const PreparedData prep = prepare_experiment_data(cfg);
        long long total = 0;
        for (int i = 0; i < cfg.clients; ++i) {
            if (i < prep.benign_count) {
                const Dataset& shard = prep.shards[static_cast<std::size_t>(i)];
                total += shard.size();
                std::vector<int> hist(static_cast<std::size_t>(prep.train.class_count), 0);
                for (int label : shard.labels) ++hist[static_cast<std::size_t>(label)];
                out << "client " << i << ": benign samples=" << shard.size() << " classes";
                for (std::size_t c = 0; c < hist.size(); ++c) out << ' ' << c << ':' << hist[c];
                out << "\n";
            } else {
                out << "client " << i << ": free-rider samples=0\n";
            }
        }
        out << "train size = " << prep.train.size() << ", test size = " << prep.test.size() << "\n";
        out << "covered = " << total << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_export_heatmaps(const std::string& run_dir, const std::vector<int>& rounds,
                        const std::string& to_dir, std::ostream& out, std::ostream& err) {
    const fs::path snap_dir = fs::path(run_dir) / "snapshots";
    const std::regex name_re(R"(wef_client(\d+)_round(\d+)\.csv)");

    std::set<int> available;
    std::vector<std::pair<int, fs::path>> files;  // (round, path)
    if (fs::is_directory(snap_dir)) {
        for (const auto& entry : fs::directory_iterator(snap_dir)) {
            std::smatch m;
            const std::string name = entry.path().filename().string();
            if (std::regex_match(name, m, name_re)) {
                const int round = std::stoi(m[2].str());
                available.insert(round);
                files.emplace_back(round, entry.path());
            }
        }
    }

    std::vector<int> missing;
    for (int r : rounds) {
        if (available.count(r) == 0) missing.push_back(r);
    }
    if (!missing.empty() || rounds.empty()) {
        err << "missing snapshots for rounds:";
        for (int r : missing) err << ' ' << r;
        err << "\navailable rounds:";
        for (int r : available) err << ' ' << r;
        err << "\n";
        return kExitRuntime;
    }

    try {
        const fs::path target = to_dir.empty() ? fs::path(run_dir) / "heatmaps" : fs::path(to_dir);
        fs::create_directories(target);
        int copied = 0;
        for (const auto& [round, path] : files) {
            if (std::find(rounds.begin(), rounds.end(), round) == rounds.end()) continue;
            fs::copy_file(path, target / path.filename(), fs::copy_options::overwrite_existing);
            ++copied;
        }
        out << "exported " << copied << " heatmap grids to " << target.string() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace wefsim
