#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "wefsim/commands.hpp"
#include "wefsim/config.hpp"
#include "wefsim/errors.hpp"
#include "wefsim/output.hpp"
#include "wefsim/sim.hpp"

using namespace wefsim;
namespace fs = std::filesystem;

namespace {

const char* kMinimalConfig = R"(# minimal fast experiment
[data]
source = synthetic
synthetic_samples = 400
synthetic_features = 6
test_fraction = 0.2

[model]
hidden_layers = 8

[train]
learning_rate = 0.3
momentum = 0.9
batch_size = 32
local_epochs = 3

[federation]
clients = 5
rounds = 3
free_rider_ratio = 0.2

[attack]
kind = ordinary

[defense]
mode = wef_defense
epsilon = 0.05

[run]
master_seed = 7
snapshot_rounds = 1,3
)";

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string write_config(const TempDir& dir, const std::string& text) {
    const std::string path = (dir.path / "config.txt").string();
    std::ofstream out(path);
    out << text;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_lines(const std::string& text) {
    int lines = 0;
    for (char c : text) {
        if (c == '\n') ++lines;
    }
    return lines;
}

}  // namespace

TEST_CASE("config parse -> serialize -> parse is a fixed point") {
    const ExperimentConfig cfg = parse_config_text(kMinimalConfig, "inline");
    const std::string first = serialize_config(cfg);
    const ExperimentConfig reparsed = parse_config_text(first, "inline2");
    CHECK(serialize_config(reparsed) == first);

    CHECK(cfg.clients == 5);
    CHECK(cfg.rounds == 3);
    CHECK(cfg.attack.kind == AttackKind::ordinary);
    CHECK(cfg.snapshot_rounds == std::vector<int>{1, 3});
    CHECK(cfg.defense_mode == DefenseMode::wef_defense);
}

TEST_CASE("config errors carry line numbers") {
    CHECK_THROWS_WITH_AS(parse_config_text("[data]\nbogus_key = 1\n", "cfg"),
                         doctest::Contains("cfg:2"), parse_error);
    CHECK_THROWS_WITH_AS(parse_config_text("[data]\nsource == synthetic\n", "cfg"),
                         doctest::Contains("source"), parse_error);
    CHECK_THROWS_WITH_AS(parse_config_text("key_without_section = 1\n", "cfg"),
                         doctest::Contains("cfg:1"), parse_error);
    CHECK_THROWS_AS(parse_config_text("[federation]\nclients = ten\n", "cfg"), parse_error);
}

TEST_CASE("defaults follow the documented experiment settings") {
    const ExperimentConfig cfg = parse_config_text("", "empty");
    CHECK(cfg.epsilon == 0.05);
    CHECK(cfg.dirichlet_beta == 0.5);
    CHECK(cfg.attack.random_range == 1e-3);
    CHECK(cfg.attack.adaptive_schedule == std::vector<double>{1e-3, 1e-4, 1e-5});
    CHECK(cfg.rounds == 50);
    CHECK(cfg.train.local_epochs == 3);
    CHECK(cfg.train.batch_size == 32);
    CHECK(cfg.clients == 10);
}

TEST_CASE("cmd_run writes the full run directory") {
    TempDir dir("wefsim_cli_run");
    const std::string config_path = write_config(dir, kMinimalConfig);
    const std::string out_dir = (dir.path / "out").string();

    std::ostringstream out, err;
    const int code = cmd_run(config_path, out_dir, std::nullopt, std::nullopt, out, err);
    CHECK(code == kExitOk);
    CHECK(err.str().empty());

    CHECK(fs::exists(fs::path(out_dir) / "manifest.txt"));
    CHECK(fs::exists(fs::path(out_dir) / "summary.json"));
    const std::string results = slurp(fs::path(out_dir) / "results.csv");
    CHECK(count_lines(results) == 1 + 3);  // header + one row per round

    // snapshots for rounds 1 and 3, 5 clients each
    for (int round : {1, 3}) {
        for (int id = 0; id < 5; ++id) {
            CHECK(fs::exists(fs::path(out_dir) / "snapshots" /
                             ("wef_client" + std::to_string(id) + "_round" +
                              std::to_string(round) + ".csv")));
        }
    }
}

TEST_CASE("rerunning from the manifest reproduces every output byte") {
    TempDir dir("wefsim_cli_rerun");
    const std::string config_path = write_config(dir, kMinimalConfig);
    const std::string out_a = (dir.path / "a").string();
    const std::string out_b = (dir.path / "b").string();

    std::ostringstream sink_out, sink_err;
    REQUIRE(cmd_run(config_path, out_a, std::nullopt, std::nullopt, sink_out, sink_err) == kExitOk);
    REQUIRE(cmd_run((fs::path(out_a) / "manifest.txt").string(), out_b, std::nullopt, std::nullopt,
                    sink_out, sink_err) == kExitOk);

    CHECK(slurp(fs::path(out_a) / "results.csv") == slurp(fs::path(out_b) / "results.csv"));
    CHECK(slurp(fs::path(out_a) / "summary.json") == slurp(fs::path(out_b) / "summary.json"));
    CHECK(slurp(fs::path(out_a) / "manifest.txt") == slurp(fs::path(out_b) / "manifest.txt"));
    CHECK(slurp(fs::path(out_a) / "snapshots" / "wef_client0_round1.csv") ==
          slurp(fs::path(out_b) / "snapshots" / "wef_client0_round1.csv"));
}

TEST_CASE("ratio and floor rule determine the instantiated free riders") {
    TempDir dir("wefsim_cli_ratio");
    std::string text = kMinimalConfig;
    text.replace(text.find("clients = 5"), 11, "clients = 10");
    text.replace(text.find("free_rider_ratio = 0.2"), 22, "free_rider_ratio = 0.3");
    const std::string config_path = write_config(dir, text);
    const std::string out_dir = (dir.path / "out").string();

    std::ostringstream out, err;
    REQUIRE(cmd_run(config_path, out_dir, std::nullopt, std::nullopt, out, err) == kExitOk);
    const std::string summary = slurp(fs::path(out_dir) / "summary.json");
    CHECK(summary.find("\"free_riders\": [\n    7,\n    8,\n    9\n  ]") != std::string::npos);
}

TEST_CASE("cmd_inspect_partition prints shard sizes without training") {
    TempDir dir("wefsim_cli_inspect");
    // 1250 synthetic samples, 0.2 test fraction -> 1000 train rows over 10 clients
    std::string text = R"([data]
source = synthetic
synthetic_samples = 1250
synthetic_features = 4
test_fraction = 0.2
distribution = iid

[federation]
clients = 10
rounds = 5
free_rider_ratio = 0

[run]
master_seed = 3
)";
    const std::string config_path = write_config(dir, text);

    std::ostringstream out, err;
    REQUIRE(cmd_inspect_partition(config_path, out, err) == kExitOk);
    const std::string printed = out.str();
    int rows_of_100 = 0;
    std::stringstream ss(printed);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.find("samples=100 ") != std::string::npos) ++rows_of_100;
    }
    CHECK(rows_of_100 == 10);
    CHECK(printed.find("covered = 1000") != std::string::npos);

    std::ostringstream out2, err2;
    REQUIRE(cmd_inspect_partition(config_path, out2, err2) == kExitOk);
    CHECK(out2.str() == printed);  // same seed, same report
}

TEST_CASE("cmd_inspect_partition covers the train set under dirichlet skew") {
    TempDir dir("wefsim_cli_inspect_dir");
    std::string text = R"([data]
source = synthetic
synthetic_samples = 1250
synthetic_features = 4
test_fraction = 0.2
distribution = dirichlet
dirichlet_beta = 0.5

[federation]
clients = 10
rounds = 5
free_rider_ratio = 0

[run]
master_seed = 3
)";
    const std::string config_path = write_config(dir, text);
    std::ostringstream out, err;
    REQUIRE(cmd_inspect_partition(config_path, out, err) == kExitOk);
    CHECK(out.str().find("covered = 1000") != std::string::npos);
}

TEST_CASE("cmd_export_heatmaps copies grids and reports missing rounds") {
    TempDir dir("wefsim_cli_export");
    const std::string config_path = write_config(dir, kMinimalConfig);
    const std::string out_dir = (dir.path / "out").string();
    std::ostringstream out, err;
    REQUIRE(cmd_run(config_path, out_dir, std::nullopt, std::nullopt, out, err) == kExitOk);

    std::ostringstream eout, eerr;
    CHECK(cmd_export_heatmaps(out_dir, {1, 3}, "", eout, eerr) == kExitOk);
    CHECK(fs::exists(fs::path(out_dir) / "heatmaps" / "wef_client0_round1.csv"));
    CHECK(fs::exists(fs::path(out_dir) / "heatmaps" / "wef_client4_round3.csv"));

    // the exported grid for the ordinary free rider (id 4 of 5) is all zeros
    const WefMatrix rider = read_wef_csv(
        (fs::path(out_dir) / "heatmaps" / "wef_client4_round3.csv").string());
    CHECK(rider.total() == 0);
    // a benign grid has positive total and the penultimate layer's shape (6 x 8)
    const WefMatrix benign = read_wef_csv(
        (fs::path(out_dir) / "heatmaps" / "wef_client0_round3.csv").string());
    CHECK(benign.total() > 0);
    CHECK(benign.rows == 6);
    CHECK(benign.cols == 8);

    std::ostringstream mout, merr;
    CHECK(cmd_export_heatmaps(out_dir, {2}, "", mout, merr) == kExitRuntime);
    CHECK(merr.str().find("available rounds: 1 3") != std::string::npos);
}

TEST_CASE("cmd_run rejects bad configs with exit code 1") {
    TempDir dir("wefsim_cli_bad");
    const std::string config_path = write_config(dir, "[data]\nsource = nonsense\n");
    std::ostringstream out, err;
    CHECK(cmd_run(config_path, (dir.path / "out").string(), std::nullopt, std::nullopt, out, err) ==
          kExitConfig);
    CHECK(!err.str().empty());

    std::ostringstream out2, err2;
    CHECK(cmd_run((dir.path / "missing.txt").string(), (dir.path / "out").string(), std::nullopt,
                  std::nullopt, out2, err2) == kExitConfig);
}

#ifdef WEFSIM_BIN
TEST_CASE("the wefsim binary maps outcomes to exit codes") {
    TempDir dir("wefsim_cli_binary");
    const std::string config_path = write_config(dir, kMinimalConfig);
    const std::string out_dir = (dir.path / "out").string();

    const auto run = [](const std::string& args) {
        const std::string cmd = std::string(WEFSIM_BIN) + " " + args + " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };

    CHECK(run("run --config " + config_path + " --out " + out_dir) == 0);
    CHECK(run("run --config " + config_path) == 1);                       // missing --out
    CHECK(run("run --config /nonexistent --out " + out_dir) == 1);        // bad config
    CHECK(run("inspect-partition --config " + config_path) == 0);
    CHECK(run("export-heatmaps --run " + out_dir + " --rounds 1,3") == 0);
    CHECK(run("export-heatmaps --run " + out_dir + " --rounds 2") == 2);  // missing snapshot
    CHECK(run("bogus-subcommand") == 1);
}
#endif
