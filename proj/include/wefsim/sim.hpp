#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wefsim/attacks.hpp"
#include "wefsim/data.hpp"
#include "wefsim/defense.hpp"
#include "wefsim/nn.hpp"
#include "wefsim/wef.hpp"

namespace wefsim {

// Two Gaussian blobs of equal size, centered at +/- separation/2 along the
// normalized all-ones direction.
struct SyntheticSpec {
    int samples = 2000;
    int features = 16;
    double separation = 4.0;
    double noise = 1.0;
};

Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

struct ExperimentConfig {
    // data
    bool use_csv = false;
    std::string csv_path;
    SyntheticSpec synthetic;
    double test_fraction = 0.2;
    bool normalize = true;
    DistributionKind distribution = DistributionKind::iid;
    double dirichlet_beta = 0.5;
    // model
    std::vector<int> hidden_layers{32};
    // local training
    TrainConfig train;
    // federation
    int clients = 10;      // K
    int rounds = 50;       // T
    double free_rider_ratio = 0.1;
    AttackStrategy attack;
    // defense
    DefenseMode defense_mode = DefenseMode::wef_defense;
    double epsilon = 0.05;
    // run
    std::uint64_t master_seed = 42;
    std::vector<int> snapshot_rounds;
    int threads = 1;
};

// Throws precondition_error on any invalid field or combination.
void validate_config(const ExperimentConfig& cfg);

int free_rider_count(const ExperimentConfig& cfg);  // floor(K * ratio)

struct RoundRecord {
    int round = 0;                   // 1-based
    double acc_clean = 0.0;          // test accuracy of the clean group's model
    double acc_flagged = 0.0;        // test accuracy of the flagged group's model
    std::vector<double> dev;         // empty under fedavg_undefended
    double xi = 0.0;
    std::vector<int> flagged;        // ascending client ids
    bool exact_match = false;        // flagged == ground-truth free-rider set
    bool partition_match = false;    // groups equal the ground-truth split, either labeling
    double mean_acc_benign = 0.0;    // mean accuracy delivered to ground-truth benign clients
    double mean_acc_free_rider = 0.0;
    double hma_benign = 0.0;         // running maxima of the two means above
    double hma_free_rider = 0.0;
    std::uint64_t clean_model_digest = 0;
    std::uint64_t flagged_model_digest = 0;
};

struct WefSnapshot {
    int round = 0;
    std::vector<WefMatrix> matrices;  // indexed by client id
};

struct RunResult {
    std::vector<RoundRecord> records;
    std::vector<int> free_riders;  // ground-truth ids
    double hma_benign = 0.0;
    double hma_free_rider = 0.0;
    std::optional<int> detection_round;
    std::vector<WefSnapshot> snapshots;
    ModelWeights final_clean_model;
    ModelWeights final_flagged_model;
    std::vector<std::vector<double>> client_alphas;  // per client, per local step
};

// Everything run_experiment derives from the config before round 1. Exposed
// so partition inspection sees exactly what a run would use.
struct PreparedData {
    Dataset train;
    Dataset test;
    Partition partition;             // over the benign clients only
    std::vector<Dataset> shards;     // one per benign client, id order
    ModelSpec model_spec;
    int benign_count = 0;
    int free_rider_count = 0;
};

PreparedData prepare_experiment_data(const ExperimentConfig& cfg);

// Runs the full pipeline: distribute group models, honest training or
// attack crafting, WEF collection, separation, per-group aggregation,
// metrics. Deterministic given the config, including under threads > 1.
RunResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr,
                         int verbosity = 0);

enum class Group { benign, free_rider };

// Highest mean accuracy delivered to the group's members over all rounds.
double hma(const std::vector<RoundRecord>& records, Group group);

// First round whose separation matches the ground-truth split (either
// labeling of the two groups); nullopt if never.
std::optional<int> detection_round(const std::vector<RoundRecord>& records);

// FNV-1a over the raw bit patterns of every parameter.
std::uint64_t model_digest(const ModelWeights& m);

}  // namespace wefsim
