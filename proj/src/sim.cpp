#include "wefsim/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <numeric>
#include <ostream>
#include <thread>

#include "wefsim/errors.hpp"
#include "wefsim/rng.hpp"

namespace wefsim {

namespace {

// Seed-stream tags. Client streams depend only on (master_seed, id, round),
// never on the client count, so removing clients does not perturb the rest.
enum : std::uint64_t {
    kTagData = 1,
    kTagSplit = 2,
    kTagPartition = 3,
    kTagInit = 4,
    kTagClient = 5,
};

}  // namespace

Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.samples < 2) throw precondition_error("make_synthetic: need at least 2 samples");
    if (spec.features < 1) throw precondition_error("make_synthetic: need at least 1 feature");
    if (spec.noise <= 0.0) throw precondition_error("make_synthetic: noise must be positive");
    if (spec.separation < 0.0) throw precondition_error("make_synthetic: separation must be >= 0");

    Rng rng(seed);
    Dataset d;
    d.class_count = 2;
    d.features = Matrix(spec.samples, spec.features);
    d.labels.resize(static_cast<std::size_t>(spec.samples));
    const double direction = 1.0 / std::sqrt(static_cast<double>(spec.features));
    for (int r = 0; r < spec.samples; ++r) {
        const int label = r % 2;
        const double center = (label == 0 ? -0.5 : 0.5) * spec.separation * direction;
        for (int c = 0; c < spec.features; ++c) {
            d.features(r, c) = center + rng.normal(0.0, spec.noise);
        }
        d.labels[static_cast<std::size_t>(r)] = label;
    }
    return d;
}

int free_rider_count(const ExperimentConfig& cfg) {
    return static_cast<int>(std::floor(cfg.clients * cfg.free_rider_ratio));
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.clients < 1) throw precondition_error("config: clients must be >= 1");
    if (cfg.rounds < 1) throw precondition_error("config: rounds must be >= 1");
    if (!(cfg.free_rider_ratio >= 0.0 && cfg.free_rider_ratio < 1.0)) {
        throw precondition_error("config: free_rider_ratio must be in [0, 1)");
    }
    if (cfg.defense_mode == DefenseMode::wef_defense && cfg.clients < 2) {
        throw precondition_error("config: wef_defense needs at least 2 clients");
    }
    if (cfg.hidden_layers.empty()) {
        throw precondition_error("config: need at least one hidden layer");
    }
    for (int h : cfg.hidden_layers) {
        if (h < 1) throw precondition_error("config: hidden layer sizes must be >= 1");
    }
    if (!(cfg.train.learning_rate >= 0.0) || !std::isfinite(cfg.train.learning_rate)) {
        throw precondition_error("config: learning_rate must be finite and >= 0");
    }
    if (!(cfg.train.momentum >= 0.0 && cfg.train.momentum < 1.0)) {
        throw precondition_error("config: momentum must be in [0, 1)");
    }
    if (cfg.train.batch_size < 1) throw precondition_error("config: batch_size must be >= 1");
    if (cfg.train.local_epochs < 1) throw precondition_error("config: local_epochs must be >= 1");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 3.0)) {
        throw precondition_error("config: epsilon must be in (0, 3)");
    }
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
        throw precondition_error("config: test_fraction must be in (0, 1)");
    }
    if (cfg.distribution == DistributionKind::dirichlet && cfg.dirichlet_beta <= 0.0) {
        throw precondition_error("config: dirichlet_beta must be positive");
    }
    if (cfg.use_csv && cfg.csv_path.empty()) {
        throw precondition_error("config: csv source needs csv_path");
    }
    if (!cfg.use_csv) {
        if (cfg.synthetic.samples < 2) throw precondition_error("config: synthetic_samples must be >= 2");
        if (cfg.synthetic.features < 1) throw precondition_error("config: synthetic_features must be >= 1");
        if (cfg.synthetic.noise <= 0.0) throw precondition_error("config: synthetic_noise must be positive");
        if (cfg.synthetic.separation < 0.0) {
            throw precondition_error("config: synthetic_separation must be >= 0");
        }
    }
    if (cfg.free_rider_ratio > 0.0) {
        if (cfg.attack.random_range <= 0.0) {
            throw precondition_error("config: random_weight_range must be positive");
        }
        if (cfg.attack.perturbation_sigma <= 0.0) {
            throw precondition_error("config: perturbation_sigma must be positive");
        }
        if (cfg.attack.adaptive_schedule.empty()) {
            throw precondition_error("config: adaptive_schedule must be non-empty");
        }
        for (double s : cfg.attack.adaptive_schedule) {
            if (s <= 0.0) throw precondition_error("config: adaptive sigmas must be positive");
        }
    }
    for (int r : cfg.snapshot_rounds) {
        if (r < 1 || r > cfg.rounds) {
            throw precondition_error("config: snapshot round " + std::to_string(r) +
                                     " outside [1, " + std::to_string(cfg.rounds) + "]");
        }
    }
    if (cfg.threads < 1) throw precondition_error("config: threads must be >= 1");
}

PreparedData prepare_experiment_data(const ExperimentConfig& cfg) {
    validate_config(cfg);

    Dataset full = cfg.use_csv
                       ? load_csv(cfg.csv_path)
                       : make_synthetic(cfg.synthetic, derive_seed(cfg.master_seed, kTagData));
    if (cfg.normalize) full = normalize_minmax(full);

    auto [train, test] = train_test_split(full, cfg.test_fraction,
                                          derive_seed(cfg.master_seed, kTagSplit));

    PreparedData prep;
    prep.free_rider_count = ::wefsim::free_rider_count(cfg);
    prep.benign_count = cfg.clients - prep.free_rider_count;

    // free-riders hold no data: the training set is divided among benign clients
    const std::uint64_t part_seed = derive_seed(cfg.master_seed, kTagPartition);
    prep.partition = cfg.distribution == DistributionKind::iid
                         ? partition_iid(train, prep.benign_count, part_seed)
                         : partition_dirichlet(train, prep.benign_count, cfg.dirichlet_beta,
                                               part_seed);
    prep.shards.reserve(static_cast<std::size_t>(prep.benign_count));
    for (const auto& idx : prep.partition.assignments) prep.shards.push_back(take_rows(train, idx));

    prep.model_spec.clear();
    int in_dim = train.feature_dim();
    for (int h : cfg.hidden_layers) {
        prep.model_spec.push_back({in_dim, h, Activation::relu});
        in_dim = h;
    }
    prep.model_spec.push_back({in_dim, full.class_count, Activation::identity});

    prep.train = std::move(train);
    prep.test = std::move(test);
    return prep;
}

std::uint64_t model_digest(const ModelWeights& m) {
    std::uint64_t h = 1469598103934665603ULL;
    for_each_param(m, [&h](const double& v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffULL;
            h *= 1099511628211ULL;
        }
    });
    return h;
}

double hma(const std::vector<RoundRecord>& records, Group group) {
    if (records.empty()) throw precondition_error("hma: no records");
    double best = 0.0;
    for (const auto& r : records) {
        best = std::max(best, group == Group::benign ? r.mean_acc_benign : r.mean_acc_free_rider);
    }
    return best;
}

std::optional<int> detection_round(const std::vector<RoundRecord>& records) {
    for (const auto& r : records) {
        if (r.partition_match) return r.round;
    }
    return std::nullopt;
}

namespace {

struct ClientState {
    bool is_free_rider = false;
    WefTracker tracker;
    GlobalHistory history;       // free-riders only
    ModelWeights upload;         // refreshed every round
};

bool same_id_set(const std::vector<int>& a, const std::vector<int>& b) {
    return a == b;  // both kept sorted ascending
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, std::ostream* log, int verbosity) {
    PreparedData prep = prepare_experiment_data(cfg);
    const int k = cfg.clients;
    const int benign_count = prep.benign_count;

    RunResult result;
    for (int i = benign_count; i < k; ++i) result.free_riders.push_back(i);
    std::vector<int> benign_ids;
    for (int i = 0; i < benign_count; ++i) benign_ids.push_back(i);

    const ModelWeights initial = init_model(prep.model_spec, derive_seed(cfg.master_seed, kTagInit));
    const Matrix initial_penultimate = penultimate_weights(initial);

    ModelWeights model_clean = initial;
    ModelWeights model_flagged = initial;

    std::vector<ClientState> clients(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        auto& c = clients[static_cast<std::size_t>(i)];
        c.is_free_rider = i >= benign_count;
        c.tracker = wef_init(initial_penultimate);
    }
    // before the first separation everyone receives the initial model
    std::vector<bool> in_flagged_group(static_cast<std::size_t>(k), false);

    double running_hma_benign = 0.0;
    double running_hma_free_rider = 0.0;

    // Per round: each client does O(T') tracker passes over its penultimate
    // matrix; the server phase is O(K) score vectors plus O(K) aggregation.
    for (int round = 1; round <= cfg.rounds; ++round) {
        auto run_client = [&](int i) {
            auto& c = clients[static_cast<std::size_t>(i)];
            const ModelWeights& received =
                in_flagged_group[static_cast<std::size_t>(i)] ? model_flagged : model_clean;
            wef_rebase(c.tracker, penultimate_weights(received));
            const std::uint64_t seed =
                derive_seed(cfg.master_seed, kTagClient, static_cast<std::uint64_t>(i),
                            static_cast<std::uint64_t>(round));
            std::vector<Matrix> penultimates;
            if (c.is_free_rider) {
                c.history.received.push_back(received);
                auto trajectory =
                    craft_trajectory(cfg.attack, c.history, cfg.train.local_epochs, seed);
                penultimates.reserve(trajectory.size());
                for (const auto& w : trajectory) penultimates.push_back(penultimate_weights(w));
                c.upload = std::move(trajectory.back());
            } else {
                LocalTrainResult trained;
                try {
                    trained = train_local(received, prep.shards[static_cast<std::size_t>(i)],
                                          cfg.train, seed);
                } catch (const training_diverged& e) {
                    throw training_diverged("round " + std::to_string(round) + ", client " +
                                            std::to_string(i) + ": " + e.what());
                }
                penultimates.reserve(trained.trajectory.size());
                for (const auto& w : trained.trajectory) {
                    penultimates.push_back(penultimate_weights(w));
                }
                c.upload = std::move(trained.final);
            }
            wef_run_trajectory(c.tracker, penultimates);
        };

        const int workers = std::min(cfg.threads, k);
        if (workers <= 1) {
            for (int i = 0; i < k; ++i) run_client(i);
        } else {
            std::atomic<int> next{0};
            std::vector<std::exception_ptr> failures(static_cast<std::size_t>(k));
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(workers));
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (;;) {
                        const int i = next.fetch_add(1);
                        if (i >= k) break;
                        try {
                            run_client(i);
                        } catch (...) {
                            failures[static_cast<std::size_t>(i)] = std::current_exception();
                        }
                    }
                });
            }
            for (auto& t : pool) t.join();
            for (const auto& f : failures) {
                if (f) std::rethrow_exception(f);
            }
        }

        // server phase
        RoundRecord record;
        record.round = round;

        if (cfg.defense_mode == DefenseMode::wef_defense) {
            std::vector<WefMatrix> matrices;
            matrices.reserve(static_cast<std::size_t>(k));
            for (const auto& c : clients) matrices.push_back(c.tracker.counts);
            SeparationReport report = separate(matrices, cfg.epsilon);

            std::vector<ModelWeights> clean_updates;
            std::vector<ModelWeights> flagged_updates;
            for (int id : report.clean) clean_updates.push_back(clients[static_cast<std::size_t>(id)].upload);
            for (int id : report.flagged) flagged_updates.push_back(clients[static_cast<std::size_t>(id)].upload);

            if (clean_updates.empty() && log) {
                *log << "round " << round << ": clean group empty, carrying its model forward\n";
            }
            model_clean = aggregate_group(model_clean, clean_updates);
            model_flagged = aggregate_group(model_flagged, flagged_updates);

            std::fill(in_flagged_group.begin(), in_flagged_group.end(), false);
            for (int id : report.flagged) in_flagged_group[static_cast<std::size_t>(id)] = true;

            record.dev = report.dev;
            record.xi = report.xi;
            record.flagged = report.flagged;
            record.exact_match = same_id_set(report.flagged, result.free_riders);
            record.partition_match =
                record.exact_match ||
                (!result.free_riders.empty() && same_id_set(report.flagged, benign_ids));
        } else {
            std::vector<ModelWeights> updates;
            updates.reserve(static_cast<std::size_t>(k));
            for (const auto& c : clients) updates.push_back(c.upload);
            model_clean = fedavg(updates);
            model_flagged = model_clean;
            std::fill(in_flagged_group.begin(), in_flagged_group.end(), false);
        }

        record.acc_clean = evaluate_accuracy(model_clean, prep.test);
        record.acc_flagged = cfg.defense_mode == DefenseMode::wef_defense
                                 ? evaluate_accuracy(model_flagged, prep.test)
                                 : record.acc_clean;

        double benign_sum = 0.0;
        double free_rider_sum = 0.0;
        for (int i = 0; i < k; ++i) {
            const double delivered =
                in_flagged_group[static_cast<std::size_t>(i)] ? record.acc_flagged : record.acc_clean;
            if (i < benign_count) {
                benign_sum += delivered;
            } else {
                free_rider_sum += delivered;
            }
        }
        record.mean_acc_benign = benign_sum / benign_count;
        record.mean_acc_free_rider =
            result.free_riders.empty() ? 0.0
                                       : free_rider_sum / static_cast<double>(result.free_riders.size());
        running_hma_benign = std::max(running_hma_benign, record.mean_acc_benign);
        running_hma_free_rider = std::max(running_hma_free_rider, record.mean_acc_free_rider);
        record.hma_benign = running_hma_benign;
        record.hma_free_rider = running_hma_free_rider;
        record.clean_model_digest = model_digest(model_clean);
        record.flagged_model_digest = model_digest(model_flagged);

        if (std::find(cfg.snapshot_rounds.begin(), cfg.snapshot_rounds.end(), round) !=
            cfg.snapshot_rounds.end()) {
            WefSnapshot snap;
            snap.round = round;
            for (const auto& c : clients) snap.matrices.push_back(c.tracker.counts);
            result.snapshots.push_back(std::move(snap));
        }

        if (log && verbosity >= 1) {
            *log << "round " << round << " acc_clean=" << record.acc_clean
                 << " acc_flagged=" << record.acc_flagged << " xi=" << record.xi << " flagged={";
            for (std::size_t j = 0; j < record.flagged.size(); ++j) {
                if (j) *log << ',';
                *log << record.flagged[j];
            }
            *log << "}\n";
        }
        if (log && verbosity >= 2) {
            for (int i = 0; i < k; ++i) {
                const auto& c = clients[static_cast<std::size_t>(i)];
                *log << "round " << round << " client " << i << " phase="
                     << (c.is_free_rider ? "attack" : "train")
                     << " alpha=" << c.tracker.last_alpha << "\n";
            }
        }

        result.records.push_back(std::move(record));
    }

    result.hma_benign = running_hma_benign;
    result.hma_free_rider = running_hma_free_rider;
    result.detection_round = detection_round(result.records);
    result.final_clean_model = std::move(model_clean);
    result.final_flagged_model = std::move(model_flagged);
    for (const auto& c : clients) result.client_alphas.push_back(c.tracker.alpha_history);
    return result;
}

}  // namespace wefsim
