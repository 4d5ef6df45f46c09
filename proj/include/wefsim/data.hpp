#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wefsim/matrix.hpp"

namespace wefsim {

struct Dataset {
    Matrix features;           // N x d
    std::vector<int> labels;   // values in [0, class_count)
    int class_count = 0;

    int size() const { return features.rows; }
    int feature_dim() const { return features.cols; }
};

bool operator==(const Dataset& a, const Dataset& b);

// Comma-separated file, one header row, all cells numeric, last column is
// an integer class label. Throws parse_error with the offending line number.
Dataset load_csv(const std::string& path);

// Maps each feature column affinely onto [0, 1]; constant columns map to 0.
Dataset normalize_minmax(const Dataset& d);

// Seeded shuffle, then split with |test| = round(N * test_fraction).
std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed);

enum class DistributionKind { iid, dirichlet };

struct Partition {
    std::vector<std::vector<int>> assignments;  // disjoint index lists covering the dataset
    DistributionKind kind = DistributionKind::iid;
    double beta = 0.0;  // dirichlet concentration, unused for iid
};

// Equal shards (sizes differ by at most one) from a seeded shuffle.
Partition partition_iid(const Dataset& train, int clients, std::uint64_t seed);

// Per class, draws proportions from Dir(beta * 1_K) and deals that class's
// samples out by largest-remainder rounding. Empty clients are repaired by
// moving one sample from the largest client.
Partition partition_dirichlet(const Dataset& train, int clients, double beta,
                              std::uint64_t seed);

Dataset take_rows(const Dataset& d, const std::vector<int>& rows);

}  // namespace wefsim
