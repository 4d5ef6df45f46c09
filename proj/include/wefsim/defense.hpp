#pragma once

#include <vector>

#include "wefsim/nn.hpp"
#include "wefsim/wef.hpp"

namespace wefsim {

enum class DefenseMode { wef_defense, fedavg_undefended };

struct DefenseConfig {
    DefenseMode mode = DefenseMode::wef_defense;
    double epsilon = 0.05;
};

// Dis_i = sqrt( sum_{j != i} ||F_i - F_j||^2_fro ). Requires K >= 2.
std::vector<double> dis_scores(const std::vector<WefMatrix>& matrices);

// Cos_i = mean over j != i of cosine(F_i, F_j), flattening matrices;
// cosine is 0 whenever either operand has zero norm.
std::vector<double> cos_scores(const std::vector<WefMatrix>& matrices);

// Avg_i = sum(counts_i) / (H * W).
std::vector<double> avg_scores(const std::vector<WefMatrix>& matrices);

// Combined deviation. Each metric splits the clients into two clusters at
// the widest gap; the higher-variance cluster is the consensus and the
// other cluster's members are charged the squared normalized gap between
// the clusters. Metrics whose cluster variances tie exactly follow the
// orientation the unambiguous metrics established (ties everywhere fall to
// the larger, then the higher-valued cluster as consensus). Charges sum
// over the three metrics and rescale so the Dev vector always totals 3;
// when no metric has any spread every client gets 3/K.
std::vector<double> dev_scores(const std::vector<double>& dis, const std::vector<double>& cos,
                               const std::vector<double>& avg);

struct SeparationReport {
    std::vector<double> dis;
    std::vector<double> cos;
    std::vector<double> avg;
    std::vector<double> dev;
    double xi = 0.0;
    std::vector<int> flagged;  // dev_i >= xi, ascending ids; never empty
    std::vector<int> clean;
};

// Full separation pass: scores, reputation threshold xi = max(Dev) - epsilon,
// and the two groups.
SeparationReport separate(const std::vector<WefMatrix>& matrices, double epsilon);

// Group model update from a common base; reduces algebraically to the plain
// elementwise mean of the uploads, which is how it is computed. An empty
// group carries the base forward unchanged.
ModelWeights aggregate_group(const ModelWeights& base, const std::vector<ModelWeights>& updates);

// Undefended baseline: elementwise mean with equal client weights.
ModelWeights fedavg(const std::vector<ModelWeights>& updates);

}  // namespace wefsim
