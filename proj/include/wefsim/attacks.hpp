#pragma once

#include <cstdint>
#include <vector>

#include "wefsim/nn.hpp"

namespace wefsim {

enum class AttackKind {
    ordinary,                 // upload the received model unchanged
    random_weight,            // every parameter uniform on [-R, R], fresh per entry
    stochastic_perturbation,  // received model plus Gaussian noise per entry
    delta_weight,             // linear ramp along the last two received models
    adaptive                  // random walk with a cycling noise schedule
};

struct AttackStrategy {
    AttackKind kind = AttackKind::ordinary;
    double random_range = 1e-3;       // R
    double perturbation_sigma = 1e-3;
    std::vector<double> adaptive_schedule{1e-3, 1e-4, 1e-5};
    bool adaptive_delta_base = true;  // start the walk at the delta-weight endpoint
};

// Every global model a free-rider has received, in order.
struct GlobalHistory {
    std::vector<ModelWeights> received;
};

// Produces the fake per-local-epoch weight trajectory for one round. The
// client's upload is the last entry; its WEF matrix is computed from the
// trajectory exactly as for honest training.
std::vector<ModelWeights> craft_trajectory(const AttackStrategy& strategy,
                                           const GlobalHistory& history, int local_epochs,
                                           std::uint64_t seed);

}  // namespace wefsim
