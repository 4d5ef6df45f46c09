#include "wefsim/attacks.hpp"

#include "wefsim/errors.hpp"
#include "wefsim/rng.hpp"

namespace wefsim {

std::vector<ModelWeights> craft_trajectory(const AttackStrategy& strategy,
                                           const GlobalHistory& history, int local_epochs,
                                           std::uint64_t seed) {
    if (history.received.empty()) throw precondition_error("craft_trajectory: empty history");
    if (local_epochs < 1) throw precondition_error("craft_trajectory: local_epochs must be >= 1");

    const ModelWeights& current = history.received.back();
    Rng rng(seed);
    std::vector<ModelWeights> trajectory;
    trajectory.reserve(static_cast<std::size_t>(local_epochs));

    switch (strategy.kind) {
        case AttackKind::ordinary:
            trajectory.assign(static_cast<std::size_t>(local_epochs), current);
            break;

        case AttackKind::random_weight: {
            if (strategy.random_range <= 0.0) {
                throw precondition_error("craft_trajectory: random_range must be positive");
            }
            for (int k = 0; k < local_epochs; ++k) {
                ModelWeights fake = current;
                for_each_param(fake, [&](double& v) {
                    v = rng.uniform(-strategy.random_range, strategy.random_range);
                });
                trajectory.push_back(std::move(fake));
            }
            break;
        }

        case AttackKind::stochastic_perturbation: {
            if (strategy.perturbation_sigma <= 0.0) {
                throw precondition_error("craft_trajectory: perturbation_sigma must be positive");
            }
            for (int k = 0; k < local_epochs; ++k) {
                ModelWeights fake = current;
                for_each_param(fake,
                               [&](double& v) { v += rng.normal(0.0, strategy.perturbation_sigma); });
                trajectory.push_back(std::move(fake));
            }
            break;
        }

        case AttackKind::delta_weight: {
            // difference of the last two received models; zero before round 2
            const ModelWeights& previous = history.received.size() >= 2
                                               ? history.received[history.received.size() - 2]
                                               : current;
            const ModelWeights delta = current - previous;
            for (int k = 1; k <= local_epochs; ++k) {
                trajectory.push_back(current +
                                     (static_cast<double>(k) / local_epochs) * delta);
            }
            break;
        }

        case AttackKind::adaptive: {
            if (strategy.adaptive_schedule.empty()) {
                throw precondition_error("craft_trajectory: adaptive schedule must be non-empty");
            }
            const ModelWeights& previous = history.received.size() >= 2
                                               ? history.received[history.received.size() - 2]
                                               : current;
            ModelWeights walk = strategy.adaptive_delta_base
                                    ? current + (current - previous)
                                    : current;
            for (int k = 0; k < local_epochs; ++k) {
                const double sigma = strategy.adaptive_schedule[static_cast<std::size_t>(k) %
                                                                strategy.adaptive_schedule.size()];
                if (sigma <= 0.0) {
                    throw precondition_error("craft_trajectory: adaptive sigmas must be positive");
                }
                for_each_param(walk, [&](double& v) { v += rng.normal(0.0, sigma); });
                trajectory.push_back(walk);
            }
            break;
        }
    }
    return trajectory;
}

}  // namespace wefsim
