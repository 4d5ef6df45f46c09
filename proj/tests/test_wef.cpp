#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "oracles.hpp"
#include "wefsim/errors.hpp"
#include "wefsim/nn.hpp"
#include "wefsim/rng.hpp"
#include "wefsim/wef.hpp"

using namespace wefsim;

namespace {

Matrix mat(int rows, int cols, std::initializer_list<double> values) {
    Matrix m(rows, cols);
    std::size_t i = 0;
    for (double v : values) m.data[i++] = v;
    return m;
}

Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (auto& v : m.data) v = scale * rng.normal();
    return m;
}

}  // namespace

TEST_CASE("wef_init starts from an all-zero matrix") {
    const WefTracker t = wef_init(3, 4);
    CHECK(t.counts.rows == 3);
    CHECK(t.counts.cols == 4);
    CHECK(t.counts.total() == 0);
    CHECK(t.last_alpha == 0.0);
    CHECK_THROWS_AS(wef_init(0, 4), precondition_error);
}

TEST_CASE("wef_threshold is the mean absolute change") {
    const Matrix prev = mat(2, 2, {0, 0, 0, 0});
    const Matrix next = mat(2, 2, {0.1, -0.1, 0.2, 0});
    CHECK(wef_threshold(prev, next) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(wef_threshold(prev, next) == doctest::Approx(oracles::threshold(prev, next)));
    CHECK(wef_threshold(next, next) == 0.0);

    // homogeneity: scaling both matrices scales the threshold
    Matrix sp = prev, sn = next;
    for (auto& v : sp.data) v *= 3.0;
    for (auto& v : sn.data) v *= 3.0;
    CHECK(wef_threshold(sp, sn) == doctest::Approx(0.3));

    CHECK_THROWS_AS(wef_threshold(prev, Matrix(3, 2)), precondition_error);
}

TEST_CASE("wef_update increments only strictly-above-threshold entries") {
    WefTracker t = wef_init(2, 2);
    wef_update(t, mat(2, 2, {0.1, -0.1, 0.2, 0}));
    // alpha = 0.1; only |0.2| > 0.1 counts, |0.1| does not (strict)
    CHECK(t.counts.at(0, 0) == 0);
    CHECK(t.counts.at(0, 1) == 0);
    CHECK(t.counts.at(1, 0) == 1);
    CHECK(t.counts.at(1, 1) == 0);
    CHECK(t.last_alpha == doctest::Approx(0.1));
}

TEST_CASE("a constant trajectory leaves the counts at zero") {
    WefTracker t = wef_init(mat(2, 2, {1, 2, 3, 4}));
    for (int i = 0; i < 5; ++i) wef_update(t, mat(2, 2, {1, 2, 3, 4}));
    CHECK(t.counts.total() == 0);
    CHECK(t.last_alpha == 0.0);
}

TEST_CASE("a uniform change increments nothing") {
    // every |delta| equals the mean, and the comparison is strict
    WefTracker t = wef_init(2, 3);
    wef_update(t, mat(2, 3, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5}));
    CHECK(t.counts.total() == 0);
}

TEST_CASE("updates accumulate as the sum of per-step masks") {
    const Matrix start = mat(1, 3, {0, 0, 0});
    const Matrix step1 = mat(1, 3, {1.0, 0.1, 0.1});
    const Matrix step2 = mat(1, 3, {1.0, 2.0, 0.1});

    const WefMatrix mask1 = oracles::frequency_step(WefMatrix(1, 3), start, step1);
    const WefMatrix mask2 = oracles::frequency_step(WefMatrix(1, 3), step1, step2);

    WefTracker t = wef_init(start);
    wef_update(t, step1);
    wef_update(t, step2);
    for (int c = 0; c < 3; ++c) {
        CHECK(t.counts.at(0, c) == mask1.at(0, c) + mask2.at(0, c));
    }
}

TEST_CASE("wef_run_trajectory folds updates in order") {
    Rng rng(3);
    const Matrix start = random_matrix(3, 4, rng);
    const std::vector<Matrix> steps = {random_matrix(3, 4, rng), random_matrix(3, 4, rng),
                                       random_matrix(3, 4, rng)};

    WefTracker folded = wef_init(start);
    wef_run_trajectory(folded, steps);

    WefTracker stepped = wef_init(start);
    for (const auto& s : steps) wef_update(stepped, s);
    CHECK(folded.counts == stepped.counts);
    CHECK(folded.counts == oracles::frequency_trajectory(start, steps));

    WefTracker single = wef_init(start);
    wef_run_trajectory(single, std::vector<Matrix>{steps[0]});
    CHECK(single.counts == oracles::frequency_step(WefMatrix(3, 4), start, steps[0]));

    WefTracker empty_case = wef_init(start);
    CHECK_THROWS_AS(wef_run_trajectory(empty_case, std::vector<Matrix>{}), precondition_error);
}

TEST_CASE("trajectory order matters") {
    const Matrix start = mat(1, 2, {0, 0});
    const Matrix a = mat(1, 2, {1, 1});
    const Matrix b = mat(1, 2, {3, 1});

    WefTracker forward = wef_init(start);
    wef_run_trajectory(forward, std::vector<Matrix>{a, b});
    WefTracker backward = wef_init(start);
    wef_run_trajectory(backward, std::vector<Matrix>{b, a});

    CHECK(forward.counts != backward.counts);
    // frozen from the hand-computed masks
    CHECK(forward.counts.at(0, 0) == 1);
    CHECK(forward.counts.at(0, 1) == 0);
    CHECK(backward.counts.at(0, 0) == 2);
    CHECK(backward.counts.at(0, 1) == 0);
}

TEST_CASE("honest training produces non-zero counts") {
    Rng rng(9);
    Dataset data;
    data.class_count = 2;
    data.features = Matrix(60, 4);
    data.labels.resize(60);
    for (int r = 0; r < 60; ++r) {
        const int label = r % 2;
        for (int c = 0; c < 4; ++c) data.features(r, c) = (label ? 0.8 : 0.2) + 0.1 * rng.normal();
        data.labels[r] = label;
    }
    const auto model = init_model({{4, 6, Activation::relu}, {6, 2, Activation::identity}}, 4);
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.5;
    cfg.batch_size = 16;
    cfg.local_epochs = 3;
    const auto result = train_local(model, data, cfg, 5);

    WefTracker t = wef_init(penultimate_weights(model));
    std::vector<Matrix> steps;
    for (const auto& w : result.trajectory) steps.push_back(penultimate_weights(w));
    wef_run_trajectory(t, steps);
    CHECK(t.counts.total() > 0);
    CHECK(t.alpha_history.size() == 3);
}

TEST_CASE("counts never decrease and respect the per-step bound") {
    Rng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        const int rows = 1 + rng.uniform_int(4);
        const int cols = 1 + rng.uniform_int(4);
        WefTracker t = wef_init(random_matrix(rows, cols, rng));
        WefMatrix before = t.counts;
        const int steps = 1 + rng.uniform_int(6);
        for (int s = 0; s < steps; ++s) {
            wef_update(t, random_matrix(rows, cols, rng));
            for (std::size_t i = 0; i < t.counts.counts.size(); ++i) {
                CHECK(t.counts.counts[i] >= before.counts[i]);
            }
            before = t.counts;
        }
        for (int c : t.counts.counts) CHECK(c <= steps);
        CHECK(t.counts.total() <= static_cast<long long>(steps) * rows * cols);
    }
}

TEST_CASE("tracker result matches the oracle on random trajectories") {
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const int rows = 1 + rng.uniform_int(4);
        const int cols = 1 + rng.uniform_int(4);
        const Matrix start = random_matrix(rows, cols, rng);
        std::vector<Matrix> steps;
        const int n = 1 + rng.uniform_int(5);
        for (int s = 0; s < n; ++s) steps.push_back(random_matrix(rows, cols, rng));

        WefTracker t = wef_init(start);
        wef_run_trajectory(t, steps);
        CHECK(t.counts == oracles::frequency_trajectory(start, steps));
    }
}

TEST_CASE("wef_rebase keeps counts but swaps the comparison baseline") {
    WefTracker t = wef_init(mat(1, 2, {0, 0}));
    wef_update(t, mat(1, 2, {1.0, 0.1}));
    const WefMatrix counts_before = t.counts;

    wef_rebase(t, mat(1, 2, {5.0, 5.0}));
    CHECK(t.counts == counts_before);
    // next update compares against the rebased weights: no change, no counts
    wef_update(t, mat(1, 2, {5.0, 5.0}));
    CHECK(t.counts == counts_before);

    CHECK_THROWS_AS(wef_rebase(t, Matrix(2, 2)), precondition_error);
}
