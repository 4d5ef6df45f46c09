#pragma once

#include <span>
#include <vector>

#include "wefsim/matrix.hpp"

namespace wefsim {

// Weight evolving frequency counts for the penultimate layer. Entries are
// non-negative and never decrease over a client's lifetime.
struct WefMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> counts;

    WefMatrix() = default;
    WefMatrix(int r, int c)
        : rows(r), cols(c), counts(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0) {}

    int& at(int r, int c) { return counts[static_cast<std::size_t>(r) * cols + c]; }
    int at(int r, int c) const { return counts[static_cast<std::size_t>(r) * cols + c]; }

    bool same_shape(const WefMatrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
    long long total() const;
};

bool operator==(const WefMatrix& a, const WefMatrix& b);
inline bool operator!=(const WefMatrix& a, const WefMatrix& b) { return !(a == b); }

struct WefTracker {
    WefMatrix counts;
    Matrix previous_weights;            // snapshot the next update compares against
    double last_alpha = 0.0;
    std::vector<double> alpha_history;  // one threshold per local step, all rounds
};

WefTracker wef_init(int rows, int cols);
WefTracker wef_init(const Matrix& starting_weights);

// Dynamic threshold: mean absolute elementwise difference.
double wef_threshold(const Matrix& prev, const Matrix& next);

// Increments counts[j,k] where |next[j,k] - prev[j,k]| > threshold (strict),
// then stores next as the new comparison baseline.
void wef_update(WefTracker& tracker, const Matrix& next_weights);

// Folds wef_update over the trajectory in order.
void wef_run_trajectory(WefTracker& tracker, std::span<const Matrix> trajectory);

// Cross-round seam: after the server distributes a model, the comparison
// baseline resets to the distributed weights so the first local step is not
// charged for the distribution jump. Counts keep accumulating.
void wef_rebase(WefTracker& tracker, const Matrix& distributed_weights);

}  // namespace wefsim
