#include "wefsim/wef.hpp"

#include <cmath>
#include <string>

#include "wefsim/errors.hpp"

namespace wefsim {

long long WefMatrix::total() const {
    long long sum = 0;
    for (int c : counts) sum += c;
    return sum;
}

bool operator==(const WefMatrix& a, const WefMatrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.counts == b.counts;
}

WefTracker wef_init(int rows, int cols) {
    if (rows < 1 || cols < 1) {
        throw precondition_error("wef_init: dimensions must be positive, got " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
    }
    WefTracker t;
    t.counts = WefMatrix(rows, cols);
    t.previous_weights = Matrix(rows, cols);
    return t;
}

WefTracker wef_init(const Matrix& starting_weights) {
    WefTracker t = wef_init(starting_weights.rows, starting_weights.cols);
    t.previous_weights = starting_weights;
    return t;
}

double wef_threshold(const Matrix& prev, const Matrix& next) {
    if (!prev.same_shape(next)) throw precondition_error("wef_threshold: shape mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < prev.data.size(); ++i) {
        sum += std::fabs(next.data[i] - prev.data[i]);
    }
    return sum / static_cast<double>(prev.data.size());
}

void wef_update(WefTracker& tracker, const Matrix& next_weights) {
    if (!tracker.previous_weights.same_shape(next_weights)) {
        throw precondition_error("wef_update: shape mismatch");
    }
    const double alpha = wef_threshold(tracker.previous_weights, next_weights);
    for (std::size_t i = 0; i < next_weights.data.size(); ++i) {
        if (std::fabs(next_weights.data[i] - tracker.previous_weights.data[i]) > alpha) {
            ++tracker.counts.counts[i];
        }
    }
    tracker.previous_weights = next_weights;
    tracker.last_alpha = alpha;
    tracker.alpha_history.push_back(alpha);
}

void wef_run_trajectory(WefTracker& tracker, std::span<const Matrix> trajectory) {
    if (trajectory.empty()) throw precondition_error("wef_run_trajectory: empty trajectory");
    for (const auto& step : trajectory) wef_update(tracker, step);
}

void wef_rebase(WefTracker& tracker, const Matrix& distributed_weights) {
    if (!tracker.previous_weights.same_shape(distributed_weights)) {
        throw precondition_error("wef_rebase: shape mismatch");
    }
    tracker.previous_weights = distributed_weights;
}

}  // namespace wefsim
