#include "wefsim/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>

#include "wefsim/errors.hpp"
#include "wefsim/rng.hpp"

namespace wefsim {

void validate_spec(const ModelSpec& spec) {
    if (spec.empty()) throw precondition_error("model spec: no layers");
    for (std::size_t i = 0; i < spec.size(); ++i) {
        if (spec[i].input_dim < 1 || spec[i].output_dim < 1) {
            throw precondition_error("model spec: layer " + std::to_string(i) +
                                     " has non-positive dimensions");
        }
        if (i + 1 < spec.size() && spec[i].output_dim != spec[i + 1].input_dim) {
            throw precondition_error("model spec: layer " + std::to_string(i) + " outputs " +
                                     std::to_string(spec[i].output_dim) + " but layer " +
                                     std::to_string(i + 1) + " expects " +
                                     std::to_string(spec[i + 1].input_dim));
        }
    }
    if (spec.back().activation != Activation::identity) {
        throw precondition_error("model spec: final layer activation must be identity");
    }
}

ModelSpec ModelWeights::spec() const {
    ModelSpec s;
    s.reserve(layers.size());
    for (const auto& l : layers) {
        s.push_back({l.weights.rows, l.weights.cols, l.activation});
    }
    return s;
}

bool ModelWeights::same_shape(const ModelWeights& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].weights.same_shape(other.layers[i].weights)) return false;
        if (layers[i].bias.size() != other.layers[i].bias.size()) return false;
    }
    return true;
}

bool operator==(const ModelWeights& a, const ModelWeights& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        if (a.layers[i].activation != b.layers[i].activation) return false;
        if (a.layers[i].weights != b.layers[i].weights) return false;
        if (a.layers[i].bias != b.layers[i].bias) return false;
    }
    return true;
}

namespace {

void require_same_shape(const ModelWeights& a, const ModelWeights& b, const char* op) {
    if (!a.same_shape(b)) throw precondition_error(std::string(op) + ": shape mismatch");
}

}  // namespace

ModelWeights operator+(const ModelWeights& a, const ModelWeights& b) {
    require_same_shape(a, b, "model add");
    ModelWeights out = a;
    for (std::size_t i = 0; i < out.layers.size(); ++i) {
        auto& l = out.layers[i];
        const auto& r = b.layers[i];
        for (std::size_t j = 0; j < l.weights.data.size(); ++j) l.weights.data[j] += r.weights.data[j];
        for (std::size_t j = 0; j < l.bias.size(); ++j) l.bias[j] += r.bias[j];
    }
    return out;
}

ModelWeights operator-(const ModelWeights& a, const ModelWeights& b) {
    require_same_shape(a, b, "model subtract");
    ModelWeights out = a;
    for (std::size_t i = 0; i < out.layers.size(); ++i) {
        auto& l = out.layers[i];
        const auto& r = b.layers[i];
        for (std::size_t j = 0; j < l.weights.data.size(); ++j) l.weights.data[j] -= r.weights.data[j];
        for (std::size_t j = 0; j < l.bias.size(); ++j) l.bias[j] -= r.bias[j];
    }
    return out;
}

ModelWeights operator*(double c, const ModelWeights& m) {
    ModelWeights out = m;
    for_each_param(out, [c](double& v) { v *= c; });
    return out;
}

ModelWeights zeros_like(const ModelWeights& m) {
    ModelWeights out = m;
    for_each_param(out, [](double& v) { v = 0.0; });
    return out;
}

std::size_t parameter_count(const ModelWeights& m) {
    std::size_t n = 0;
    for (const auto& l : m.layers) n += l.weights.data.size() + l.bias.size();
    return n;
}

ModelWeights init_model(const ModelSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    Rng rng(seed);
    ModelWeights model;
    model.layers.reserve(spec.size());
    for (const auto& ls : spec) {
        Layer layer;
        layer.activation = ls.activation;
        layer.weights = Matrix(ls.input_dim, ls.output_dim);
        const double limit = std::sqrt(6.0 / (ls.input_dim + ls.output_dim));
        for (auto& w : layer.weights.data) w = rng.uniform(-limit, limit);
        layer.bias.assign(static_cast<std::size_t>(ls.output_dim), 0.0);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

namespace {

// Logits for the rows of X; caches post-activation outputs per layer when
// acts != nullptr (acts->front() aliases the input batch).
Matrix forward(const ModelWeights& model, const Matrix& x, std::vector<Matrix>* acts) {
    Matrix cur = x;
    if (acts) {
        acts->clear();
        acts->push_back(cur);
    }
    for (const auto& layer : model.layers) {
        Matrix next(cur.rows, layer.weights.cols);
        for (int r = 0; r < cur.rows; ++r) {
            for (int k = 0; k < cur.cols; ++k) {
                const double v = cur(r, k);
                if (v == 0.0) continue;
                for (int c = 0; c < next.cols; ++c) next(r, c) += v * layer.weights(k, c);
            }
            for (int c = 0; c < next.cols; ++c) next(r, c) += layer.bias[c];
        }
        if (layer.activation == Activation::relu) {
            for (auto& v : next.data) v = std::max(0.0, v);
        }
        cur = std::move(next);
        if (acts) acts->push_back(cur);
    }
    return cur;
}

Matrix gather_rows(const Dataset& d, std::span<const int> idx) {
    Matrix out(static_cast<int>(idx.size()), d.feature_dim());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        for (int c = 0; c < d.feature_dim(); ++c) out(static_cast<int>(r), c) = d.features(idx[r], c);
    }
    return out;
}

void check_compatible(const ModelWeights& model, const Dataset& data, const char* op) {
    if (model.layers.empty()) throw precondition_error(std::string(op) + ": empty model");
    if (data.size() == 0) throw precondition_error(std::string(op) + ": empty dataset");
    if (data.feature_dim() != model.layers.front().weights.rows) {
        throw precondition_error(std::string(op) + ": feature dimension " +
                                 std::to_string(data.feature_dim()) + " does not match model input " +
                                 std::to_string(model.layers.front().weights.rows));
    }
    const int out_dim = model.layers.back().weights.cols;
    for (int label : data.labels) {
        if (label < 0 || label >= out_dim) {
            throw precondition_error(std::string(op) + ": label " + std::to_string(label) +
                                     " out of range for model output dimension " +
                                     std::to_string(out_dim));
        }
    }
}

// Mean softmax cross-entropy and its gradient over the given rows.
double backprop(const ModelWeights& model, const Dataset& data, std::span<const int> idx,
                ModelWeights& grad) {
    const Matrix x = gather_rows(data, idx);
    std::vector<Matrix> acts;
    Matrix logits = forward(model, x, &acts);

    const int batch = logits.rows;
    const int classes = logits.cols;
    const double inv_batch = 1.0 / batch;

    // delta starts as d(mean loss)/d(logits)
    double loss = 0.0;
    Matrix delta(batch, classes);
    for (int r = 0; r < batch; ++r) {
        double mx = logits(r, 0);
        for (int c = 1; c < classes; ++c) mx = std::max(mx, logits(r, c));
        double sum = 0.0;
        for (int c = 0; c < classes; ++c) sum += std::exp(logits(r, c) - mx);
        const int label = data.labels[idx[static_cast<std::size_t>(r)]];
        loss += (mx + std::log(sum) - logits(r, label)) * inv_batch;
        for (int c = 0; c < classes; ++c) {
            const double p = std::exp(logits(r, c) - mx) / sum;
            delta(r, c) = (p - (c == label ? 1.0 : 0.0)) * inv_batch;
        }
    }

    for (int l = static_cast<int>(model.layers.size()) - 1; l >= 0; --l) {
        const auto& layer = model.layers[static_cast<std::size_t>(l)];
        const Matrix& input = acts[static_cast<std::size_t>(l)];
        auto& g = grad.layers[static_cast<std::size_t>(l)];

        for (int r = 0; r < batch; ++r) {
            for (int k = 0; k < input.cols; ++k) {
                const double v = input(r, k);
                if (v == 0.0) continue;
                for (int c = 0; c < layer.weights.cols; ++c) g.weights(k, c) += v * delta(r, c);
            }
            for (int c = 0; c < layer.weights.cols; ++c) g.bias[static_cast<std::size_t>(c)] += delta(r, c);
        }

        if (l > 0) {
            Matrix prev_delta(batch, layer.weights.rows);
            for (int r = 0; r < batch; ++r) {
                for (int c = 0; c < layer.weights.cols; ++c) {
                    const double dv = delta(r, c);
                    if (dv == 0.0) continue;
                    for (int k = 0; k < layer.weights.rows; ++k) {
                        prev_delta(r, k) += dv * layer.weights(k, c);
                    }
                }
            }
            // relu' is the indicator of a positive post-activation output
            if (model.layers[static_cast<std::size_t>(l - 1)].activation == Activation::relu) {
                const Matrix& a = acts[static_cast<std::size_t>(l)];
                for (std::size_t j = 0; j < prev_delta.data.size(); ++j) {
                    if (a.data[j] <= 0.0) prev_delta.data[j] = 0.0;
                }
            }
            delta = std::move(prev_delta);
        }
    }
    return loss;
}

}  // namespace

LocalTrainResult train_local(const ModelWeights& model, const Dataset& data,
                             const TrainConfig& cfg, std::uint64_t seed) {
    check_compatible(model, data, "train_local");
    if (cfg.local_epochs < 1) throw precondition_error("train_local: local_epochs must be >= 1");
    if (cfg.batch_size < 1) throw precondition_error("train_local: batch_size must be >= 1");
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
        throw precondition_error("train_local: learning_rate must be finite and >= 0");
    }
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
        throw precondition_error("train_local: momentum must be in [0, 1)");
    }

    Rng rng(seed);
    ModelWeights weights = model;
    ModelWeights velocity = zeros_like(model);
    std::vector<int> order(static_cast<std::size_t>(data.size()));
    std::iota(order.begin(), order.end(), 0);

    LocalTrainResult result;
    result.trajectory.reserve(static_cast<std::size_t>(cfg.local_epochs));

    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
            ModelWeights grad = zeros_like(weights);
            const double loss = backprop(weights, data, {order.data() + start, len}, grad);
            if (!std::isfinite(loss)) {
                throw training_diverged("loss became non-finite at local epoch " +
                                        std::to_string(epoch + 1) + ", batch " +
                                        std::to_string(start / static_cast<std::size_t>(cfg.batch_size) + 1));
            }
            for (std::size_t l = 0; l < weights.layers.size(); ++l) {
                auto& w = weights.layers[l];
                auto& v = velocity.layers[l];
                const auto& g = grad.layers[l];
                for (std::size_t j = 0; j < w.weights.data.size(); ++j) {
                    v.weights.data[j] = cfg.momentum * v.weights.data[j] + g.weights.data[j];
                    w.weights.data[j] -= cfg.learning_rate * v.weights.data[j];
                }
                for (std::size_t j = 0; j < w.bias.size(); ++j) {
                    v.bias[j] = cfg.momentum * v.bias[j] + g.bias[j];
                    w.bias[j] -= cfg.learning_rate * v.bias[j];
                }
            }
        }
        result.trajectory.push_back(weights);
    }
    result.final = result.trajectory.back();
    return result;
}

ModelWeights gradient(const ModelWeights& model, const Dataset& batch) {
    check_compatible(model, batch, "gradient");
    std::vector<int> idx(static_cast<std::size_t>(batch.size()));
    std::iota(idx.begin(), idx.end(), 0);
    ModelWeights grad = zeros_like(model);
    backprop(model, batch, idx, grad);
    return grad;
}

double cross_entropy_loss(const ModelWeights& model, const Dataset& data) {
    check_compatible(model, data, "cross_entropy_loss");
    Matrix logits = forward(model, data.features, nullptr);
    double loss = 0.0;
    for (int r = 0; r < logits.rows; ++r) {
        double mx = logits(r, 0);
        for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, logits(r, c));
        double sum = 0.0;
        for (int c = 0; c < logits.cols; ++c) sum += std::exp(logits(r, c) - mx);
        loss += mx + std::log(sum) - logits(r, data.labels[static_cast<std::size_t>(r)]);
    }
    return loss / logits.rows;
}

double evaluate_accuracy(const ModelWeights& model, const Dataset& data) {
    check_compatible(model, data, "evaluate_accuracy");
    Matrix logits = forward(model, data.features, nullptr);
    int correct = 0;
    for (int r = 0; r < logits.rows; ++r) {
        int best = 0;
        for (int c = 1; c < logits.cols; ++c) {
            if (logits(r, c) > logits(r, best)) best = c;
        }
        if (best == data.labels[static_cast<std::size_t>(r)]) ++correct;
    }
    return static_cast<double>(correct) / logits.rows;
}

Matrix penultimate_weights(const ModelWeights& model) {
    if (model.layers.size() < 2) {
        throw precondition_error("penultimate_weights: model must have at least 2 layers");
    }
    return model.layers[model.layers.size() - 2].weights;
}

}  // namespace wefsim
