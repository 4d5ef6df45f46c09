#pragma once

#include <cstdint>
#include <vector>

#include "wefsim/data.hpp"
#include "wefsim/matrix.hpp"

namespace wefsim {

enum class Activation { relu, identity };

struct LayerSpec {
    int input_dim = 0;
    int output_dim = 0;
    Activation activation = Activation::relu;
};

using ModelSpec = std::vector<LayerSpec>;

// Consecutive layers must chain dimensions and the final activation must be
// identity (softmax lives in the loss). Throws precondition_error otherwise.
void validate_spec(const ModelSpec& spec);

struct Layer {
    Matrix weights;             // input_dim x output_dim
    std::vector<double> bias;   // output_dim
    Activation activation = Activation::relu;
};

struct ModelWeights {
    std::vector<Layer> layers;

    ModelSpec spec() const;
    bool same_shape(const ModelWeights& other) const;
};

bool operator==(const ModelWeights& a, const ModelWeights& b);
inline bool operator!=(const ModelWeights& a, const ModelWeights& b) { return !(a == b); }
ModelWeights operator+(const ModelWeights& a, const ModelWeights& b);
ModelWeights operator-(const ModelWeights& a, const ModelWeights& b);
ModelWeights operator*(double c, const ModelWeights& m);

ModelWeights zeros_like(const ModelWeights& m);

// Applies fn to every weight and bias entry, in layer order.
template <typename Fn>
void for_each_param(ModelWeights& m, Fn&& fn) {
    for (auto& layer : m.layers) {
        for (auto& w : layer.weights.data) fn(w);
        for (auto& b : layer.bias) fn(b);
    }
}

template <typename Fn>
void for_each_param(const ModelWeights& m, Fn&& fn) {
    for (const auto& layer : m.layers) {
        for (const auto& w : layer.weights.data) fn(w);
        for (const auto& b : layer.bias) fn(b);
    }
}

std::size_t parameter_count(const ModelWeights& m);

struct TrainConfig {
    double learning_rate = 1e-4;
    double momentum = 1e-4;
    int batch_size = 32;
    int local_epochs = 3;  // T'
};

// Seeded uniform init on [-limit, +limit] with limit = sqrt(6/(in+out)) per
// layer; biases zero. Identical (spec, seed) pairs give bit-identical weights.
ModelWeights init_model(const ModelSpec& spec, std::uint64_t seed);

struct LocalTrainResult {
    ModelWeights final;
    std::vector<ModelWeights> trajectory;  // one full snapshot per local epoch
};

// T' epochs of mini-batch SGD with momentum on softmax cross-entropy.
// trajectory[k] is the weights after local epoch k+1; trajectory.back() == final.
// Throws training_diverged when the loss goes non-finite.
LocalTrainResult train_local(const ModelWeights& model, const Dataset& data,
                             const TrainConfig& cfg, std::uint64_t seed);

// Exact analytic gradient of the mean softmax cross-entropy over the batch.
ModelWeights gradient(const ModelWeights& model, const Dataset& batch);

double cross_entropy_loss(const ModelWeights& model, const Dataset& data);

// Fraction of samples whose argmax logit equals the label; ties broken by
// the lowest class index.
double evaluate_accuracy(const ModelWeights& model, const Dataset& data);

// Copy of the weight matrix of the layer immediately before the output layer.
Matrix penultimate_weights(const ModelWeights& model);

}  // namespace wefsim
