#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wdp/tensor.hpp"

namespace wdp::nn {

enum class LayerKind { Conv, MaxPool, ReLU, Flatten, Dense, SoftmaxOutput };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    std::size_t out_channels = 0;  // Conv
    std::size_t kernel_size = 0;   // Conv
    std::size_t stride = 1;        // Conv, MaxPool
    std::size_t padding = 0;       // Conv
    std::size_t window = 0;        // MaxPool
    std::size_t units = 0;         // Dense

    static LayerSpec conv(std::size_t out_channels, std::size_t kernel, std::size_t stride = 1,
                          std::size_t padding = 0);
    static LayerSpec maxpool(std::size_t window, std::size_t stride);
    static LayerSpec relu();
    static LayerSpec flatten();
    static LayerSpec dense(std::size_t units);
    static LayerSpec softmax_output();

    void validate() const;
    bool has_parameters() const { return kind == LayerKind::Conv || kind == LayerKind::Dense; }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Weights and bias of one layer; both empty for parameter-free layers.
struct LayerParams {
    Tensor weight;
    Tensor bias;

    std::size_t size() const { return weight.size() + bias.size(); }
    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

using ParamSet = std::vector<LayerParams>;

// Zero-filled parameter set with the same shapes as `like`.
ParamSet zeros_like(const ParamSet& like);

struct Example {
    Tensor input;
    std::size_t label = 0;
};

// Per-layer activations of one forward pass, kept for the backward pass.
struct Trace {
    std::vector<Tensor> inputs;  // inputs[i] is the input of layer i; inputs.back() is the output
    std::vector<std::vector<std::size_t>> argmax;
    const Tensor& probs() const { return inputs.back(); }
};

// A feed-forward stack ending in Dense(num_classes) + SoftmaxOutput.
class Network {
public:
    Network() = default;
    // Parameters are zero-initialized; see initialize().
    Network(std::vector<LayerSpec> layers, Shape input_shape);

    // Glorot-uniform weights drawn from a stream derived from (seed, layer index); zero biases.
    void initialize(std::uint64_t seed);

    const std::vector<LayerSpec>& layers() const { return layers_; }
    const Shape& input_shape() const { return input_shape_; }
    const Shape& output_shape(std::size_t layer) const { return output_shapes_.at(layer); }
    std::size_t num_classes() const { return output_shapes_.back()[0]; }

    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    std::size_t parameter_count() const;

    // Class probabilities.
    Tensor predict(const Tensor& input) const;
    void forward(const Tensor& input, Trace& trace) const;
    // Runs layers [first, end) on `activation` and returns the probabilities.
    Tensor forward_from(std::size_t first, Tensor activation) const;

    // Adds d(cross-entropy)/d(params) for `label` into `grads` and returns the loss.
    double backward(const Trace& trace, std::size_t label, ParamSet& grads) const;

    friend bool operator==(const Network&, const Network&) = default;

private:
    std::vector<LayerSpec> layers_;
    Shape input_shape_;
    std::vector<Shape> output_shapes_;
    ParamSet params_;
};

// Loss of one example (cross-entropy on the network's probabilities).
double example_loss(const Network& net, const Tensor& input, std::size_t label);

// Central differences (f(p+eps) - f(p-eps)) / 2eps for each element of `params`,
// where `loss` re-evaluates the objective with the current contents of `params`.
std::vector<double> central_difference(std::span<double> params, const std::function<double()>& loss,
                                       double eps = 1e-5);

// Finite-difference gradient of the example loss for every parameter. Only uses
// forward passes; layers before the perturbed one are evaluated once.
ParamSet finite_diff_gradient(const Network& net, const Tensor& input, std::size_t label, double eps = 1e-5);

// Largest |a-b| / max(|a|, |b|, floor) over all parameters. The default floor keeps
// gradients below the rounding noise of central differences from dominating.
double max_relative_error(const ParamSet& a, const ParamSet& b, double floor = 1e-6);

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;

    // Checks the ranges against a training set of `train_size` examples.
    void validate(std::size_t train_size) const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainResult {
    std::vector<double> epoch_loss;  // mean per-example loss of each epoch
    std::size_t steps = 0;
    double final_loss() const { return epoch_loss.empty() ? 0.0 : epoch_loss.back(); }
};

// Plain mini-batch gradient descent: a seeded reshuffle each epoch, the final
// short batch kept, parameters moved by the batch-mean gradient.
TrainResult train(Network& net, std::span<const Example> examples, const TrainConfig& config);

}  // namespace wdp::nn
