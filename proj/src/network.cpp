#include "wdp/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wdp/error.hpp"
#include "wdp/nn.hpp"
#include "wdp/rng.hpp"

namespace wdp::nn {

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "Conv";
        case LayerKind::MaxPool: return "MaxPool";
        case LayerKind::ReLU: return "ReLU";
        case LayerKind::Flatten: return "Flatten";
        case LayerKind::Dense: return "Dense";
        case LayerKind::SoftmaxOutput: return "SoftmaxOutput";
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& name) {
    for (auto k : {LayerKind::Conv, LayerKind::MaxPool, LayerKind::ReLU, LayerKind::Flatten, LayerKind::Dense,
                   LayerKind::SoftmaxOutput})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown layer kind '" + name + "'");
}

LayerSpec LayerSpec::conv(std::size_t out_channels, std::size_t kernel, std::size_t stride, std::size_t padding) {
    LayerSpec s;
    s.kind = LayerKind::Conv;
    s.out_channels = out_channels;
    s.kernel_size = kernel;
    s.stride = stride;
    s.padding = padding;
    return s;
}

LayerSpec LayerSpec::maxpool(std::size_t window, std::size_t stride) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool;
    s.window = window;
    s.stride = stride;
    return s;
}

LayerSpec LayerSpec::relu() { return {}; }

LayerSpec LayerSpec::flatten() {
    LayerSpec s;
    s.kind = LayerKind::Flatten;
    return s;
}

LayerSpec LayerSpec::dense(std::size_t units) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.units = units;
    return s;
}

LayerSpec LayerSpec::softmax_output() {
    LayerSpec s;
    s.kind = LayerKind::SoftmaxOutput;
    return s;
}

void LayerSpec::validate() const {
    switch (kind) {
        case LayerKind::Conv:
            if (out_channels < 1 || kernel_size < 1 || stride < 1)
                throw ConfigError("Conv needs out_channels, kernel_size and stride >= 1");
            break;
        case LayerKind::MaxPool:
            if (window < 1 || stride < 1) throw ConfigError("MaxPool needs window and stride >= 1");
            break;
        case LayerKind::Dense:
            if (units < 1) throw ConfigError("Dense needs units >= 1");
            break;
        default: break;
    }
}

ParamSet zeros_like(const ParamSet& like) {
    ParamSet out;
    out.reserve(like.size());
    for (const auto& p : like) {
        LayerParams z;
        if (!p.weight.empty()) z.weight = Tensor(p.weight.shape());
        if (!p.bias.empty()) z.bias = Tensor(p.bias.shape());
        out.push_back(std::move(z));
    }
    return out;
}

Network::Network(std::vector<LayerSpec> layers, Shape input_shape)
    : layers_(std::move(layers)), input_shape_(std::move(input_shape)) {
    if (input_shape_.size() != 3 || shape_size(input_shape_) == 0)
        throw ShapeError("network input must be [C,H,W], got " + shape_string(input_shape_));
    if (layers_.size() < 2 || layers_.back().kind != LayerKind::SoftmaxOutput ||
        layers_[layers_.size() - 2].kind != LayerKind::Dense)
        throw ConfigError("architecture must end in Dense(num_classes) + SoftmaxOutput");

    Shape cur = input_shape_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        l.validate();
        LayerParams p;
        switch (l.kind) {
            case LayerKind::Conv: {
                if (cur.size() != 3) throw ShapeError("Conv at layer " + std::to_string(i) + " needs a [C,H,W] input");
                const auto oh = conv_output_dim(cur[1], l.kernel_size, l.stride, l.padding);
                const auto ow = conv_output_dim(cur[2], l.kernel_size, l.stride, l.padding);
                p.weight = Tensor({l.out_channels, cur[0], l.kernel_size, l.kernel_size});
                p.bias = Tensor({l.out_channels});
                cur = {l.out_channels, oh, ow};
                break;
            }
            case LayerKind::MaxPool: {
                if (cur.size() != 3)
                    throw ShapeError("MaxPool at layer " + std::to_string(i) + " needs a [C,H,W] input");
                cur = {cur[0], conv_output_dim(cur[1], l.window, l.stride, 0),
                       conv_output_dim(cur[2], l.window, l.stride, 0)};
                break;
            }
            case LayerKind::ReLU: break;
            case LayerKind::Flatten: cur = {shape_size(cur)}; break;
            case LayerKind::Dense: {
                p.weight = Tensor({l.units, shape_size(cur)});
                p.bias = Tensor({l.units});
                cur = {l.units};
                break;
            }
            case LayerKind::SoftmaxOutput:
                if (i + 1 != layers_.size()) throw ConfigError("SoftmaxOutput must be the last layer");
                if (shape_size(cur) < 2) throw ConfigError("SoftmaxOutput needs at least two classes");
                break;
        }
        output_shapes_.push_back(cur);
        params_.push_back(std::move(p));
    }
}

void Network::initialize(std::uint64_t seed) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        auto& p = params_[i];
        if (p.weight.empty()) continue;
        std::size_t fan_in = 0, fan_out = 0;
        if (layers_[i].kind == LayerKind::Conv) {
            const auto& s = p.weight.shape();
            fan_in = s[1] * s[2] * s[3];
            fan_out = s[0] * s[2] * s[3];
        } else {
            fan_in = p.weight.dim(1);
            fan_out = p.weight.dim(0);
        }
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        SplitMix64 rng(derive_seed(seed, i + 1));
        for (auto& w : p.weight.data()) w = rng.uniform(-limit, limit);
        p.bias.fill(0.0);
    }
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

namespace {

Tensor apply_layer(const LayerSpec& l, const LayerParams& p, const Shape& out_shape, const Tensor& x,
                   std::vector<std::size_t>* argmax) {
    switch (l.kind) {
        case LayerKind::Conv: return conv2d_forward(x, p.weight, p.bias, l.stride, l.padding);
        case LayerKind::MaxPool: {
            auto r = maxpool_forward(x, l.window, l.stride);
            if (argmax) *argmax = std::move(r.argmax);
            return std::move(r.output);
        }
        case LayerKind::ReLU: return relu_forward(x);
        case LayerKind::Flatten: return x.reshaped(out_shape);
        case LayerKind::Dense: return dense_forward(x, p.weight, p.bias);
        case LayerKind::SoftmaxOutput: return softmax(x);
    }
    throw ShapeError("unreachable layer kind");
}

}  // namespace

Tensor Network::predict(const Tensor& input) const { return forward_from(0, input); }

Tensor Network::forward_from(std::size_t first, Tensor activation) const {
    if (first == 0 && activation.shape() != input_shape_)
        throw ShapeError("network expects input " + shape_string(input_shape_) + ", got " +
                         shape_string(activation.shape()));
    for (std::size_t i = first; i < layers_.size(); ++i)
        activation = apply_layer(layers_[i], params_[i], output_shapes_[i], activation, nullptr);
    return activation;
}

void Network::forward(const Tensor& input, Trace& trace) const {
    if (input.shape() != input_shape_)
        throw ShapeError("network expects input " + shape_string(input_shape_) + ", got " +
                         shape_string(input.shape()));
    trace.inputs.resize(layers_.size() + 1);
    trace.argmax.resize(layers_.size());
    trace.inputs[0] = input;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        trace.inputs[i + 1] = apply_layer(layers_[i], params_[i], output_shapes_[i], trace.inputs[i], &trace.argmax[i]);
}

namespace {

void accumulate(Tensor& into, const Tensor& add) {
    double* d = into.raw();
    const double* s = add.raw();
    for (std::size_t i = 0; i < into.size(); ++i) d[i] += s[i];
}

}  // namespace

double Network::backward(const Trace& trace, std::size_t label, ParamSet& grads) const {
    const Tensor& probs = trace.probs();
    const double loss = cross_entropy_loss(probs, label);
    // Softmax and cross-entropy are differentiated together.
    Tensor g = softmax_cross_entropy_grad(probs, label);
    for (std::size_t i = layers_.size() - 1; i-- > 0;) {
        const auto& l = layers_[i];
        const Tensor& x = trace.inputs[i];
        switch (l.kind) {
            case LayerKind::Conv: {
                auto cg = conv2d_backward(g, x, params_[i].weight, l.stride, l.padding);
                accumulate(grads[i].weight, cg.kernels);
                accumulate(grads[i].bias, cg.bias);
                g = std::move(cg.input);
                break;
            }
            case LayerKind::MaxPool: g = maxpool_backward(g, trace.argmax[i], x.shape()); break;
            case LayerKind::ReLU: g = relu_backward(g, x); break;
            case LayerKind::Flatten: g = g.reshaped(x.shape()); break;
            case LayerKind::Dense: {
                auto dg = dense_backward(g, x, params_[i].weight);
                accumulate(grads[i].weight, dg.weights);
                accumulate(grads[i].bias, dg.bias);
                g = std::move(dg.input);
                break;
            }
            case LayerKind::SoftmaxOutput: break;
        }
    }
    return loss;
}

double example_loss(const Network& net, const Tensor& input, std::size_t label) {
    return cross_entropy_loss(net.predict(input), label);
}

std::vector<double> central_difference(std::span<double> params, const std::function<double()>& loss, double eps) {
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + eps;
        const double up = loss();
        params[i] = saved - eps;
        const double down = loss();
        params[i] = saved;
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

ParamSet finite_diff_gradient(const Network& net, const Tensor& input, std::size_t label, double eps) {
    Network work = net;
    // Activations entering each layer; perturbing layer i leaves inputs[0..i] unchanged.
    Trace trace;
    net.forward(input, trace);
    const auto& inputs = trace.inputs;
    ParamSet grads = zeros_like(net.params());
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        auto& p = work.params()[i];
        if (p.weight.empty()) continue;
        auto loss = [&] { return cross_entropy_loss(work.forward_from(i, inputs[i]), label); };
        auto gw = central_difference(p.weight.data(), loss, eps);
        auto gb = central_difference(p.bias.data(), loss, eps);
        std::copy(gw.begin(), gw.end(), grads[i].weight.data().begin());
        std::copy(gb.begin(), gb.end(), grads[i].bias.data().begin());
    }
    return grads;
}

double max_relative_error(const ParamSet& a, const ParamSet& b, double floor) {
    if (a.size() != b.size()) throw ShapeError("parameter sets differ in layer count");
    double worst = 0.0;
    auto scan = [&](const Tensor& x, const Tensor& y) {
        if (x.shape() != y.shape()) throw ShapeError("parameter sets differ in shape");
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double denom = std::max({std::abs(x[i]), std::abs(y[i]), floor});
            worst = std::max(worst, std::abs(x[i] - y[i]) / denom);
        }
    };
    for (std::size_t i = 0; i < a.size(); ++i) {
        scan(a[i].weight, b[i].weight);
        scan(a[i].bias, b[i].bias);
    }
    return worst;
}

void TrainConfig::validate(std::size_t train_size) const {
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (train_size > 0 && batch_size > train_size)
        throw ConfigError("train.batch_size " + std::to_string(batch_size) + " exceeds training-set size " +
                          std::to_string(train_size));
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("train.learning_rate must be a finite non-negative number");
}

TrainResult train(Network& net, std::span<const Example> examples, const TrainConfig& config) {
    if (examples.empty()) throw ConfigError("cannot train on an empty set");
    config.validate(examples.size());

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 shuffler(derive_seed(config.seed, 0x5348554646ULL));

    TrainResult result;
    ParamSet grads = zeros_like(net.params());
    Trace trace;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffler.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            for (auto& g : grads) {
                g.weight.fill(0.0);
                g.bias.fill(0.0);
            }
            for (std::size_t k = start; k < stop; ++k) {
                const auto& ex = examples[order[k]];
                net.forward(ex.input, trace);
                const double loss = net.backward(trace, ex.label, grads);
                if (!std::isfinite(loss))
                    throw NumericError("non-finite loss in epoch " + std::to_string(epoch + 1) +
                                       "; try a smaller learning rate");
                epoch_loss += loss;
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t i = 0; i < grads.size(); ++i) {
                auto& p = net.params()[i];
                if (p.weight.empty()) continue;
                for (auto& v : grads[i].weight.data()) v *= inv;
                for (auto& v : grads[i].bias.data()) v *= inv;
                sgd_step(p.weight.data(), grads[i].weight.data(), config.learning_rate);
                sgd_step(p.bias.data(), grads[i].bias.data(), config.learning_rate);
            }
            ++result.steps;
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return result;
}

}  // namespace wdp::nn
