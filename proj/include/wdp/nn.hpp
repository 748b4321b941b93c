#pragma once

// Layer kernels for the from-scratch CNN engine. Every function is pure: it
// reads its inputs and returns fresh tensors, so trained networks can be
// evaluated from any number of threads.

#include <cstddef>
#include <span>
#include <vector>

#include "wdp/tensor.hpp"

namespace wdp::nn {

// floor((n + 2*padding - k) / stride) + 1; throws ShapeError if k > n + 2*padding.
std::size_t conv_output_dim(std::size_t n, std::size_t k, std::size_t stride, std::size_t padding);

// input [C_in,H,W], kernels [C_out,C_in,k,k], bias [C_out] -> [C_out,H',W'].
// Cross-correlation (no kernel flip), zero padding.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride,
                      std::size_t padding);

struct ConvGrads {
    Tensor input;
    Tensor kernels;
    Tensor bias;
};

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& cached_input, const Tensor& kernels,
                          std::size_t stride, std::size_t padding);

struct PoolResult {
    Tensor output;
    // Flat index into the input of the element selected for each output element.
    std::vector<std::size_t> argmax;
};

// Ties go to the first maximum in row-major window order.
PoolResult maxpool_forward(const Tensor& input, std::size_t window, std::size_t stride);
Tensor maxpool_backward(const Tensor& grad_out, std::span<const std::size_t> argmax, const Shape& input_shape);

// The input is read as a flat vector of length d = weights.dim(1), whatever its shape.
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
    Tensor input;  // shaped like the forward input
    Tensor weights;
    Tensor bias;
};

DenseGrads dense_backward(const Tensor& grad_out, const Tensor& cached_input, const Tensor& weights);

Tensor relu_forward(const Tensor& input);
// Gradient at exactly zero is zero.
Tensor relu_backward(const Tensor& grad_out, const Tensor& cached_input);

Tensor softmax(const Tensor& logits);

inline constexpr double kProbabilityClip = 1e-12;

// -ln(probs[label] + 1e-12)
double cross_entropy_loss(const Tensor& probs, std::size_t label);
// Gradient of cross_entropy_loss(softmax(z)) with respect to the logits z: probs - one_hot(label).
Tensor softmax_cross_entropy_grad(const Tensor& probs, std::size_t label);

// params -= learning_rate * mean_grad. Throws NumericError on a non-finite gradient.
void sgd_step(std::span<double> params, std::span<const double> mean_grad, double learning_rate);

}  // namespace wdp::nn
