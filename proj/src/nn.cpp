#include "wdp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wdp/error.hpp"

namespace wdp::nn {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank)
        throw ShapeError(std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
}

// Range of output columns [lo, hi) whose input column ow*stride + offset - padding lies in [0, width).
std::pair<std::size_t, std::size_t> valid_range(std::size_t out_dim, std::size_t width, std::size_t offset,
                                                std::size_t stride, std::size_t padding) {
    std::size_t lo = 0;
    if (offset < padding) lo = (padding - offset + stride - 1) / stride;
    // need ow*stride + offset - padding <= width - 1
    if (width + padding < offset + 1) return {0, 0};
    std::size_t hi = (width - 1 + padding - offset) / stride + 1;
    hi = std::min(hi, out_dim);
    if (lo > hi) lo = hi;
    return {lo, hi};
}

}  // namespace

std::size_t conv_output_dim(std::size_t n, std::size_t k, std::size_t stride, std::size_t padding) {
    if (k == 0 || stride == 0) throw ShapeError("kernel size and stride must be >= 1");
    if (k > n + 2 * padding)
        throw ShapeError("window " + std::to_string(k) + " exceeds padded extent " + std::to_string(n + 2 * padding));
    return (n + 2 * padding - k) / stride + 1;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride,
                      std::size_t padding) {
    require_rank(input, 3, "conv input");
    require_rank(kernels, 4, "conv kernels");
    const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t cout = kernels.dim(0), k = kernels.dim(2);
    if (kernels.dim(1) != cin)
        throw ShapeError("conv kernels expect " + std::to_string(kernels.dim(1)) + " input channels, input has " +
                         std::to_string(cin));
    if (kernels.dim(3) != k) throw ShapeError("conv kernels must be square");
    if (bias.size() != cout) throw ShapeError("conv bias length must equal output channels");
    const std::size_t oh = conv_output_dim(h, k, stride, padding);
    const std::size_t ow = conv_output_dim(w, k, stride, padding);

    Tensor out({cout, oh, ow});
    const double* in = input.raw();
    const double* ker = kernels.raw();
    double* o = out.raw();
    for (std::size_t co = 0; co < cout; ++co) {
        double* oplane = o + co * oh * ow;
        std::fill(oplane, oplane + oh * ow, bias[co]);
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* iplane = in + ci * h * w;
            for (std::size_t kh = 0; kh < k; ++kh) {
                const auto [ylo, yhi] = valid_range(oh, h, kh, stride, padding);
                for (std::size_t kw = 0; kw < k; ++kw) {
                    const double wv = ker[((co * cin + ci) * k + kh) * k + kw];
                    const auto [xlo, xhi] = valid_range(ow, w, kw, stride, padding);
                    for (std::size_t y = ylo; y < yhi; ++y) {
                        const double* irow = iplane + (y * stride + kh - padding) * w;
                        double* orow = oplane + y * ow;
                        for (std::size_t x = xlo; x < xhi; ++x) orow[x] += wv * irow[x * stride + kw - padding];
                    }
                }
            }
        }
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& cached_input, const Tensor& kernels,
                          std::size_t stride, std::size_t padding) {
    require_rank(cached_input, 3, "conv input");
    require_rank(kernels, 4, "conv kernels");
    require_rank(grad_out, 3, "conv grad_out");
    const std::size_t cin = cached_input.dim(0), h = cached_input.dim(1), w = cached_input.dim(2);
    const std::size_t cout = kernels.dim(0), k = kernels.dim(2);
    if (kernels.dim(1) != cin) throw ShapeError("conv kernels do not match input channels");
    const std::size_t oh = conv_output_dim(h, k, stride, padding);
    const std::size_t ow = conv_output_dim(w, k, stride, padding);
    if (grad_out.shape() != Shape{cout, oh, ow})
        throw ShapeError("conv grad_out shape " + shape_string(grad_out.shape()) + " != forward output shape " +
                         shape_string({cout, oh, ow}));

    ConvGrads g{Tensor(cached_input.shape()), Tensor(kernels.shape()), Tensor({cout})};
    const double* in = cached_input.raw();
    const double* ker = kernels.raw();
    const double* go = grad_out.raw();
    double* gi = g.input.raw();
    double* gk = g.kernels.raw();
    for (std::size_t co = 0; co < cout; ++co) {
        const double* gplane = go + co * oh * ow;
        double bsum = 0.0;
        for (std::size_t i = 0; i < oh * ow; ++i) bsum += gplane[i];
        g.bias[co] = bsum;
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* iplane = in + ci * h * w;
            double* giplane = gi + ci * h * w;
            for (std::size_t kh = 0; kh < k; ++kh) {
                const auto [ylo, yhi] = valid_range(oh, h, kh, stride, padding);
                for (std::size_t kw = 0; kw < k; ++kw) {
                    const std::size_t widx = ((co * cin + ci) * k + kh) * k + kw;
                    const double wv = ker[widx];
                    const auto [xlo, xhi] = valid_range(ow, w, kw, stride, padding);
                    double acc = 0.0;
                    for (std::size_t y = ylo; y < yhi; ++y) {
                        const std::size_t base = (y * stride + kh - padding) * w;
                        const double* irow = iplane + base;
                        double* girow = giplane + base;
                        const double* grow = gplane + y * ow;
                        for (std::size_t x = xlo; x < xhi; ++x) {
                            const std::size_t col = x * stride + kw - padding;
                            acc += grow[x] * irow[col];
                            girow[col] += wv * grow[x];
                        }
                    }
                    gk[widx] += acc;
                }
            }
        }
    }
    return g;
}

PoolResult maxpool_forward(const Tensor& input, std::size_t window, std::size_t stride) {
    require_rank(input, 3, "maxpool input");
    const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t oh = conv_output_dim(h, window, stride, 0);
    const std::size_t ow = conv_output_dim(w, window, stride, 0);
    PoolResult r{Tensor({c, oh, ow}), std::vector<std::size_t>(c * oh * ow)};
    const double* in = input.raw();
    std::size_t oi = 0;
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x, ++oi) {
                std::size_t best = (ch * h + y * stride) * w + x * stride;
                for (std::size_t dy = 0; dy < window; ++dy)
                    for (std::size_t dx = 0; dx < window; ++dx) {
                        const std::size_t idx = (ch * h + y * stride + dy) * w + x * stride + dx;
                        if (in[idx] > in[best]) best = idx;
                    }
                r.output[oi] = in[best];
                r.argmax[oi] = best;
            }
    return r;
}

Tensor maxpool_backward(const Tensor& grad_out, std::span<const std::size_t> argmax, const Shape& input_shape) {
    if (grad_out.size() != argmax.size()) throw ShapeError("maxpool grad_out does not match argmax indices");
    Tensor g(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        if (argmax[i] >= g.size()) throw ShapeError("maxpool argmax index out of range");
        g[argmax[i]] += grad_out[i];
    }
    return g;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require_rank(weights, 2, "dense weights");
    const std::size_t u = weights.dim(0), d = weights.dim(1);
    if (input.size() != d)
        throw ShapeError("dense layer expects " + std::to_string(d) + " inputs, got " + std::to_string(input.size()));
    if (bias.size() != u) throw ShapeError("dense bias length must equal units");
    Tensor out({u});
    const double* x = input.raw();
    for (std::size_t r = 0; r < u; ++r) {
        const double* row = weights.raw() + r * d;
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += row[j] * x[j];
        out[r] = acc + bias[r];
    }
    return out;
}

DenseGrads dense_backward(const Tensor& grad_out, const Tensor& cached_input, const Tensor& weights) {
    require_rank(weights, 2, "dense weights");
    const std::size_t u = weights.dim(0), d = weights.dim(1);
    if (cached_input.size() != d || grad_out.size() != u) throw ShapeError("dense backward dimension mismatch");
    DenseGrads g{Tensor(cached_input.shape()), Tensor(weights.shape()), Tensor({u})};
    const double* x = cached_input.raw();
    for (std::size_t r = 0; r < u; ++r) {
        const double gr = grad_out[r];
        g.bias[r] = gr;
        const double* row = weights.raw() + r * d;
        double* grow = g.weights.raw() + r * d;
        double* gi = g.input.raw();
        for (std::size_t j = 0; j < d; ++j) {
            grow[j] = gr * x[j];
            gi[j] += gr * row[j];
        }
    }
    return g;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out = input;
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& cached_input) {
    if (grad_out.size() != cached_input.size()) throw ShapeError("relu backward size mismatch");
    Tensor g(cached_input.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = cached_input[i] > 0.0 ? grad_out[i] : 0.0;
    return g;
}

Tensor softmax(const Tensor& logits) {
    if (logits.size() < 2) throw ShapeError("softmax needs at least two classes");
    const double peak = logits.max();
    Tensor out(Shape{logits.size()});
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (auto& v : out.data()) v /= total;
    return out;
}

double cross_entropy_loss(const Tensor& probs, std::size_t label) {
    if (label >= probs.size()) throw ShapeError("label index out of range");
    return -std::log(probs[label] + kProbabilityClip);
}

Tensor softmax_cross_entropy_grad(const Tensor& probs, std::size_t label) {
    if (label >= probs.size()) throw ShapeError("label index out of range");
    Tensor g = probs;
    g[label] -= 1.0;
    return g;
}

void sgd_step(std::span<double> params, std::span<const double> mean_grad, double learning_rate) {
    if (params.size() != mean_grad.size()) throw ShapeError("sgd_step: parameter and gradient sizes differ");
    for (std::size_t i = 0; i < mean_grad.size(); ++i)
        if (!std::isfinite(mean_grad[i]))
            throw NumericError("non-finite gradient at parameter " + std::to_string(i) +
                               "; try a smaller learning rate");
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * mean_grad[i];
}

}  // namespace wdp::nn
