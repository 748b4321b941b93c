#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wdp/error.hpp"
#include "wdp/network.hpp"
#include "wdp/nn.hpp"

namespace wdp::nn {
namespace {

using testing::random_tensor;

Network small_net(std::uint64_t seed) {
    Network net({LayerSpec::conv(3, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2, 2), LayerSpec::flatten(),
                 LayerSpec::dense(5), LayerSpec::relu(), LayerSpec::dense(3), LayerSpec::softmax_output()},
                {1, 6, 6});
    net.initialize(seed);
    return net;
}

ParamSet backprop(const Network& net, const Tensor& x, std::size_t label) {
    Trace t;
    net.forward(x, t);
    ParamSet g = zeros_like(net.params());
    net.backward(t, label, g);
    return g;
}

TEST(Network, ShapesAndParameterCount) {
    const auto net = small_net(1);
    EXPECT_EQ(net.output_shape(0), (Shape{3, 6, 6}));
    EXPECT_EQ(net.output_shape(2), (Shape{3, 3, 3}));
    EXPECT_EQ(net.output_shape(3), (Shape{27}));
    EXPECT_EQ(net.num_classes(), 3u);
    EXPECT_EQ(net.parameter_count(), (3 * 9 + 3) + (27 * 5 + 5) + (5 * 3 + 3));
}

TEST(Network, RejectsBadArchitectures) {
    EXPECT_THROW(Network({LayerSpec::conv(2, 3), LayerSpec::softmax_output()}, {1, 8, 8}), ConfigError);
    EXPECT_THROW(Network({LayerSpec::dense(3)}, {1, 8, 8}), ConfigError);
    EXPECT_THROW(Network({LayerSpec::conv(2, 9), LayerSpec::dense(3), LayerSpec::softmax_output()}, {1, 8, 8}),
                 ShapeError);
    EXPECT_THROW(Network({LayerSpec::conv(0, 3), LayerSpec::dense(3), LayerSpec::softmax_output()}, {1, 8, 8}),
                 ConfigError);
    EXPECT_THROW(Network({LayerSpec::dense(1), LayerSpec::softmax_output()}, {1, 8, 8}), ConfigError);
}

TEST(Network, InitializationIsSeededGlorot) {
    const auto a = small_net(7), b = small_net(7), c = small_net(8);
    EXPECT_EQ(a.params(), b.params());
    EXPECT_NE(a.params(), c.params());
    const double limit = std::sqrt(6.0 / (27 + 5));
    for (double w : a.params()[4].weight.data()) EXPECT_LE(std::abs(w), limit);
    for (double v : a.params()[4].bias.data()) EXPECT_EQ(v, 0.0);
}

TEST(Network, ProbabilitiesSumToOne) {
    const auto net = small_net(2);
    const auto p = net.predict(random_tensor({1, 6, 6}, 3, 0, 1));
    double s = 0.0;
    for (double v : p.data()) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_THROW(net.predict(Tensor({1, 5, 5})), ShapeError);
}

TEST(Network, BackpropMatchesFiniteDifferencesForEveryLayerKind) {
    const auto net = small_net(3);
    for (std::uint64_t s = 0; s < 3; ++s) {
        const auto x = random_tensor({1, 6, 6}, 40 + s, 0, 1);
        const auto analytic = backprop(net, x, s % 3);
        const auto numeric = finite_diff_gradient(net, x, s % 3);
        EXPECT_LE(max_relative_error(analytic, numeric), 1e-6);
    }
}

TEST(Network, StridedPaddedConvStackGradient) {
    Network net({LayerSpec::conv(2, 3, 2, 1), LayerSpec::relu(), LayerSpec::conv(3, 2, 1, 0), LayerSpec::relu(),
                 LayerSpec::maxpool(2, 1), LayerSpec::dense(2), LayerSpec::softmax_output()},
                {2, 7, 7});
    net.initialize(11);
    const auto x = random_tensor({2, 7, 7}, 12, -1, 1);
    EXPECT_LE(max_relative_error(backprop(net, x, 1), finite_diff_gradient(net, x, 1)), 1e-6);
}

TEST(FiniteDiff, ConstantLossSurfaceGivesZero) {
    // Zero input and a zero-weight output layer: the loss is ln(num_classes) for every small perturbation
    // of the earlier layers.
    Network net({LayerSpec::flatten(), LayerSpec::dense(4), LayerSpec::relu(), LayerSpec::dense(3),
                 LayerSpec::softmax_output()},
                {1, 2, 2});
    net.initialize(5);
    net.params()[3].weight.fill(0.0);
    const auto g = finite_diff_gradient(net, Tensor({1, 2, 2}), 0);
    for (std::size_t l = 0; l < 2; ++l)
        for (double v : g[l].weight.data()) EXPECT_EQ(v, 0.0);
}

TEST(Training, ZeroLearningRateKeepsInitialization) {
    auto net = small_net(4);
    const auto before = net.params();
    std::vector<Example> ex{{random_tensor({1, 6, 6}, 1, 0, 1), 0}, {random_tensor({1, 6, 6}, 2, 0, 1), 2}};
    train(net, ex, {3, 2, 0.0, 4});
    EXPECT_EQ(net.params(), before);
}

TEST(Training, MemorizesOneSample) {
    auto net = small_net(5);
    std::vector<Example> ex{{random_tensor({1, 6, 6}, 9, 0, 1), 2}};
    const auto r = train(net, ex, {200, 1, 0.1, 5});
    EXPECT_LT(r.final_loss(), 0.01);
    EXPECT_EQ(r.steps, 200u);
}

TEST(Training, StepCountKeepsShortBatch) {
    auto net = small_net(6);
    std::vector<Example> ex;
    for (std::uint64_t i = 0; i < 10; ++i) ex.push_back({random_tensor({1, 6, 6}, i, 0, 1), i % 3});
    const auto r = train(net, ex, {3, 4, 0.01, 6});
    EXPECT_EQ(r.steps, 3u * 3u);  // ceil(10/4) per epoch
    EXPECT_EQ(r.epoch_loss.size(), 3u);
}

TEST(Training, DeterministicGivenSeed) {
    std::vector<Example> ex;
    for (std::uint64_t i = 0; i < 12; ++i) ex.push_back({random_tensor({1, 6, 6}, 50 + i, 0, 1), i % 3});
    auto a = small_net(7), b = small_net(7);
    train(a, ex, {4, 5, 0.05, 99});
    train(b, ex, {4, 5, 0.05, 99});
    EXPECT_EQ(a.params(), b.params());
    auto c = small_net(7);
    train(c, ex, {4, 5, 0.05, 100});
    EXPECT_NE(a.params(), c.params());
}

TEST(Training, DivergenceIsReported) {
    auto net = small_net(8);
    auto bad = random_tensor({1, 6, 6}, 1, 0, 1);
    bad[7] = INFINITY;
    std::vector<Example> ex{{bad, 0}, {random_tensor({1, 6, 6}, 2, 0, 1), 1}};
    EXPECT_THROW(train(net, ex, {2, 1, 0.1, 8}), NumericError);
}

TEST(Training, RejectsBadConfig) {
    auto net = small_net(9);
    std::vector<Example> ex{{Tensor({1, 6, 6}), 0}};
    EXPECT_THROW(train(net, ex, {0, 1, 0.1, 0}), ConfigError);
    EXPECT_THROW(train(net, ex, {1, 2, 0.1, 0}), ConfigError);
    EXPECT_THROW(train(net, ex, {1, 0, 0.1, 0}), ConfigError);
}

}  // namespace
}  // namespace wdp::nn
