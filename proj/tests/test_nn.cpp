#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "bvlab/error.hpp"
#include "bvlab/linalg.hpp"
#include "bvlab/nn.hpp"
#include "test_util.hpp"

using namespace bvlab;
using namespace bvlab::nn;
using bvlab::testutil::central_difference;
using bvlab::testutil::random_normal;
using bvlab::testutil::rel_error;

namespace {

Mlp single_linear(Matrix w, std::vector<double> b) {
    Mlp net;
    net.layers.push_back({std::move(w), std::move(b), Activation::linear});
    return net;
}

// L = sum(y * g) so that dL/dy = g.
double weighted_output(const Mlp& net, const Matrix& x, const Matrix& g) {
    const Matrix y = mlp_predict(net, x);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * g.data()[i];
    return s;
}

} // namespace

TEST(Selu, PublishedConstants) {
    EXPECT_EQ(selu(0.0), 0.0);
    EXPECT_NEAR(selu(1.0), 1.0507009873554805, 1e-15);
    EXPECT_NEAR(kSeluLambda, 1.0507, 1e-4);
    EXPECT_NEAR(kSeluAlpha, 1.6733, 1e-4);
    EXPECT_NEAR(selu(-1.0), kSeluLambda * kSeluAlpha * (std::exp(-1.0) - 1.0), 1e-15);
}

TEST(Selu, DerivativeLimits) {
    EXPECT_NEAR(selu_derivative(-50.0), 0.0, 1e-15);
    EXPECT_EQ(selu_derivative(0.5), kSeluLambda);
    EXPECT_EQ(selu_derivative(7.0), kSeluLambda);
}

TEST(Selu, ContinuousAndMonotoneOnGrid) {
    double prev = selu(-10.0);
    for (int i = 1; i <= 10000; ++i) {
        const double x = -10.0 + 20.0 * i / 10000.0;
        const double y = selu(x);
        EXPECT_GT(y, prev);
        prev = y;
    }
    EXPECT_NEAR(selu(1e-12), selu(-1e-12), 1e-11);
}

TEST(Mlp, IdentityLinearLayer) {
    const Matrix x = random_normal(1, 6, 3);
    const auto net = single_linear(Matrix::identity(3), {0, 0, 0});
    EXPECT_EQ(mlp_forward(net, x).output, x);
}

TEST(Mlp, SeluFixesOriginAndTanhRange) {
    Mlp net;
    net.layers.push_back({random_normal(2, 3, 4), {0, 0, 0, 0}, Activation::selu});
    EXPECT_EQ(mlp_predict(net, Matrix(2, 3, 0.0)), Matrix(2, 4, 0.0));
    net.layers[0].activation = Activation::tanh;
    const Matrix y = mlp_predict(net, random_normal(3, 50, 3));
    for (double v : y.data()) {
        EXPECT_GT(v, -1.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Mlp, ShapeErrors) {
    const auto net = single_linear(Matrix(3, 2), {0, 0});
    EXPECT_THROW(mlp_forward(net, Matrix(4, 5)), ShapeError);
    Mlp bad;
    bad.layers.push_back({Matrix(3, 2), {0, 0}, Activation::linear});
    bad.layers.push_back({Matrix(4, 2), {0, 0}, Activation::linear});
    EXPECT_THROW(bad.validate(), ShapeError);
}

TEST(Backward, LinearLayerWeightGradIsXtG) {
    const Matrix x = random_normal(4, 5, 3);
    const Matrix g = random_normal(5, 5, 2);
    const auto net = single_linear(random_normal(6, 3, 2), {0.1, -0.2});
    const auto fwd = mlp_forward(net, x);
    const auto grads = mlp_backward(net, fwd.tape, g);
    EXPECT_LT(max_abs_diff(grads.layers[0].weights, matmul_tn(x, g)), 1e-14);
    EXPECT_LT(max_abs_diff(grads.input, matmul_nt(g, net.layers[0].weights)), 1e-14);
    const auto cs = column_means(g);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(grads.layers[0].bias[j], cs[j] * 5.0, 1e-13);
}

TEST(Backward, ZeroUpstreamGivesZeroGrads) {
    RngState rng(2);
    const auto net = init_lecun(rng, {4, {{6, Activation::selu}, {3, Activation::tanh}}});
    const Matrix x = random_normal(3, 7, 4);
    const auto fwd = mlp_forward(net, x);
    const auto grads = mlp_backward(net, fwd.tape, Matrix(7, 3, 0.0));
    for (const auto blk : gradient_blocks(grads))
        for (double v : blk) EXPECT_EQ(v, 0.0);
    for (double v : grads.input.data()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, MismatchedTapeThrows) {
    RngState rng(2);
    const auto net = init_lecun(rng, {4, {{6, Activation::selu}, {3, Activation::linear}}});
    const auto fwd = mlp_forward(net, random_normal(3, 7, 4));
    EXPECT_THROW(mlp_backward(net, fwd.tape, Matrix(8, 3)), TapeError);
    auto other = init_lecun(rng, {4, {{5, Activation::selu}, {3, Activation::linear}}});
    EXPECT_THROW(mlp_backward(other, fwd.tape, Matrix(7, 3)), TapeError);
    GradTape empty;
    EXPECT_THROW(mlp_backward(net, empty, Matrix(7, 3)), TapeError);
}

// Finite-difference oracle: random nets with up to 3 layers and 20 units.
TEST(Backward, MatchesCentralDifferences) {
    const Activation acts[] = {Activation::selu, Activation::tanh, Activation::linear};
    for (std::uint64_t trial = 0; trial < 12; ++trial) {
        RngState rng(100 + trial);
        const std::size_t in = 1 + rng.uniform_below(6);
        MlpSpec spec{in, {}};
        const std::size_t depth = 1 + rng.uniform_below(3);
        for (std::size_t l = 0; l < depth; ++l)
            spec.layers.push_back({1 + rng.uniform_below(20), acts[rng.uniform_below(3)]});
        auto net = init_lecun(rng, spec);
        for (auto& layer : net.layers)
            for (double& b : layer.bias) b = 0.3 * rng.standard_normal();
        const Matrix x = random_normal(200 + trial, 4, in);
        const Matrix g = random_normal(300 + trial, 4, net.output_dim());

        const auto fwd = mlp_forward(net, x);
        const auto grads = mlp_backward(net, fwd.tape, g);
        const auto analytic = gradient_blocks(grads);
        auto params = parameter_blocks(net);
        for (std::size_t b = 0; b < params.size(); ++b)
            for (std::size_t i = 0; i < params[b].size(); ++i) {
                const double num = central_difference(params[b][i], 1e-5, [&] { return weighted_output(net, x, g); });
                EXPECT_LT(rel_error(analytic[b][i], num), 1e-4) << "trial " << trial << " block " << b << " idx " << i;
            }
        Matrix xv = x;
        for (std::size_t i = 0; i < xv.size(); ++i) {
            const double num = central_difference(xv.data()[i], 1e-5, [&] { return weighted_output(net, xv, g); });
            EXPECT_LT(rel_error(grads.input.data()[i], num), 1e-4);
        }
    }
}

TEST(InitLecun, VarianceZeroBiasAndDeterminism) {
    RngState a(5), b(5);
    const MlpSpec spec{100, {{200, Activation::selu}}};
    const auto n1 = init_lecun(a, spec);
    const auto n2 = init_lecun(b, spec);
    EXPECT_EQ(n1, n2);
    const auto w = n1.layers[0].weights.data();
    double s = 0, s2 = 0;
    for (double v : w) s += v, s2 += v * v;
    const double var = s2 / w.size() - (s / w.size()) * (s / w.size());
    EXPECT_GE(var, 0.008);
    EXPECT_LE(var, 0.012);
    for (double v : n1.layers[0].bias) EXPECT_EQ(v, 0.0);
}

TEST(Adam, ZeroGradientLeavesParameters) {
    RngState rng(1);
    auto net = init_lecun(rng, {3, {{4, Activation::selu}, {2, Activation::linear}}});
    const auto before = net;
    AdamState st(net, {});
    auto grads = mlp_backward(net, mlp_forward(net, Matrix(2, 3, 1.0)).tape, Matrix(2, 2, 0.0));
    for (int i = 0; i < 5; ++i) adam_step(net, grads, st);
    EXPECT_EQ(net, before);
    EXPECT_EQ(st.step(), 5u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstSign) {
    auto net = single_linear(Matrix{{0.5, -0.5}}, {1.0, 2.0});
    AdamState st(net, {0.01, 0.9, 0.999, 1e-8});
    MlpGrads g;
    g.layers.push_back({Matrix{{3.0, -0.25}}, {1e-3, -50.0}});
    adam_step(net, g, st);
    EXPECT_NEAR(net.layers[0].weights(0, 0), 0.5 - 0.01, 1e-9);
    EXPECT_NEAR(net.layers[0].weights(0, 1), -0.5 + 0.01, 1e-9);
    EXPECT_NEAR(net.layers[0].bias[0], 1.0 - 0.01, 2e-7);
    EXPECT_NEAR(net.layers[0].bias[1], 2.0 + 0.01, 1e-9);
}

TEST(Adam, ConstantGradientDecreasesMonotonically) {
    auto net = single_linear(Matrix{{1.0}}, {0.0});
    AdamState st(net, {});
    MlpGrads g;
    g.layers.push_back({Matrix{{0.7}}, {0.0}});
    double prev = net.layers[0].weights(0, 0);
    for (int i = 0; i < 100; ++i) {
        adam_step(net, g, st);
        const double now = net.layers[0].weights(0, 0);
        EXPECT_LT(now, prev);
        prev = now;
    }
}

TEST(Adam, ZeroLearningRateIsIdentity) {
    RngState rng(3);
    auto net = init_lecun(rng, {3, {{4, Activation::tanh}}});
    const auto before = net;
    AdamState st(net, {0.0, 0.9, 0.999, 1e-8});
    const auto fwd = mlp_forward(net, random_normal(4, 5, 3));
    const auto grads = mlp_backward(net, fwd.tape, random_normal(5, 5, 4));
    for (int i = 0; i < 3; ++i) adam_step(net, grads, st);
    EXPECT_EQ(net, before);
}

TEST(Adam, NonFiniteGradientThrowsWithIteration) {
    auto net = single_linear(Matrix{{1.0}}, {0.0});
    const auto before = net;
    AdamState st(net, {});
    MlpGrads ok;
    ok.layers.push_back({Matrix{{0.1}}, {0.0}});
    adam_step(net, ok, st);
    const auto after_one = net;
    MlpGrads bad;
    bad.layers.push_back({Matrix{{std::numeric_limits<double>::quiet_NaN()}}, {0.0}});
    try {
        adam_step(net, bad, st);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.iteration(), 2u);
    }
    EXPECT_EQ(net, after_one);
    EXPECT_EQ(st.step(), 1u);
}

TEST(Adam, MomentsShapedLikeParameters) {
    RngState rng(3);
    auto net = init_lecun(rng, {3, {{4, Activation::tanh}, {2, Activation::linear}}});
    AdamState st(net, {});
    const auto blocks = parameter_blocks(std::as_const(net));
    ASSERT_EQ(st.first_moments().size(), blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        EXPECT_EQ(st.first_moments()[i].size(), blocks[i].size());
        EXPECT_EQ(st.second_moments()[i].size(), blocks[i].size());
    }
}
