#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "uasr/nn/checkpoint.hpp"
#include "uasr/nn/gru.hpp"
#include "uasr/nn/linear.hpp"
#include "uasr/nn/mlp.hpp"
#include "uasr/nn/params.hpp"

using namespace uasr;
using namespace uasr::nn;

namespace {

GruStack random_stack(std::size_t in, std::size_t hidden, std::size_t layers, Rng& rng, double scale = 0.7) {
    GruStack s = GruStack::zeros(in, hidden, layers);
    for (auto& p : s.params("g"))
        for (double& v : p.value->values()) v = scale * rng.normal();
    return s;
}

Mlp random_mlp(const std::vector<std::size_t>& sizes, Rng& rng, double scale = 0.7) {
    Mlp m = Mlp::create(sizes, rng);
    for (auto& p : m.params("m"))
        for (double& v : p.value->values()) v = scale * rng.normal();
    return m;
}

std::vector<std::pair<const Matrix*, const Matrix*>> oracle_layers(const Mlp& m) {
    std::vector<std::pair<const Matrix*, const Matrix*>> out;
    for (const auto& l : m.layers) out.emplace_back(&l.weight, &l.bias);
    return out;
}

double sigma(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

// ---- GRU

TEST(Gru, ZeroWeightsGiveZeroStates) {
    Rng rng(1);
    const GruStack s = GruStack::zeros(3, 4, 2);
    const auto out = gru_forward(s, oracle::random_matrix(5, 3, rng));
    for (double v : out.hidden_states.values()) EXPECT_EQ(v, 0.0);
    for (double v : out.final_hidden) EXPECT_EQ(v, 0.0);
}

TEST(Gru, OneStepEmitsOneState) {
    Rng rng(2);
    const GruStack s = random_stack(3, 4, 2, rng);
    const auto out = gru_forward(s, oracle::random_matrix(1, 3, rng));
    EXPECT_EQ(out.hidden_states.rows(), 1u);
    EXPECT_EQ(out.final_hidden.size(), 4u);
}

TEST(Gru, ScalarUnitMatchesHandRecurrence) {
    GruStack s = GruStack::zeros(1, 1, 1);
    GruLayer& l = s.layers[0];
    // rows: update, reset, candidate
    l.w = Matrix{{0.5}, {-0.3}, {0.8}};
    l.u = Matrix{{0.2}, {0.7}, {-0.6}};
    l.b = Matrix{{0.1}, {-0.2}, {0.05}};
    const Vector xs{1.0, -0.5, 2.0};
    Matrix frames(3, 1, xs);
    const auto out = gru_forward(s, frames);
    double h = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        const double x = xs[t];
        const double z = sigma(0.5 * x + 0.2 * h + 0.1);
        const double r = sigma(-0.3 * x + 0.7 * h - 0.2);
        const double n = std::tanh(0.8 * x - 0.6 * (r * h) + 0.05);
        h = (1 - z) * h + z * n;
        EXPECT_NEAR(out.hidden_states(t, 0), h, 1e-12);
    }
    EXPECT_NEAR(out.final_hidden[0], h, 1e-12);
}

TEST(Gru, ShapeErrors) {
    const GruStack s = GruStack::zeros(3, 2, 1);
    EXPECT_THROW(gru_forward(s, Matrix(4, 2)), ShapeError);
    EXPECT_THROW(gru_forward(s, Matrix(0, 3)), ShapeError);
}

TEST(Gru, BackwardMatchesFiniteDifferences) {
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        GruStack s = random_stack(3, 4, 2, rng);
        Matrix frames = oracle::random_matrix(3, 3, rng);
        const Matrix w_out = oracle::random_matrix(3, 4, rng);  // weights on every output
        const Vector w_final = oracle::random_vector(4, rng);   // extra weight on the last state
        std::vector<Vector> initial{oracle::random_vector(4, rng, 0.5), oracle::random_vector(4, rng, 0.5)};
        auto loss = [&] {
            const auto t = s.forward(frames, initial);
            return dot(t.outputs().values(), w_out.values()) + dot(t.final_hidden(), w_final);
        };
        GruStack grad = s.zeros_like();
        const auto trace = s.forward(frames, initial);
        const auto back = s.backward(trace, w_out, w_final, grad);

        const auto params = s.params("g");
        const auto grads = grad.params("g");
        auto blocks = oracle::blocks(params, grads);
        blocks.push_back({"frames", frames.values(), back.d_frames.values()});
        blocks.push_back({"initial0", initial[0], back.d_initial[0]});
        blocks.push_back({"initial1", initial[1], back.d_initial[1]});
        const auto check = oracle::check_gradient(blocks, loss);
        EXPECT_LT(check.max_rel_error, 1e-4) << check.worst;
    }
}

// ---- Linear / MLP

TEST(Mlp, ForwardMatchesOracle) {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const Mlp m = random_mlp({3, 4, 4, 2}, rng);
        const Vector x = oracle::random_vector(3, rng);
        EXPECT_LE(oracle::max_abs_diff(m(x), oracle::mlp_forward(oracle_layers(m), x)), 1e-12);
    }
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
    Rng rng(5);
    Mlp m = random_mlp({3, 4, 4, 2}, rng);
    Vector x = oracle::random_vector(3, rng);
    const Vector w = oracle::random_vector(2, rng);
    auto loss = [&] { return dot(m(x), w); };
    Mlp grad = m.zeros_like();
    const Vector dx = m.backward(m.forward(x), w, grad);
    auto blocks = oracle::blocks(m.params("m"), grad.params("m"));
    blocks.push_back({"x", x, dx});
    const auto check = oracle::check_gradient(blocks, loss);
    EXPECT_LT(check.max_rel_error, 1e-4) << check.worst;
}

TEST(Mlp, InputGradientOfScalarNetwork) {
    Rng rng(6);
    Mlp m = random_mlp({4, 3, 3, 1}, rng);
    Vector x = oracle::random_vector(4, rng);
    const Vector g = m.input_gradient(m.forward(x));
    auto loss = [&] { return m(x)[0]; };
    const auto check = oracle::check_gradient({{"x", x, g}}, loss);
    EXPECT_LT(check.max_rel_error, 1e-4) << check.worst;
    Mlp wide = random_mlp({4, 3, 2}, rng);
    EXPECT_THROW(wide.input_gradient(wide.forward(x)), ShapeError);
}

TEST(Mlp, GradientPenaltyValueAndParameterGradient) {
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        Mlp m = random_mlp({4, 3, 3, 1}, rng);
        const Vector x = oracle::random_vector(4, rng);
        Mlp scratch = m.zeros_like();
        // value: (|dD/dx| - 1)^2 with the input gradient from finite differences
        Vector xv = x;
        Vector numeric(4);
        for (std::size_t i = 0; i < 4; ++i) {
            const double saved = xv[i];
            xv[i] = saved + 1e-6;
            const double up = m(xv)[0];
            xv[i] = saved - 1e-6;
            const double down = m(xv)[0];
            xv[i] = saved;
            numeric[i] = (up - down) / 2e-6;
        }
        const double expected = (norm(numeric) - 1.0) * (norm(numeric) - 1.0);
        EXPECT_NEAR(m.gradient_penalty(x, 0.0, scratch), expected, 1e-8);

        // parameter gradient through the input-gradient pass
        Mlp grad = m.zeros_like();
        m.gradient_penalty(x, 1.0, grad);
        auto loss = [&] {
            Mlp s = m.zeros_like();
            return m.gradient_penalty(x, 0.0, s);
        };
        const auto check = oracle::check_gradient(oracle::blocks(m.params("m"), grad.params("m")), loss);
        EXPECT_LT(check.max_rel_error, 1e-4) << check.worst;
    }
}

TEST(Linear, XavierBoundsAndShapes) {
    Rng rng(8);
    const Linear l = Linear::xavier(6, 2, rng);
    const double bound = std::sqrt(6.0 / 8.0);
    for (double v : l.weight.values()) EXPECT_LE(std::abs(v), bound);
    for (double v : l.bias.values()) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(l.forward(Vector{1, 2}), ShapeError);
}

// ---- scalar helpers

TEST(Params, SigmoidHelpersAreStable) {
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
    EXPECT_NEAR(neg_log_sigmoid(0.0), std::log(2.0), 1e-15);
    EXPECT_NEAR(neg_log_sigmoid(800.0), 0.0, 1e-300);
    EXPECT_NEAR(neg_log_sigmoid(-800.0), 800.0, 1e-9);
    EXPECT_TRUE(std::isfinite(sigmoid(-1000.0)));
    for (double x : {-30.0, -3.0, -0.1, 0.2, 5.0, 30.0})
        EXPECT_NEAR(neg_log_sigmoid(x), static_cast<double>(oracle::softplus_neg(x)), 1e-14);
}

TEST(Params, ClipGlobalNorm) {
    Matrix a{{3.0}}, b{{4.0}};
    const ParamList grads{{"a", &a}, {"b", &b}};
    clip_global_norm(grads, 1.0);
    EXPECT_NEAR(a(0, 0), 0.6, 1e-15);
    EXPECT_NEAR(b(0, 0), 0.8, 1e-15);
    clip_global_norm(grads, 10.0);
    EXPECT_NEAR(a(0, 0), 0.6, 1e-15);
}

// ---- checkpoint container

TEST(Checkpoint, RoundTripIsExact) {
    Rng rng(9);
    Mlp m = random_mlp({3, 2, 1}, rng);
    Checkpoint c{"test", {{"hidden", "2"}, {"input_dim", "3"}}, blocks_from(m.params("net"))};
    const std::string text = format_checkpoint(c);
    const Checkpoint back = parse_checkpoint(text);
    EXPECT_EQ(back.kind, "test");
    EXPECT_EQ(back.config, c.config);
    ASSERT_EQ(back.blocks.size(), c.blocks.size());
    for (std::size_t i = 0; i < c.blocks.size(); ++i) {
        EXPECT_EQ(back.blocks[i].first, c.blocks[i].first);
        EXPECT_EQ(back.blocks[i].second, c.blocks[i].second);
    }
    EXPECT_EQ(format_checkpoint(back), text);

    Mlp restored = m.zeros_like();
    restore_blocks(back, restored.params("net"));
    for (std::size_t l = 0; l < m.layers.size(); ++l) EXPECT_EQ(restored.layers[l].weight, m.layers[l].weight);
}

TEST(Checkpoint, RejectsMalformedInput) {
    EXPECT_THROW(parse_checkpoint("NOT A CHECKPOINT\n"), ParseError);
    EXPECT_THROW(parse_checkpoint("UASR-CHECKPOINT 1\nkind x\nconfig 0\nblocks 1\nblock w 1 2\n1.0\n"), ParseError);
    EXPECT_THROW(parse_checkpoint("UASR-CHECKPOINT 1\nkind x\nconfig 0\nblocks 1\n"), ParseError);
    Rng rng(10);
    Mlp m = random_mlp({3, 2, 1}, rng);
    Checkpoint c{"test", {}, blocks_from(m.params("net"))};
    c.blocks.pop_back();
    EXPECT_THROW(restore_blocks(c, m.params("net")), DataError);
}
