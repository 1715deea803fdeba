#include <gtest/gtest.h>

#include <cmath>

#include "nhits/error.hpp"
#include "nhits/model.hpp"
#include "nhits/train.hpp"
#include "test_support.hpp"

using namespace nhits;

namespace {

ModelConfig single_block(std::size_t L, std::size_t H, std::size_t k, double r, std::size_t nh, std::size_t layers) {
    ModelConfig c;
    c.input_size = L;
    c.horizon = H;
    c.blocks.push_back(BlockConfig{k, r, nh, layers, InterpKind::Linear, PoolMode::Max});
    return c;
}

void zero_slice(ParamSet& p, const LayerSlice& s, bool weights_only) {
    const std::size_t n = weights_only ? s.rows * s.cols : s.size();
    std::fill_n(p.values.begin() + static_cast<long>(s.weight_offset), n, 0.0);
}

Vec1D bias_of(const ParamSet& p, const LayerSlice& s) {
    auto b = p.bias(s);
    return Vec1D(b.begin(), b.end());
}

} // namespace

TEST(BlockForward, ZeroHeadWeightsEmitBiases) {
    const ModelConfig c = single_block(6, 4, 1, 1.0, 5, 2);
    ParamSet p = init_params(c, 3);
    const BlockLayout& bl = p.layout.blocks[0];
    zero_slice(p, bl.forecast_head, true);
    zero_slice(p, bl.backcast_head, true);
    Rng rng(1);
    for (int i = 0; i < 5; ++i) {
        const BlockOutput out = block_forward(c.blocks[0], bl, p, test::random_vector(rng, 6), 0, 4);
        EXPECT_EQ(out.backcast, bias_of(p, bl.backcast_head));
        EXPECT_EQ(out.forecast, bias_of(p, bl.forecast_head));
    }
}

TEST(BlockForward, ShapeArithmetic) {
    const ModelConfig c = single_block(20, 10, 4, 0.2, 8, 2);
    const ParamLayout layout = ParamLayout::build(c);
    EXPECT_EQ(layout.blocks[0].pooled_width, 5u);
    EXPECT_EQ(layout.blocks[0].mlp[0].cols, 5u);
    EXPECT_EQ(layout.blocks[0].forecast_coeffs, 2u);
    const ParamSet p = init_params(c, 1);
    Rng rng(2);
    const BlockOutput out = block_forward(c.blocks[0], layout.blocks[0], p, test::random_vector(rng, 20), 100, 10);
    EXPECT_EQ(out.forecast.size(), 10u);
    EXPECT_EQ(out.backcast.size(), 20u);
}

TEST(BlockForward, UnitRatioForecastEqualsCoefficients) {
    const ModelConfig c = single_block(8, 5, 2, 1.0, 6, 1);
    const ParamSet p = init_params(c, 4);
    const BlockLayout& bl = p.layout.blocks[0];
    Rng rng(3);
    const Vec1D x = test::random_vector(rng, 8);
    Vec1D h = pool1d(x, {2, PoolMode::Max}).values;
    h = relu(affine(h, p.weight(bl.mlp[0]), p.bias(bl.mlp[0])));
    const Vec1D theta = affine(h, p.weight(bl.forecast_head), p.bias(bl.forecast_head));
    EXPECT_EQ(block_forward(c.blocks[0], bl, p, x, 7, 5).forecast, theta);
}

TEST(BlockForward, RejectsWrongWindowLength) {
    const ModelConfig c = single_block(8, 4, 2, 1.0, 4, 1);
    const ParamSet p = init_params(c, 1);
    EXPECT_THROW(block_forward(c.blocks[0], p.layout.blocks[0], p, Vec1D(7, 0.0), 0, 4), ConfigError);
    EXPECT_THROW(network_forward(c, p, Vec1D(9, 0.0)), ConfigError);
}

TEST(NetworkForward, SingleZeroBlock) {
    const ModelConfig c = single_block(6, 3, 2, 0.5, 4, 2);
    ParamSet p = zero_params(c);
    Rng rng(4);
    const BlockLayout& bl = p.layout.blocks[0];
    for (std::size_t i = 0; i < bl.forecast_head.rows; ++i) p.values[bl.forecast_head.bias_offset + i] = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < bl.backcast_head.rows; ++i) p.values[bl.backcast_head.bias_offset + i] = rng.uniform(-1, 1);
    const Vec1D x = test::random_vector(rng, 6);
    const ForecastDecomposition d = network_forward(c, p, x);
    // forecast head has max(ceil(1.5), 2) = 2 coefficients, linearly interpolated over 3 steps
    const Vec1D fb = bias_of(p, bl.forecast_head);
    ASSERT_EQ(fb.size(), 2u);
    EXPECT_NEAR(d.total_forecast[0], fb[0], 1e-15);
    EXPECT_NEAR(d.total_forecast[1], 0.5 * (fb[0] + fb[1]), 1e-15);
    EXPECT_NEAR(d.total_forecast[2], fb[1], 1e-15);
    const Vec1D bb = bias_of(p, bl.backcast_head);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(d.final_residual[i], x[i] - bb[i]);
}

TEST(NetworkForward, ZeroBackcastBlocksSeeTheSameInput) {
    ModelConfig c = single_block(10, 4, 2, 1.0, 6, 2);
    c.blocks.push_back(c.blocks[0]);
    ParamSet p = init_params(c, 9);
    // Copy block 0 into block 1, then zero both backcast heads.
    const auto& b0 = p.layout.blocks[0];
    const auto& b1 = p.layout.blocks[1];
    std::copy_n(p.values.begin() + static_cast<long>(b0.offset), b0.size, p.values.begin() + static_cast<long>(b1.offset));
    zero_slice(p, b0.backcast_head, false);
    zero_slice(p, b1.backcast_head, false);
    Rng rng(5);
    const Vec1D x = test::random_vector(rng, 10);
    const ForecastDecomposition d = network_forward(c, p, x);
    EXPECT_EQ(d.per_block_forecasts[0], d.per_block_forecasts[1]);
    EXPECT_EQ(d.final_residual, x);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(d.total_forecast[i], 2.0 * d.per_block_forecasts[0][i]);
}

TEST(NetworkForward, TelescopingAndSumIdentities) {
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const ModelConfig c = test::random_tiny_config(rng, InterpKind::Linear, PoolMode::Max);
        const ParamSet p = init_params(c, rng.next());
        const Vec1D x = test::random_vector(rng, c.input_size, -3, 3);
        const ForecastDecomposition d = network_forward(c, p, x);
        Vec1D sum_f(c.horizon, 0.0), resid = x;
        for (const auto& f : d.per_block_forecasts) for (std::size_t i = 0; i < c.horizon; ++i) sum_f[i] += f[i];
        for (const auto& b : d.per_block_backcasts) for (std::size_t i = 0; i < c.input_size; ++i) resid[i] -= b[i];
        EXPECT_LE(test::max_abs_diff(sum_f, d.total_forecast), 1e-9);
        EXPECT_LE(test::max_abs_diff(resid, d.final_residual), 1e-9);
    }
}

TEST(NetworkForward, Deterministic) {
    Rng rng(7);
    const ModelConfig c = test::random_tiny_config(rng, InterpKind::CubicHermite, PoolMode::Average);
    const ParamSet p = init_params(c, 1);
    const Vec1D x = test::random_vector(rng, c.input_size);
    const auto a = network_forward(c, p, x);
    const auto b = network_forward(c, p, x);
    EXPECT_EQ(a.total_forecast, b.total_forecast);
    EXPECT_EQ(a.per_block_backcasts, b.per_block_backcasts);
    EXPECT_EQ(a.final_residual, b.final_residual);
    EXPECT_EQ(init_params(c, 1).values, p.values);
    EXPECT_NE(init_params(c, 2).values, p.values);
}

TEST(NetworkForward, BatchedPathMatchesReference) {
    Rng rng(8);
    for (InterpKind kind : {InterpKind::Nearest, InterpKind::Linear, InterpKind::CubicHermite}) {
        for (PoolMode pool : {PoolMode::Max, PoolMode::Average}) {
            const ModelConfig c = test::random_tiny_config(rng, kind, pool);
            const ParamSet p = init_params(c, rng.next());
            WindowBatch batch;
            for (int i = 0; i < 7; ++i) {
                batch.windows.push_back(
                    {0, 0, test::random_vector(rng, c.input_size), test::random_vector(rng, c.horizon)});
            }
            BatchedNetwork net(c);
            const Mat2D f = net.forecast(p, batch);
            for (std::size_t w = 0; w < batch.size(); ++w) {
                const Vec1D ref = network_forward(c, p, batch.windows[w].input).total_forecast;
                for (std::size_t i = 0; i < c.horizon; ++i) EXPECT_NEAR(f(w, i), ref[i], 1e-12);
            }
        }
    }
}

TEST(CountParameters, HandCountedSingleBlock) {
    const ModelConfig c = single_block(4, 2, 1, 1.0, 2, 1);
    const ParamCount n = count_parameters(c);
    // MLP 4*2+2 = 10, forecast head 2*2+2 = 6, backcast head 2*4+4 = 12
    EXPECT_EQ(n.total, 28u);
    EXPECT_EQ(n.per_block, (std::vector<std::size_t>{28}));
    EXPECT_EQ(n.forecast_head_total, 6u);
    EXPECT_EQ(zero_params(c).values.size(), 28u);
}

TEST(CountParameters, DoublingHorizonDoublesForecastHeadAtUnitRatio) {
    Rng rng(10);
    for (int i = 0; i < 50; ++i) {
        const auto H = static_cast<std::size_t>(rng.integer(2, 100));
        const auto nh = static_cast<std::size_t>(rng.integer(1, 64));
        const auto a = count_parameters(single_block(30, H, 3, 1.0, nh, 2));
        const auto b = count_parameters(single_block(30, 2 * H, 3, 1.0, nh, 2));
        EXPECT_EQ(b.forecast_head_total, 2 * a.forecast_head_total);
    }
}

TEST(CountParameters, MatchesBufferLength) {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        const ModelConfig c = test::random_tiny_config(rng, InterpKind::Linear, PoolMode::Max);
        EXPECT_EQ(count_parameters(c).total, ParamLayout::build(c).total);
        EXPECT_EQ(count_parameters(c).total, init_params(c, 1).values.size());
    }
}

TEST(CountParameters, GeometricScheduleWithinCeilingSlack) {
    Rng rng(12);
    for (int i = 0; i < 100; ++i) {
        const auto S = static_cast<std::size_t>(rng.integer(1, 5));
        const auto H = static_cast<std::size_t>(rng.integer(24, 720));
        // keep H r^S >= 1 so every block's ceil(r^l H) covers the 2-knot floor within one unit
        const double r_min = std::pow(1.0 / static_cast<double>(H), 1.0 / static_cast<double>(S));
        const double r = rng.uniform(std::max(0.05, r_min), 0.95);
        std::vector<StackSpec> stacks;
        for (std::size_t l = 1; l <= S; ++l) stacks.push_back({1, std::pow(r, static_cast<double>(l))});
        ArchitectureOptions opt;
        opt.hidden_size = 8;
        const ModelConfig c = make_model_config(5 * H, H, stacks, opt);
        const double series = static_cast<double>(H) * (1.0 - std::pow(r, static_cast<double>(S))) / (1.0 - r) * r;
        EXPECT_LE(std::abs(static_cast<double>(count_parameters(c).forecast_coeff_total) - series),
                  static_cast<double>(S));
    }
}

TEST(ModelConfig, DegenerateFullResolution) {
    ArchitectureOptions opt;
    opt.hidden_size = 16;
    const ModelConfig c = make_model_config(40, 8, {{1, 1.0}, {1, 1.0}, {1, 1.0}}, opt);
    const ParamLayout layout = ParamLayout::build(c);
    for (const BlockLayout& b : layout.blocks) {
        EXPECT_EQ(b.forecast_coeffs, 8u);
        EXPECT_EQ(b.pooled_width, 40u);
    }
}

TEST(ModelConfig, StackOrdering) {
    const std::vector<StackSpec> stacks{{1, 1.0}, {16, 1.0 / 64}, {8, 1.0 / 8}};
    const auto td = order_stacks(stacks, BlockOrder::TopDown);
    EXPECT_EQ(td[0].kernel, 16u);
    EXPECT_EQ(td[1].kernel, 8u);
    EXPECT_EQ(td[2].kernel, 1u);
    const auto bu = order_stacks(stacks, BlockOrder::BottomUp);
    EXPECT_EQ(bu[0].kernel, 1u);
    EXPECT_EQ(bu[2].kernel, 16u);
    // equal kernels: smaller ratio first
    const auto eq = order_stacks({{2, 1.0}, {2, 1.0 / 24}, {2, 1.0 / 12}}, BlockOrder::TopDown);
    EXPECT_DOUBLE_EQ(eq[0].ratio, 1.0 / 24);
    EXPECT_DOUBLE_EQ(eq[2].ratio, 1.0);
}

TEST(ModelConfig, Validation) {
    ModelConfig c = single_block(10, 4, 2, 1.0, 4, 1);
    EXPECT_NO_THROW(c.validate());
    c.blocks[0].ratio = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.blocks[0].ratio = 1.0;
    c.blocks[0].kernel = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.blocks.clear();
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Decomposition, PerStackGrouping) {
    ArchitectureOptions opt;
    opt.hidden_size = 6;
    opt.blocks_per_stack = 2;
    const ModelConfig c = make_model_config(12, 4, {{4, 0.5}, {1, 1.0}}, opt);
    ASSERT_EQ(c.blocks.size(), 4u);
    EXPECT_EQ(c.n_stacks(), 2u);
    const ParamSet p = init_params(c, 2);
    Rng rng(3);
    const auto d = network_forward(c, p, test::random_vector(rng, 12));
    const auto stacks = d.per_stack_forecasts(2);
    ASSERT_EQ(stacks.size(), 2u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(stacks[0][i], d.per_block_forecasts[0][i] + d.per_block_forecasts[1][i], 1e-15);
        EXPECT_NEAR(stacks[0][i] + stacks[1][i], d.total_forecast[i], 1e-12);
    }
}
