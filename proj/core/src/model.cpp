#include "nhits/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nhits/error.hpp"
#include "nhits/rng.hpp"

namespace nhits {

std::string_view to_string(BlockOrder order) {
    return order == BlockOrder::TopDown ? "top-down" : "bottom-up";
}

BlockOrder parse_block_order(std::string_view name) {
    if (name == "top-down" || name == "topdown") return BlockOrder::TopDown;
    if (name == "bottom-up" || name == "bottomup") return BlockOrder::BottomUp;
    throw ConfigError("unknown block order '" + std::string(name) + "'");
}

std::string_view to_string(PoolMode mode) { return mode == PoolMode::Max ? "max" : "average"; }

PoolMode parse_pool_mode(std::string_view name) {
    if (name == "max") return PoolMode::Max;
    if (name == "average" || name == "avg") return PoolMode::Average;
    throw ConfigError("unknown pooling mode '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
    if (input_size == 0) throw ConfigError("input size L must be positive");
    if (horizon < 2) throw ConfigError("horizon H must be at least 2");
    if (blocks.empty()) throw ConfigError("model needs at least one block");
    if (blocks_per_stack == 0 || blocks.size() % blocks_per_stack != 0) {
        throw ConfigError("block count " + std::to_string(blocks.size()) + " is not a multiple of blocks per stack " +
                          std::to_string(blocks_per_stack));
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        const std::string where = "block " + std::to_string(i) + ": ";
        if (b.kernel == 0) throw ConfigError(where + "pooling kernel must be >= 1");
        if (!(b.ratio > 0.0) || b.ratio > 1.0) throw ConfigError(where + "ratio must lie in (0, 1]");
        if (b.hidden_size == 0) throw ConfigError(where + "hidden size must be positive");
        if (b.n_mlp_layers == 0) throw ConfigError(where + "needs at least one MLP layer");
    }
}

std::vector<StackSpec> order_stacks(std::vector<StackSpec> stacks, BlockOrder order) {
    std::stable_sort(stacks.begin(), stacks.end(), [](const StackSpec& a, const StackSpec& b) {
        if (a.kernel != b.kernel) return a.kernel > b.kernel;
        return a.ratio < b.ratio;
    });
    if (order == BlockOrder::BottomUp) std::reverse(stacks.begin(), stacks.end());
    return stacks;
}

ModelConfig make_model_config(std::size_t input_size, std::size_t horizon, std::vector<StackSpec> stacks,
                              const ArchitectureOptions& options) {
    ModelConfig config;
    config.input_size = input_size;
    config.horizon = horizon;
    config.blocks_per_stack = options.blocks_per_stack;
    for (const StackSpec& s : order_stacks(std::move(stacks), options.order)) {
        for (std::size_t b = 0; b < options.blocks_per_stack; ++b) {
            config.blocks.push_back(BlockConfig{s.kernel, s.ratio, options.hidden_size, options.n_mlp_layers,
                                                options.interp, options.pool});
        }
    }
    config.validate();
    return config;
}

ParamLayout ParamLayout::build(const ModelConfig& config) {
    config.validate();
    ParamLayout layout;
    std::size_t cursor = 0;
    auto take = [&cursor](std::size_t rows, std::size_t cols) {
        LayerSlice s;
        s.rows = rows;
        s.cols = cols;
        s.weight_offset = cursor;
        cursor += rows * cols;
        s.bias_offset = cursor;
        cursor += rows;
        return s;
    };

    for (const BlockConfig& b : config.blocks) {
        BlockLayout bl;
        bl.offset = cursor;
        bl.pooled_width = pooled_width(config.input_size, b.kernel);
        bl.forecast_coeffs = knot_count(config.horizon, b.ratio);
        std::size_t in = bl.pooled_width;
        for (std::size_t l = 0; l < b.n_mlp_layers; ++l) {
            bl.mlp.push_back(take(b.hidden_size, in));
            in = b.hidden_size;
        }
        bl.forecast_head = take(bl.forecast_coeffs, b.hidden_size);
        bl.backcast_head = take(config.input_size, b.hidden_size);
        bl.size = cursor - bl.offset;
        layout.blocks.push_back(std::move(bl));
    }
    layout.total = cursor;
    return layout;
}

ParamSet zero_params(const ModelConfig& config) {
    ParamSet p;
    p.layout = ParamLayout::build(config);
    p.values.assign(p.layout.total, 0.0);
    return p;
}

ParamSet init_params(const ModelConfig& config, std::uint64_t seed) {
    ParamSet p = zero_params(config);
    Rng rng(seed);
    auto fill = [&](const LayerSlice& s) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(s.cols));
        for (std::size_t i = 0; i < s.size(); ++i) p.values[s.weight_offset + i] = rng.uniform(-bound, bound);
    };
    for (const BlockLayout& bl : p.layout.blocks) {
        for (const LayerSlice& s : bl.mlp) fill(s);
        fill(bl.forecast_head);
        fill(bl.backcast_head);
    }
    return p;
}

ParamCount count_parameters(const ModelConfig& config) {
    config.validate();
    ParamCount count;
    const std::size_t L = config.input_size;
    for (const BlockConfig& b : config.blocks) {
        const std::size_t nh = b.hidden_size;
        const std::size_t pooled = pooled_width(L, b.kernel);
        const std::size_t nf = knot_count(config.horizon, b.ratio);
        const std::size_t mlp = pooled * nh + nh + (b.n_mlp_layers - 1) * (nh * nh + nh);
        const std::size_t fhead = nh * nf + nf;
        const std::size_t bhead = nh * L + L;
        count.per_block.push_back(mlp + fhead + bhead);
        count.total += mlp + fhead + bhead;
        count.forecast_head_total += fhead;
        count.forecast_coeff_total += nf;
    }
    return count;
}

std::vector<Vec1D> ForecastDecomposition::per_stack_forecasts(std::size_t blocks_per_stack) const {
    if (blocks_per_stack == 0 || per_block_forecasts.size() % blocks_per_stack != 0) {
        throw ConfigError("blocks per stack does not divide the block count");
    }
    std::vector<Vec1D> stacks;
    for (std::size_t b = 0; b < per_block_forecasts.size(); ++b) {
        if (b % blocks_per_stack == 0) stacks.emplace_back(total_forecast.size(), 0.0);
        for (std::size_t i = 0; i < total_forecast.size(); ++i) stacks.back()[i] += per_block_forecasts[b][i];
    }
    return stacks;
}

InterpOperator forecast_operator(const BlockConfig& block, long t, std::size_t horizon) {
    const long t_end = t + static_cast<long>(horizon);
    KnotGrid grid = build_knot_grid(t + 1, t_end, block.ratio);
    std::vector<double> queries(horizon);
    for (std::size_t i = 0; i < horizon; ++i) queries[i] = static_cast<double>(t + 1 + static_cast<long>(i));
    return InterpOperator(block.interp, grid, queries);
}

namespace {

BlockOutput run_block(const BlockConfig& block, const BlockLayout& layout, const ParamSet& params,
                      const InterpOperator& op, std::span<const double> y_window) {
    if (y_window.size() != layout.backcast_head.rows) {
        throw ConfigError("block input has length " + std::to_string(y_window.size()) + ", expected " +
                          std::to_string(layout.backcast_head.rows));
    }
    if (params.values.size() < layout.offset + layout.size) {
        throw ConfigError("parameter buffer too short for block layout");
    }
    Vec1D h = pool1d(y_window, PoolSpec{block.kernel, block.pool}).values;
    for (const LayerSlice& s : layout.mlp) h = relu(affine(h, params.weight(s), params.bias(s)));

    const Vec1D theta_f = affine(h, params.weight(layout.forecast_head), params.bias(layout.forecast_head));
    BlockOutput out;
    out.backcast = affine(h, params.weight(layout.backcast_head), params.bias(layout.backcast_head));
    out.forecast = op.apply(theta_f);
    return out;
}

} // namespace

BlockOutput block_forward(const BlockConfig& block, const BlockLayout& layout, const ParamSet& params,
                          std::span<const double> y_window, long t, std::size_t horizon) {
    if (layout.forecast_coeffs != knot_count(horizon, block.ratio)) {
        throw ConfigError("block layout does not match horizon/ratio");
    }
    return run_block(block, layout, params, forecast_operator(block, t, horizon), y_window);
}

Network::Network(ModelConfig config) : config_(std::move(config)), layout_(ParamLayout::build(config_)) {
    for (const BlockConfig& b : config_.blocks) operators_.push_back(forecast_operator(b, 0, config_.horizon));
}

ForecastDecomposition Network::forward(const ParamSet& params, std::span<const double> y_window) const {
    if (y_window.size() != config_.input_size) {
        throw ConfigError("input window has length " + std::to_string(y_window.size()) + ", expected L=" +
                          std::to_string(config_.input_size));
    }
    if (params.values.size() != layout_.total) {
        throw ConfigError("parameter buffer has " + std::to_string(params.values.size()) + " entries, config needs " +
                          std::to_string(layout_.total));
    }
    ForecastDecomposition d;
    d.total_forecast.assign(config_.horizon, 0.0);
    d.final_residual.assign(y_window.begin(), y_window.end());

    for (std::size_t b = 0; b < config_.blocks.size(); ++b) {
        BlockOutput out = run_block(config_.blocks[b], layout_.blocks[b], params, operators_[b], d.final_residual);
        for (std::size_t i = 0; i < config_.horizon; ++i) d.total_forecast[i] += out.forecast[i];
        for (std::size_t i = 0; i < config_.input_size; ++i) d.final_residual[i] -= out.backcast[i];
        d.per_block_forecasts.push_back(std::move(out.forecast));
        d.per_block_backcasts.push_back(std::move(out.backcast));
    }
    return d;
}

ForecastDecomposition network_forward(const ModelConfig& config, const ParamSet& params,
                                      std::span<const double> y_window) {
    return Network(config).forward(params, y_window);
}

} // namespace nhits
