#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nhits/interp.hpp"
#include "nhits/numkernels.hpp"

namespace nhits {

struct BlockConfig {
    std::size_t kernel = 1;      // input pooling kernel k
    double ratio = 1.0;          // expressiveness ratio r in (0, 1]
    std::size_t hidden_size = 512;
    std::size_t n_mlp_layers = 2;
    InterpKind interp = InterpKind::Linear;
    PoolMode pool = PoolMode::Max;

    friend bool operator==(const BlockConfig&, const BlockConfig&) = default;
};

/// Top-Down: coarse blocks (large kernel, small ratio) first. Bottom-Up reverses that.
enum class BlockOrder { TopDown, BottomUp };

std::string_view to_string(BlockOrder order);
BlockOrder parse_block_order(std::string_view name);
std::string_view to_string(PoolMode mode);
PoolMode parse_pool_mode(std::string_view name);

struct ModelConfig {
    std::size_t input_size = 0;  // L
    std::size_t horizon = 0;     // H
    std::vector<BlockConfig> blocks;  // S stacks x B blocks, flattened in evaluation order
    std::size_t blocks_per_stack = 1;

    std::size_t n_stacks() const noexcept { return blocks_per_stack == 0 ? 0 : blocks.size() / blocks_per_stack; }
    /// Throws ConfigError when the configuration cannot be instantiated.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Per-stack settings that vary across the hierarchy; everything else is shared.
struct StackSpec {
    std::size_t kernel = 1;
    double ratio = 1.0;
};

struct ArchitectureOptions {
    std::size_t hidden_size = 512;
    std::size_t n_mlp_layers = 2;
    std::size_t blocks_per_stack = 1;
    InterpKind interp = InterpKind::Linear;
    PoolMode pool = PoolMode::Max;
    BlockOrder order = BlockOrder::TopDown;
};

/// Sorts stacks by decreasing kernel, then increasing ratio (stable); reversed for Bottom-Up.
std::vector<StackSpec> order_stacks(std::vector<StackSpec> stacks, BlockOrder order);

ModelConfig make_model_config(std::size_t input_size, std::size_t horizon, std::vector<StackSpec> stacks,
                              const ArchitectureOptions& options = {});

// -- Parameter layout ---------------------------------------------------------

struct LayerSlice {
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
    std::size_t rows = 0;  // output width
    std::size_t cols = 0;  // input width
    std::size_t size() const noexcept { return rows * cols + rows; }
};

struct BlockLayout {
    std::size_t offset = 0;
    std::size_t size = 0;
    std::size_t pooled_width = 0;
    std::size_t forecast_coeffs = 0;
    std::vector<LayerSlice> mlp;
    LayerSlice forecast_head;
    LayerSlice backcast_head;
};

/// Flat buffer layout, a pure function of the model configuration.
/// Per block: MLP layers (W, b) in order, then forecast head, then backcast head.
struct ParamLayout {
    std::vector<BlockLayout> blocks;
    std::size_t total = 0;

    static ParamLayout build(const ModelConfig& config);
};

struct ParamSet {
    ParamLayout layout;
    std::vector<double> values;

    MatView weight(const LayerSlice& s) const {
        return MatView(std::span<const double>(values).subspan(s.weight_offset, s.rows * s.cols), s.rows, s.cols);
    }
    std::span<const double> bias(const LayerSlice& s) const {
        return std::span<const double>(values).subspan(s.bias_offset, s.rows);
    }
};

ParamSet zero_params(const ModelConfig& config);
/// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.
ParamSet init_params(const ModelConfig& config, std::uint64_t seed);

struct ParamCount {
    std::size_t total = 0;
    std::vector<std::size_t> per_block;
    std::size_t forecast_head_total = 0;   // parameters in all forecast heads
    std::size_t forecast_coeff_total = 0;  // sum of forecast-head output widths
};

ParamCount count_parameters(const ModelConfig& config);

// -- Forward ------------------------------------------------------------------

struct BlockOutput {
    Vec1D backcast;  // length L
    Vec1D forecast;  // length H
};

struct ForecastDecomposition {
    Vec1D total_forecast;
    std::vector<Vec1D> per_block_forecasts;
    std::vector<Vec1D> per_block_backcasts;
    Vec1D final_residual;

    /// Sum of block forecasts grouped by stack.
    std::vector<Vec1D> per_stack_forecasts(std::size_t blocks_per_stack) const;
};

/// Forecast grid [t+1, t+H] and queries t+1..t+H for one block.
InterpOperator forecast_operator(const BlockConfig& block, long t, std::size_t horizon);

/// One block: pool -> MLP (affine + ReLU) -> two linear heads -> interpolate.
BlockOutput block_forward(const BlockConfig& block, const BlockLayout& layout, const ParamSet& params,
                          std::span<const double> y_window, long t, std::size_t horizon);

/// Reusable forward evaluator; caches each block's interpolation operator.
class Network {
public:
    explicit Network(ModelConfig config);

    const ModelConfig& config() const noexcept { return config_; }
    const ParamLayout& layout() const noexcept { return layout_; }
    std::span<const InterpOperator> forecast_operators() const noexcept { return operators_; }

    ForecastDecomposition forward(const ParamSet& params, std::span<const double> y_window) const;

private:
    ModelConfig config_;
    ParamLayout layout_;
    std::vector<InterpOperator> operators_;
};

ForecastDecomposition network_forward(const ModelConfig& config, const ParamSet& params,
                                      std::span<const double> y_window);

} // namespace nhits
