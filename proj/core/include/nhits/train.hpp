#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "nhits/data.hpp"
#include "nhits/model.hpp"

namespace nhits {

enum class LossKind { MAE, MSE };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// Mean absolute or mean squared error over one horizon. Throws ConfigError on empty or mismatched input.
double loss(LossKind kind, std::span<const double> y, std::span<const double> y_hat);

struct AdamState {
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double epsilon = 1e-8;

    Vec1D m;
    Vec1D v;
    std::size_t step_count = 0;

    AdamState() = default;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected ADAM update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

struct TrainConfig {
    std::size_t steps = 1000;
    std::size_t batch_size = 256;
    double lr0 = 1e-3;
    std::vector<std::size_t> decay_points{250, 500, 750};
    double decay_factor = 0.5;
    LossKind loss = LossKind::MAE;
    std::uint64_t seed = 1;

    /// Defaults with the three halvings at floor(steps/4), floor(steps/2), floor(3*steps/4).
    static TrainConfig with_steps(std::size_t steps);
    void validate() const;
};

double lr_at(std::size_t step, const TrainConfig& cfg);

/// Batched forward/backward over flat parameters. Reuses its workspace across calls.
class BatchedNetwork {
public:
    explicit BatchedNetwork(ModelConfig config);
    ~BatchedNetwork();
    BatchedNetwork(BatchedNetwork&&) noexcept;
    BatchedNetwork& operator=(BatchedNetwork&&) noexcept;

    const ModelConfig& config() const noexcept;

    /// Total forecasts, one row per window (rows = batch, cols = H).
    Mat2D forecast(const ParamSet& params, const WindowBatch& batch);

    /// Mean batch loss; writes d(loss)/d(params) into `grads` (overwritten).
    double loss_and_gradient(const ParamSet& params, const WindowBatch& batch, LossKind kind, std::span<double> grads);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct GradResult {
    double loss_value = 0.0;
    Vec1D grads;
};

/// d(mean batch loss)/d(theta). The MAE subgradient at a zero residual is 0.
/// Throws NumericError if activations or the loss become non-finite.
GradResult backward(const ModelConfig& config, const ParamSet& params, const WindowBatch& batch, LossKind kind);

/// Mean batch loss through the single-window reference forward path.
double batch_loss(const ModelConfig& config, const ParamSet& params, const WindowBatch& batch, LossKind kind);

struct LossRecord {
    std::size_t step = 0;
    double lr = 0.0;
    double train_loss = 0.0;
};

struct TrainResult {
    ParamSet params;
    std::vector<LossRecord> history;
    std::vector<std::vector<WindowRef>> sampled;  // filled only when requested
};

struct TrainOptions {
    bool record_batches = false;
};

/// Fixed-budget training on the training part of an already normalized dataset.
TrainResult train(const ModelConfig& config, const SeriesDataset& data, const SplitView& view,
                  const TrainConfig& tcfg, const TrainOptions& options = {});

void write_loss_csv(std::ostream& out, std::span<const LossRecord> history);

} // namespace nhits
