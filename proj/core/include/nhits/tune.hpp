#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "nhits/data.hpp"
#include "nhits/eval.hpp"
#include "nhits/model.hpp"
#include "nhits/rng.hpp"
#include "nhits/train.hpp"

namespace nhits {

using Triple = std::array<std::size_t, 3>;

/// Discrete search space; coefficient schedules are given as r^-1 per stack.
struct SearchSpace {
    std::vector<Triple> pooling_kernels;
    std::vector<Triple> inverse_ratios;
    std::uint64_t seed_min = 1;
    std::uint64_t seed_max = 10;

    // Fixed settings shared by every candidate.
    std::size_t input_multiplier = 5;  // L = m * H
    std::size_t hidden_size = 512;
    std::size_t n_mlp_layers = 2;
    std::size_t blocks_per_stack = 1;
    InterpKind interp = InterpKind::Linear;
    PoolMode pool = PoolMode::Max;
    BlockOrder order = BlockOrder::TopDown;
    std::size_t steps = 1000;
    std::size_t batch_size = 256;
    double lr0 = 1e-3;
    LossKind loss = LossKind::MAE;

    /// The published grid: five kernel triples, five schedules, seeds 1..10.
    static SearchSpace published();
    std::size_t cardinality() const;
    bool contains(const Triple& kernels, const Triple& inverse_ratios, std::uint64_t seed) const;
};

struct Candidate {
    Triple kernels{};
    Triple inverse_ratios{};
    std::uint64_t seed = 0;

    ModelConfig model_config(const SearchSpace& space, std::size_t horizon) const;
    TrainConfig train_config(const SearchSpace& space) const;
    friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Independent uniform draw of (kernels, schedule, seed). Throws ConfigError on an empty axis.
Candidate sample_config(const SearchSpace& space, Rng& rng);

struct TrialRecord {
    std::size_t trial = 0;
    Candidate candidate;
    ModelConfig config;
    double val_mae = 0.0;
    double val_mse = 0.0;
    double seconds = 0.0;
    bool failed = false;  // non-finite loss or activations
};

struct SearchOptions {
    std::size_t iterations = 20;
    std::uint64_t search_seed = 0;
    std::size_t threads = 1;
};

struct SearchResult {
    std::size_t best_index = 0;
    std::vector<TrialRecord> trials;
    ParamSet best_params;

    const TrialRecord& best() const { return trials.at(best_index); }
};

/// Runs one trial: train, then validation metrics. Replaceable for testing.
using TrialRunner = std::function<std::pair<MetricsReport, ParamSet>(const Candidate&, const ModelConfig&,
                                                                      const TrainConfig&)>;

/// Index of the minimum validation MAE among successful trials; ties go to the earliest trial.
std::optional<std::size_t> select_best(std::span<const TrialRecord> trials);

/// Random search over `space`, selecting by validation MAE. Reads only train and validation ranges.
/// Throws NumericError when every trial fails.
SearchResult search(const SearchSpace& space, const SeriesDataset& data, const SplitView& view, std::size_t horizon,
                    const SearchOptions& options);
SearchResult search(const SearchSpace& space, std::size_t horizon, const SearchOptions& options,
                    const TrialRunner& runner);

/// Columns: trial,kernels,coeff_schedule,seed,val_mae,val_mse,seconds
void write_trials_csv(std::ostream& out, std::span<const TrialRecord> trials, bool include_seconds = true);

} // namespace nhits
