#include "nhits/tune.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>

#include "nhits/error.hpp"
#include "nhits/io.hpp"
#include "parallel.hpp"

namespace nhits {

SearchSpace SearchSpace::published() {
    SearchSpace s;
    s.pooling_kernels = {{2, 2, 2}, {4, 4, 4}, {8, 8, 8}, {8, 4, 1}, {16, 8, 1}};
    s.inverse_ratios = {{168, 24, 1}, {24, 12, 1}, {180, 60, 1}, {40, 20, 1}, {64, 8, 1}};
    return s;
}

std::size_t SearchSpace::cardinality() const {
    return pooling_kernels.size() * inverse_ratios.size() * static_cast<std::size_t>(seed_max - seed_min + 1);
}

bool SearchSpace::contains(const Triple& kernels, const Triple& inv, std::uint64_t seed) const {
    auto in = [](const std::vector<Triple>& v, const Triple& t) { return std::find(v.begin(), v.end(), t) != v.end(); };
    return in(pooling_kernels, kernels) && in(inverse_ratios, inv) && seed >= seed_min && seed <= seed_max;
}

ModelConfig Candidate::model_config(const SearchSpace& space, std::size_t horizon) const {
    std::vector<StackSpec> stacks;
    for (std::size_t i = 0; i < 3; ++i) {
        if (kernels[i] == 0 || inverse_ratios[i] == 0) throw ConfigError("kernels and r^-1 must be positive");
        stacks.push_back(StackSpec{kernels[i], 1.0 / static_cast<double>(inverse_ratios[i])});
    }
    ArchitectureOptions opt;
    opt.hidden_size = space.hidden_size;
    opt.n_mlp_layers = space.n_mlp_layers;
    opt.blocks_per_stack = space.blocks_per_stack;
    opt.interp = space.interp;
    opt.pool = space.pool;
    opt.order = space.order;
    return make_model_config(space.input_multiplier * horizon, horizon, std::move(stacks), opt);
}

TrainConfig Candidate::train_config(const SearchSpace& space) const {
    TrainConfig t = TrainConfig::with_steps(space.steps);
    t.batch_size = space.batch_size;
    t.lr0 = space.lr0;
    t.loss = space.loss;
    t.seed = seed;
    return t;
}

Candidate sample_config(const SearchSpace& space, Rng& rng) {
    if (space.pooling_kernels.empty() || space.inverse_ratios.empty() || space.seed_max < space.seed_min) {
        throw ConfigError("search space has an empty axis");
    }
    Candidate c;
    c.kernels = space.pooling_kernels[rng.index(space.pooling_kernels.size())];
    c.inverse_ratios = space.inverse_ratios[rng.index(space.inverse_ratios.size())];
    c.seed = space.seed_min + rng.index(space.seed_max - space.seed_min + 1);
    return c;
}

std::optional<std::size_t> select_best(std::span<const TrialRecord> trials) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (trials[i].failed || !std::isfinite(trials[i].val_mae)) continue;
        if (!best || trials[i].val_mae < trials[*best].val_mae) best = i;
    }
    return best;
}

SearchResult search(const SearchSpace& space, std::size_t horizon, const SearchOptions& options,
                    const TrialRunner& runner) {
    if (options.iterations == 0) throw ConfigError("search needs at least one iteration");
    // Candidates are drawn up front so the stream does not depend on scheduling.
    Rng rng(options.search_seed);
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < options.iterations; ++i) candidates.push_back(sample_config(space, rng));

    SearchResult result;
    result.trials.resize(candidates.size());
    std::mutex best_mutex;
    std::optional<std::size_t> held;  // trial whose parameters are in result.best_params

    detail::parallel_for(candidates.size(), options.threads, [&](std::size_t, std::size_t i) {
        TrialRecord rec;
        rec.trial = i;
        rec.candidate = candidates[i];
        rec.config = candidates[i].model_config(space, horizon);
        const auto start = std::chrono::steady_clock::now();
        std::optional<ParamSet> params;
        try {
            auto [report, trained] = runner(rec.candidate, rec.config, rec.candidate.train_config(space));
            rec.val_mae = report.mae;
            rec.val_mse = report.mse;
            params = std::move(trained);
        } catch (const NumericError&) {
            rec.failed = true;
            rec.val_mae = rec.val_mse = std::numeric_limits<double>::quiet_NaN();
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        std::lock_guard lock(best_mutex);
        if (params) {
            const bool better = !held || rec.val_mae < result.trials[*held].val_mae ||
                                (rec.val_mae == result.trials[*held].val_mae && i < *held);
            if (better) {
                held = i;
                result.best_params = std::move(*params);
            }
        }
        result.trials[i] = std::move(rec);
    });

    const auto best = select_best(result.trials);
    if (!best) throw NumericError("all " + std::to_string(result.trials.size()) + " trials failed");
    result.best_index = *best;
    return result;
}

SearchResult search(const SearchSpace& space, const SeriesDataset& data, const SplitView& view, std::size_t horizon,
                    const SearchOptions& options) {
    TrialRunner runner = [&](const Candidate&, const ModelConfig& config, const TrainConfig& tcfg) {
        TrainResult trained = train(config, data, view, tcfg);
        MetricsReport report = evaluate(config, trained.params, data, view, SplitPart::Validation);
        return std::pair{std::move(report), std::move(trained.params)};
    };
    return search(space, horizon, options, runner);
}

namespace {

std::string join(const Triple& t) {
    return std::to_string(t[0]) + "-" + std::to_string(t[1]) + "-" + std::to_string(t[2]);
}

std::string metric(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

} // namespace

void write_trials_csv(std::ostream& out, std::span<const TrialRecord> trials, bool include_seconds) {
    out << "trial,kernels,coeff_schedule,seed,val_mae,val_mse" << (include_seconds ? ",seconds" : "") << '\n';
    for (const TrialRecord& r : trials) {
        out << r.trial << ',' << join(r.candidate.kernels) << ',' << join(r.candidate.inverse_ratios) << ','
            << r.candidate.seed << ',' << metric(r.val_mae) << ',' << metric(r.val_mse);
        if (include_seconds) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
            out << ',' << buf;
        }
        out << '\n';
    }
}

} // namespace nhits
