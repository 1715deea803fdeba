#include "nhits/eval.hpp"

#include <json.hpp>

#include <cmath>
#include <string>

#include "nhits/error.hpp"
#include "nhits/train.hpp"
#include "parallel.hpp"

namespace nhits {

MetricsReport evaluate(const ModelConfig& config, const ParamSet& params, const SeriesDataset& data,
                       const SplitView& view, SplitPart part, const EvalOptions& options) {
    const WindowShape shape{config.input_size, config.horizon};
    const std::vector<WindowRef> refs = admissible_windows(data, view, part, shape, WindowPolicy::TargetsInRange);
    if (refs.empty()) {
        throw DataError(std::string(to_string(part)) + " range admits no window for L=" +
                        std::to_string(config.input_size) + ", H=" + std::to_string(config.horizon));
    }
    if (options.denormalize && !data.norm) throw ConfigError("denormalized metrics need normalization statistics");

    const std::size_t chunk = std::max<std::size_t>(1, options.chunk);
    const std::size_t n_chunks = (refs.size() + chunk - 1) / chunk;
    const std::size_t threads = std::max<std::size_t>(1, options.threads);
    std::vector<WindowMetrics> per_window(refs.size());
    std::vector<BatchedNetwork> nets;
    for (std::size_t t = 0; t < std::min(threads, n_chunks); ++t) nets.emplace_back(config);

    detail::parallel_for(n_chunks, threads, [&](std::size_t worker, std::size_t c) {
        const std::size_t lo = c * chunk;
        const std::size_t hi = std::min(lo + chunk, refs.size());
        const WindowBatch batch = make_batch(data, std::span(refs).subspan(lo, hi - lo), shape);
        const Mat2D forecast = nets[worker].forecast(params, batch);
        for (std::size_t w = 0; w < batch.size(); ++w) {
            const WindowSample& s = batch.windows[w];
            double abs_sum = 0.0, sq_sum = 0.0;
            for (std::size_t i = 0; i < config.horizon; ++i) {
                double y = s.target[i];
                double y_hat = forecast(w, i);
                if (options.denormalize) {
                    y = data.norm->denormalize(s.series, y);
                    y_hat = data.norm->denormalize(s.series, y_hat);
                }
                const double e = y - y_hat;
                abs_sum += std::abs(e);
                sq_sum += e * e;
            }
            const double h = static_cast<double>(config.horizon);
            per_window[lo + w] = WindowMetrics{s.series, s.anchor, sq_sum / h, abs_sum / h};
        }
    });

    MetricsReport report;
    report.horizon = config.horizon;
    report.part = part;
    report.denormalized = options.denormalize;
    report.window_count = refs.size();
    report.per_series.resize(data.series.size());
    for (std::size_t i = 0; i < data.series.size(); ++i) report.per_series[i].id = data.series[i].id;
    for (const WindowMetrics& w : per_window) {
        SeriesMetrics& m = report.per_series[w.series];
        m.mse += w.mse;
        m.mae += w.mae;
        ++m.window_count;
    }
    std::size_t counted = 0;
    for (SeriesMetrics& m : report.per_series) {
        if (m.window_count == 0) continue;
        m.mse /= static_cast<double>(m.window_count);
        m.mae /= static_cast<double>(m.window_count);
        report.mse += m.mse;
        report.mae += m.mae;
        ++counted;
    }
    report.mse /= static_cast<double>(counted);
    report.mae /= static_cast<double>(counted);
    if (!std::isfinite(report.mse) || !std::isfinite(report.mae)) throw NumericError("non-finite evaluation metrics");
    if (options.keep_windows) report.windows = std::move(per_window);
    return report;
}

std::string report_to_json(const MetricsReport& report, const ReportMeta& meta) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["dataset"] = meta.dataset;
    j["split"] = std::string(to_string(report.part));
    j["horizon"] = report.horizon;
    j["loss_scale"] = report.denormalized ? "denormalized" : "normalized";
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const SeriesMetrics& m : report.per_series) {
        per[m.id] = {{"mse", m.mse}, {"mae", m.mae}, {"window_count", m.window_count}};
    }
    j["per_series"] = std::move(per);
    j["averaged"] = {{"mse", report.mse}, {"mae", report.mae}};
    j["window_count"] = report.window_count;
    j["seed"] = meta.seed;
    j["config_digest"] = meta.config_digest;
    return j.dump(2) + "\n";
}

} // namespace nhits
