#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nhits/data.hpp"
#include "nhits/model.hpp"

namespace nhits {

struct SeriesMetrics {
    std::string id;
    double mse = 0.0;
    double mae = 0.0;
    std::size_t window_count = 0;
};

struct WindowMetrics {
    std::size_t series = 0;
    std::size_t anchor = 0;
    double mse = 0.0;
    double mae = 0.0;
};

struct MetricsReport {
    std::size_t horizon = 0;
    SplitPart part = SplitPart::Test;
    std::vector<SeriesMetrics> per_series;
    double mse = 0.0;  // mean over windows within a series, then mean over series
    double mae = 0.0;
    std::size_t window_count = 0;
    bool denormalized = false;
    std::vector<WindowMetrics> windows;  // populated when EvalOptions::keep_windows
};

struct EvalOptions {
    bool denormalize = false;
    bool keep_windows = false;
    std::size_t threads = 1;
    std::size_t chunk = 256;
};

/// Rolling stride-1 evaluation of every window whose target lies in `part`.
/// `data` must be normalized; denormalized reporting requires data.norm.
MetricsReport evaluate(const ModelConfig& config, const ParamSet& params, const SeriesDataset& data,
                       const SplitView& view, SplitPart part, const EvalOptions& options = {});

struct ReportMeta {
    std::string dataset;
    std::uint64_t seed = 0;
    std::string config_digest;
};

/// Schema-versioned JSON document of a report. Contains no timestamps.
std::string report_to_json(const MetricsReport& report, const ReportMeta& meta);

} // namespace nhits
