#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nhits/numkernels.hpp"
#include "nhits/rng.hpp"

namespace nhits {

struct Series {
    std::string id;
    std::vector<std::string> timestamps;  // original `ds` text
    std::vector<std::int64_t> time_keys;   // sortable key: integer index or seconds since epoch
    Vec1D values;

    std::size_t size() const noexcept { return values.size(); }
};

struct SeriesStats {
    std::string id;
    double mean = 0.0;
    double stddev = 1.0;
};

/// Per-series statistics of the training range.
struct NormStats {
    std::vector<SeriesStats> series;

    const SeriesStats& find(std::string_view id) const;
    double normalize(std::size_t series_index, double y) const;
    double denormalize(std::size_t series_index, double z) const;
};

struct SeriesDataset {
    std::string name;
    std::vector<Series> series;
    std::optional<NormStats> norm;

    std::size_t total_observations() const;
    std::size_t index_of(std::string_view id) const;  // throws DataError
};

enum class CsvLayout {
    Auto,  // long if the header names unique_id,ds,y; wide otherwise
    Long,  // unique_id,ds,y
    Wide,  // first column timestamps, one series per remaining column
};

/// Parses a `ds` value: a plain integer, or ISO-8601 date/time ("2016-07-01", "2016-07-01 00:15:00",
/// "2016-07-01T00:15"). Returns the sort key. Throws DataError on anything else.
std::int64_t parse_time_key(std::string_view text);

SeriesDataset read_series(std::istream& in, std::string_view source_name, CsvLayout layout = CsvLayout::Auto);
SeriesDataset load_series(const std::string& path, CsvLayout layout = CsvLayout::Auto);

/// Restricts a dataset to one series (long: unique_id, wide: column name).
SeriesDataset select_series(const SeriesDataset& ds, std::string_view id);

// -- Splits -------------------------------------------------------------------

enum class SplitPolicy {
    Default_70_10_20,
    Ettm2_60_20_20,
};

std::string_view to_string(SplitPolicy policy);
SplitPolicy parse_split_policy(std::string_view name);

enum class SplitPart : std::size_t { Train = 0, Validation = 1, Test = 2 };

std::string_view to_string(SplitPart part);
SplitPart parse_split_part(std::string_view name);

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
    std::size_t size() const noexcept { return end - begin; }
};

struct SeriesSplit {
    IndexRange train, validation, test;
    const IndexRange& operator[](SplitPart part) const;
};

/// Counts reads of each split part through window construction.
struct SplitAccessLog {
    std::array<std::size_t, 3> reads{};
    std::size_t count(SplitPart part) const { return reads[static_cast<std::size_t>(part)]; }
};

struct WindowShape {
    std::size_t input_size = 0;
    std::size_t horizon = 0;
};

struct SplitView {
    SplitPolicy policy = SplitPolicy::Default_70_10_20;
    double train_end = 0.7;  // fraction boundaries
    double val_end = 0.8;
    std::vector<SeriesSplit> series;
    std::shared_ptr<SplitAccessLog> access = std::make_shared<SplitAccessLog>();

    const IndexRange& range(std::size_t series_index, SplitPart part) const { return series.at(series_index)[part]; }
    void record_read(SplitPart part) const { ++access->reads[static_cast<std::size_t>(part)]; }
};

/// Chronological cut per series. Validation and test lengths are the policy fractions of the series
/// length rounded down; the train range takes the remainder. When `shape` is given, every series must
/// host a full training window and at least one rolling window in validation and test.
SplitView split(const SeriesDataset& ds, SplitPolicy policy, std::optional<WindowShape> shape = std::nullopt);

/// Fits per-series mean/std on each training range and returns the normalized dataset.
std::pair<SeriesDataset, NormStats> fit_normalize(const SeriesDataset& ds, const SplitView& view);
/// Normalizes with previously fitted statistics (matched by series id).
SeriesDataset apply_normalize(const SeriesDataset& ds, const NormStats& stats);

// -- Windows ------------------------------------------------------------------

/// `anchor` is the index of the last input observation: input = y[anchor-L+1 .. anchor],
/// target = y[anchor+1 .. anchor+H].
struct WindowRef {
    std::size_t series = 0;
    std::size_t anchor = 0;
    friend bool operator==(const WindowRef&, const WindowRef&) = default;
};

enum class WindowPolicy {
    WithinRange,     // input and target both inside the range (training)
    TargetsInRange,  // only the target inside the range; input may read earlier history (evaluation)
};

struct WindowSample {
    std::size_t series = 0;
    std::size_t anchor = 0;
    Vec1D input;
    Vec1D target;
};

struct WindowBatch {
    std::vector<WindowSample> windows;
    std::size_t size() const noexcept { return windows.size(); }
    bool empty() const noexcept { return windows.empty(); }
};

/// All admissible windows at stride 1, series by series. Records a read of `part`.
std::vector<WindowRef> admissible_windows(const SeriesDataset& ds, const SplitView& view, SplitPart part,
                                          WindowShape shape, WindowPolicy policy);

WindowBatch make_batch(const SeriesDataset& ds, std::span<const WindowRef> refs, WindowShape shape);

/// Enumeration mode: every admissible window, stride 1. Throws DataError if there is none.
WindowBatch enumerate_windows(const SeriesDataset& ds, const SplitView& view, SplitPart part, WindowShape shape,
                              WindowPolicy policy = WindowPolicy::TargetsInRange);

/// Uniform sampling with replacement over a fixed set of admissible windows.
class WindowSampler {
public:
    WindowSampler(const SeriesDataset& ds, const SplitView& view, SplitPart part, WindowShape shape,
                  std::uint64_t seed);

    std::size_t admissible_count() const noexcept { return refs_.size(); }
    std::vector<WindowRef> next_refs(std::size_t count);
    WindowBatch next(std::size_t count);

private:
    const SeriesDataset* ds_;
    WindowShape shape_;
    std::vector<WindowRef> refs_;
    Rng rng_;
};

WindowBatch sample_windows(const SeriesDataset& ds, const SplitView& view, SplitPart part, WindowShape shape,
                           std::size_t count, std::uint64_t seed);

} // namespace nhits
