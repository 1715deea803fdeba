#include "nhits/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <string>

#include "nhits/error.hpp"

namespace nhits {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.emplace_back(trim(cur));
    return fields;
}

bool parse_int(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

// Days since 1970-01-01 of a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::string row_context(std::string_view source, std::size_t line) {
    return std::string(source) + ":" + std::to_string(line);
}

void finalize_series(Series& s, std::string_view source) {
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s.time_keys[a] < s.time_keys[b]; });
    Series sorted;
    sorted.id = s.id;
    for (std::size_t i : order) {
        if (!sorted.time_keys.empty() && sorted.time_keys.back() == s.time_keys[i]) {
            throw DataError(std::string(source) + ": duplicate timestamp '" + s.timestamps[i] + "' in series '" +
                            s.id + "'");
        }
        sorted.timestamps.push_back(std::move(s.timestamps[i]));
        sorted.time_keys.push_back(s.time_keys[i]);
        sorted.values.push_back(s.values[i]);
    }
    s = std::move(sorted);
}

SeriesDataset read_long(std::istream& in, std::string_view source, const std::vector<std::string>& header) {
    auto col = [&](const char* name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw DataError(std::string(source) + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_id = col("unique_id");
    const std::size_t c_ds = col("ds");
    const std::size_t c_y = col("y");
    const std::size_t need = std::max({c_id, c_ds, c_y}) + 1;

    SeriesDataset ds;
    ds.name = std::string(source);
    std::map<std::string, std::size_t, std::less<>> index;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < need) {
            throw DataError(row_context(source, lineno) + ": expected at least " + std::to_string(need) + " fields");
        }
        double y = 0.0;
        if (!parse_double(fields[c_y], y)) {
            throw DataError(row_context(source, lineno) + ": unparseable value '" + fields[c_y] + "'");
        }
        std::int64_t key = 0;
        try {
            key = parse_time_key(fields[c_ds]);
        } catch (const DataError& e) {
            throw DataError(row_context(source, lineno) + ": " + e.what());
        }
        auto [it, inserted] = index.try_emplace(fields[c_id], ds.series.size());
        if (inserted) ds.series.push_back(Series{fields[c_id], {}, {}, {}});
        Series& s = ds.series[it->second];
        s.timestamps.push_back(fields[c_ds]);
        s.time_keys.push_back(key);
        s.values.push_back(y);
    }
    for (Series& s : ds.series) finalize_series(s, source);
    return ds;
}

SeriesDataset read_wide(std::istream& in, std::string_view source, const std::vector<std::string>& header) {
    if (header.size() < 2) throw DataError(std::string(source) + ": wide layout needs a time column and a value column");
    SeriesDataset ds;
    ds.name = std::string(source);
    for (std::size_t c = 1; c < header.size(); ++c) ds.series.push_back(Series{header[c], {}, {}, {}});
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError(row_context(source, lineno) + ": expected " + std::to_string(header.size()) + " fields");
        }
        std::int64_t key = 0;
        try {
            key = parse_time_key(fields[0]);
        } catch (const DataError& e) {
            throw DataError(row_context(source, lineno) + ": " + e.what());
        }
        for (std::size_t c = 1; c < fields.size(); ++c) {
            double y = 0.0;
            if (!parse_double(fields[c], y)) {
                throw DataError(row_context(source, lineno) + ": unparseable value '" + fields[c] + "' in column '" +
                                header[c] + "'");
            }
            Series& s = ds.series[c - 1];
            s.timestamps.push_back(fields[0]);
            s.time_keys.push_back(key);
            s.values.push_back(y);
        }
    }
    for (Series& s : ds.series) finalize_series(s, source);
    return ds;
}

} // namespace

std::int64_t parse_time_key(std::string_view text) {
    text = trim(text);
    std::int64_t integer = 0;
    if (parse_int(text, integer)) return integer;

    // YYYY-MM-DD[( |T)HH:MM[:SS]]
    auto num = [&](std::size_t pos, std::size_t len, std::int64_t& out) {
        return pos + len <= text.size() && parse_int(text.substr(pos, len), out);
    };
    std::int64_t y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    bool ok = text.size() >= 10 && num(0, 4, y) && text[4] == '-' && num(5, 2, mo) && text[7] == '-' &&
              num(8, 2, d) && mo >= 1 && mo <= 12 && d >= 1 && d <= 31;
    if (ok && text.size() > 10) {
        ok = (text[10] == ' ' || text[10] == 'T') && text.size() >= 16 && num(11, 2, h) && text[13] == ':' &&
             num(14, 2, mi) && h < 24 && mi < 60;
        if (ok && text.size() > 16) {
            ok = text.size() == 19 && text[16] == ':' && num(17, 2, s) && s < 61;
        }
    }
    if (!ok) throw DataError("unparseable timestamp '" + std::string(text) + "'");
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 + h * 3600 + mi * 60 + s;
}

SeriesDataset read_series(std::istream& in, std::string_view source_name, CsvLayout layout) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(std::string(source_name) + ": empty file");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);
    if (layout == CsvLayout::Auto) {
        layout = std::find(header.begin(), header.end(), "unique_id") != header.end() ? CsvLayout::Long
                                                                                       : CsvLayout::Wide;
    }
    SeriesDataset ds = layout == CsvLayout::Long ? read_long(in, source_name, header)
                                                 : read_wide(in, source_name, header);
    if (ds.series.empty()) throw DataError(std::string(source_name) + ": no data rows");
    return ds;
}

SeriesDataset load_series(const std::string& path, CsvLayout layout) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_series(in, path, layout);
}

std::size_t SeriesDataset::total_observations() const {
    std::size_t n = 0;
    for (const Series& s : series) n += s.size();
    return n;
}

std::size_t SeriesDataset::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].id == id) return i;
    }
    throw DataError("series '" + std::string(id) + "' not found in " + name);
}

SeriesDataset select_series(const SeriesDataset& ds, std::string_view id) {
    SeriesDataset out;
    out.name = ds.name;
    out.series.push_back(ds.series[ds.index_of(id)]);
    if (ds.norm) out.norm = NormStats{{ds.norm->find(id)}};
    return out;
}

const SeriesStats& NormStats::find(std::string_view id) const {
    for (const SeriesStats& s : series) {
        if (s.id == id) return s;
    }
    throw DataError("no normalization statistics for series '" + std::string(id) + "'");
}

double NormStats::normalize(std::size_t i, double y) const { return (y - series.at(i).mean) / series.at(i).stddev; }
double NormStats::denormalize(std::size_t i, double z) const { return z * series.at(i).stddev + series.at(i).mean; }

// -- Splits -------------------------------------------------------------------

std::string_view to_string(SplitPolicy policy) {
    return policy == SplitPolicy::Default_70_10_20 ? "default_70_10_20" : "ettm2_60_20_20";
}

SplitPolicy parse_split_policy(std::string_view name) {
    if (name == "default" || name == "default_70_10_20") return SplitPolicy::Default_70_10_20;
    if (name == "ettm2" || name == "ettm2_60_20_20") return SplitPolicy::Ettm2_60_20_20;
    throw ConfigError("unknown split policy '" + std::string(name) + "'");
}

std::string_view to_string(SplitPart part) {
    switch (part) {
    case SplitPart::Train: return "train";
    case SplitPart::Validation: return "val";
    case SplitPart::Test: return "test";
    }
    return "unknown";
}

SplitPart parse_split_part(std::string_view name) {
    if (name == "train") return SplitPart::Train;
    if (name == "val" || name == "validation") return SplitPart::Validation;
    if (name == "test") return SplitPart::Test;
    throw ConfigError("unknown split '" + std::string(name) + "'");
}

const IndexRange& SeriesSplit::operator[](SplitPart part) const {
    switch (part) {
    case SplitPart::Train: return train;
    case SplitPart::Validation: return validation;
    case SplitPart::Test: return test;
    }
    return test;
}

SplitView split(const SeriesDataset& ds, SplitPolicy policy, std::optional<WindowShape> shape) {
    // Integer percentages avoid floating-point rounding in the floor.
    const std::size_t val_pct = policy == SplitPolicy::Default_70_10_20 ? 10 : 20;
    const std::size_t test_pct = 20;

    SplitView view;
    view.policy = policy;
    view.train_end = static_cast<double>(100 - val_pct - test_pct) / 100.0;
    view.val_end = static_cast<double>(100 - test_pct) / 100.0;
    for (const Series& s : ds.series) {
        const std::size_t n = s.size();
        const std::size_t n_val = n * val_pct / 100;
        const std::size_t n_test = n * test_pct / 100;
        const std::size_t n_train = n - n_val - n_test;
        SeriesSplit sp{{0, n_train}, {n_train, n_train + n_val}, {n_train + n_val, n}};
        if (n_train == 0 || n_val == 0 || n_test == 0) {
            throw DataError("series '" + s.id + "' (length " + std::to_string(n) + ") is too short to split");
        }
        if (shape) {
            const std::size_t L = shape->input_size;
            const std::size_t H = shape->horizon;
            if (n_train < L + H || n_val < H || n_test < H) {
                throw DataError("series '" + s.id + "' (length " + std::to_string(n) +
                                ") is too short for windows with L=" + std::to_string(L) + ", H=" + std::to_string(H));
            }
        }
        view.series.push_back(sp);
    }
    return view;
}

std::pair<SeriesDataset, NormStats> fit_normalize(const SeriesDataset& ds, const SplitView& view) {
    if (view.series.size() != ds.series.size()) throw ConfigError("split view does not match dataset");
    NormStats stats;
    for (std::size_t i = 0; i < ds.series.size(); ++i) {
        const Series& s = ds.series[i];
        const IndexRange r = view.series[i].train;
        if (r.size() == 0) throw DataError("series '" + s.id + "' has an empty training range");
        double mean = 0.0;
        for (std::size_t t = r.begin; t < r.end; ++t) mean += s.values[t];
        mean /= static_cast<double>(r.size());
        double var = 0.0;
        for (std::size_t t = r.begin; t < r.end; ++t) var += (s.values[t] - mean) * (s.values[t] - mean);
        var /= static_cast<double>(r.size());
        const double sd = std::sqrt(var);
        if (!(sd > 0.0) || sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
            throw DataError("series '" + s.id + "' has zero variance on its training range");
        }
        stats.series.push_back(SeriesStats{s.id, mean, sd});
    }
    return {apply_normalize(ds, stats), stats};
}

SeriesDataset apply_normalize(const SeriesDataset& ds, const NormStats& stats) {
    SeriesDataset out = ds;
    for (Series& s : out.series) {
        const SeriesStats& st = stats.find(s.id);
        for (double& v : s.values) v = (v - st.mean) / st.stddev;
    }
    NormStats aligned;
    for (const Series& s : out.series) aligned.series.push_back(stats.find(s.id));
    out.norm = std::move(aligned);
    return out;
}

// -- Windows ------------------------------------------------------------------

std::vector<WindowRef> admissible_windows(const SeriesDataset& ds, const SplitView& view, SplitPart part,
                                          WindowShape shape, WindowPolicy policy) {
    if (view.series.size() != ds.series.size()) throw ConfigError("split view does not match dataset");
    if (shape.input_size == 0 || shape.horizon == 0) throw ConfigError("window shape must be positive");
    view.record_read(part);
    const std::size_t L = shape.input_size;
    const std::size_t H = shape.horizon;
    std::vector<WindowRef> refs;
    for (std::size_t i = 0; i < ds.series.size(); ++i) {
        const IndexRange r = view.range(i, part);
        if (r.end < H + 1) continue;
        // first target index >= r.begin, first input index >= (r.begin or 0)
        std::size_t lo = policy == WindowPolicy::WithinRange ? r.begin + L - 1 : std::max(r.begin, std::size_t{1}) - 1;
        lo = std::max(lo, L - 1);
        const std::size_t hi = r.end - H - 1;  // last target index r.end-1
        for (std::size_t t = lo; t <= hi && hi < r.end; ++t) refs.push_back(WindowRef{i, t});
    }
    return refs;
}

WindowBatch make_batch(const SeriesDataset& ds, std::span<const WindowRef> refs, WindowShape shape) {
    WindowBatch batch;
    batch.windows.reserve(refs.size());
    const std::size_t L = shape.input_size;
    const std::size_t H = shape.horizon;
    for (const WindowRef& ref : refs) {
        const Vec1D& v = ds.series.at(ref.series).values;
        if (ref.anchor + 1 < L || ref.anchor + H >= v.size()) throw ConfigError("window out of series bounds");
        const auto first = v.begin() + static_cast<long>(ref.anchor + 1 - L);
        const auto split_at = v.begin() + static_cast<long>(ref.anchor + 1);
        batch.windows.push_back(WindowSample{ref.series, ref.anchor, Vec1D(first, split_at),
                                             Vec1D(split_at, split_at + static_cast<long>(H))});
    }
    return batch;
}

WindowBatch enumerate_windows(const SeriesDataset& ds, const SplitView& view, SplitPart part, WindowShape shape,
                              WindowPolicy policy) {
    const auto refs = admissible_windows(ds, view, part, shape, policy);
    if (refs.empty()) {
        throw DataError(std::string("no admissible ") + std::string(to_string(part)) + " window for L=" +
                        std::to_string(shape.input_size) + ", H=" + std::to_string(shape.horizon));
    }
    return make_batch(ds, refs, shape);
}

WindowSampler::WindowSampler(const SeriesDataset& ds, const SplitView& view, SplitPart part, WindowShape shape,
                             std::uint64_t seed)
    : ds_(&ds), shape_(shape), refs_(admissible_windows(ds, view, part, shape, WindowPolicy::WithinRange)),
      rng_(seed) {
    if (refs_.empty()) {
        throw DataError("no admissible training window for L=" + std::to_string(shape.input_size) +
                        ", H=" + std::to_string(shape.horizon));
    }
}

std::vector<WindowRef> WindowSampler::next_refs(std::size_t count) {
    std::vector<WindowRef> out(count);
    for (auto& r : out) r = refs_[rng_.index(refs_.size())];
    return out;
}

WindowBatch WindowSampler::next(std::size_t count) { return make_batch(*ds_, next_refs(count), shape_); }

WindowBatch sample_windows(const SeriesDataset& ds, const SplitView& view, SplitPart part, WindowShape shape,
                           std::size_t count, std::uint64_t seed) {
    return WindowSampler(ds, view, part, shape, seed).next(count);
}

} // namespace nhits
