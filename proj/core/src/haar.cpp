#include "nhits/haar.hpp"

#include <cmath>
#include <ostream>

#include "nhits/error.hpp"
#include "nhits/io.hpp"

namespace nhits::haar {

namespace {

// Interval of sample i out of n at level w: floor(((i + 1/2) / n) * 2^w), in integers.
std::size_t interval_of_sample(std::size_t i, std::size_t n, unsigned w) {
    return ((2 * i + 1) << w) / (2 * n);
}

} // namespace

Vec1D sample_uniform(const std::function<double(double)>& f, std::size_t n) {
    Vec1D out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f((static_cast<double>(i) + 0.5) / static_cast<double>(n));
    return out;
}

std::size_t min_samples(unsigned level) {
    if (level > 40) throw ConfigError("Haar level too large");
    return std::size_t{1} << (level + 4);
}

HaarLevel haar_project(std::span<const double> samples, unsigned level) {
    if (samples.size() < min_samples(level)) {
        throw ConfigError("level " + std::to_string(level) + " needs at least " + std::to_string(min_samples(level)) +
                          " samples, got " + std::to_string(samples.size()));
    }
    const std::size_t cells = std::size_t{1} << level;
    HaarLevel out{level, Vec1D(cells, 0.0), samples.size()};
    std::vector<std::size_t> counts(cells, 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::size_t h = interval_of_sample(i, samples.size(), level);
        out.coefficients[h] += samples[i];
        ++counts[h];
    }
    for (std::size_t h = 0; h < cells; ++h) out.coefficients[h] /= static_cast<double>(counts[h]);
    return out;
}

Vec1D haar_reconstruct(const HaarLevel& level, std::span<const double> queries) {
    const std::size_t cells = level.coefficients.size();
    Vec1D out(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const double tau = queries[q];
        if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("Haar query " + std::to_string(tau) + " outside [0, 1]");
        const auto h = std::min(static_cast<std::size_t>(std::floor(tau * static_cast<double>(cells))), cells - 1);
        out[q] = level.coefficients[h];
    }
    return out;
}

double l1_error(std::span<const double> samples, const HaarLevel& level) {
    if (samples.size() != level.sample_count) {
        throw ConfigError("l1_error: " + std::to_string(samples.size()) + " samples for a projection built from " +
                          std::to_string(level.sample_count));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        acc += std::abs(samples[i] - level.coefficients[interval_of_sample(i, samples.size(), level.level)]);
    }
    return acc / static_cast<double>(samples.size());
}

std::vector<DecayRow> error_decay(std::span<const NamedFunction> functions, unsigned w_min, unsigned w_max,
                                  std::size_t samples) {
    std::vector<DecayRow> rows;
    for (const NamedFunction& fn : functions) {
        const Vec1D s = sample_uniform(fn.f, samples);
        for (unsigned w = w_min; w <= w_max; ++w) rows.push_back(DecayRow{fn.name, w, l1_error(s, haar_project(s, w))});
    }
    return rows;
}

double log2_slope(std::span<const DecayRow> rows) {
    if (rows.size() < 2) throw ConfigError("slope needs at least two levels");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const DecayRow& r : rows) {
        if (!(r.l1_error > 0.0)) throw ConfigError("slope needs positive errors");
        const double x = r.level;
        const double y = std::log2(r.l1_error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(rows.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_decay_csv(std::ostream& out, std::span<const DecayRow> rows) {
    out << "function,w,l1_error\n";
    for (const DecayRow& r : rows) out << r.function << ',' << r.level << ',' << format_double(r.l1_error) << '\n';
}

} // namespace nhits::haar
