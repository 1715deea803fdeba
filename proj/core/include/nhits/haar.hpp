#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nhits/numkernels.hpp"

namespace nhits::haar {

/// Piecewise-constant approximation at dyadic level w: 2^w coefficients, one per
/// interval [2^-w (h-1), 2^-w h).
struct HaarLevel {
    unsigned level = 0;
    Vec1D coefficients;
    std::size_t sample_count = 0;  // resolution of the samples it was projected from
};

/// Samples f at the n cell midpoints (i + 1/2) / n of a uniform grid on [0, 1].
Vec1D sample_uniform(const std::function<double(double)>& f, std::size_t n);

/// Minimum sample count accepted for a level: 2^(w+4).
std::size_t min_samples(unsigned level);

/// Interval means (the L2-optimal projection onto V_w). Throws ConfigError when
/// there are fewer than min_samples(level) samples.
HaarLevel haar_project(std::span<const double> samples, unsigned level);

/// Coefficient of the interval containing each query; tau = 1 belongs to the last interval.
Vec1D haar_reconstruct(const HaarLevel& level, std::span<const double> queries);

/// Riemann estimate of the integral over [0, 1] of |f - reconstruction|, on the projection's sampling grid.
double l1_error(std::span<const double> samples, const HaarLevel& level);

struct DecayRow {
    std::string function;
    unsigned level = 0;
    double l1_error = 0.0;
};

struct NamedFunction {
    std::string name;
    std::function<double(double)> f;
};

/// Error-vs-level table for each function over levels [w_min, w_max].
std::vector<DecayRow> error_decay(std::span<const NamedFunction> functions, unsigned w_min, unsigned w_max,
                                  std::size_t samples);

/// Least-squares slope of log2(error) against level.
double log2_slope(std::span<const DecayRow> rows);

/// Columns: function,w,l1_error
void write_decay_csv(std::ostream& out, std::span<const DecayRow> rows);

} // namespace nhits::haar
