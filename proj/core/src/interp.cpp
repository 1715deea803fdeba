#include "nhits/interp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "nhits/error.hpp"

namespace nhits {

namespace {

// Index i of the segment [knots[i], knots[i+1]] containing tau.
std::size_t segment_of(const std::vector<double>& knots, double tau) {
    auto it = std::upper_bound(knots.begin(), knots.end(), tau);
    std::size_t i = it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin()) - 1;
    return std::min(i, knots.size() - 2);
}

// Knot slope (per unit time) as a linear combination of theta: centered in the
// interior, one-sided at the two boundary knots.
struct Slope {
    std::size_t lo, hi;
    double inv_dt;
};

Slope knot_slope(const std::vector<double>& knots, std::size_t j) {
    const std::size_t n = knots.size();
    const std::size_t lo = j == 0 ? 0 : j - 1;
    const std::size_t hi = j + 1 == n ? n - 1 : j + 1;
    return {lo, hi, 1.0 / (knots[hi] - knots[lo])};
}

} // namespace

std::string_view to_string(InterpKind kind) {
    switch (kind) {
    case InterpKind::Nearest: return "nearest";
    case InterpKind::Linear: return "linear";
    case InterpKind::CubicHermite: return "cubic";
    }
    return "unknown";
}

InterpKind parse_interp_kind(std::string_view name) {
    if (name == "nearest") return InterpKind::Nearest;
    if (name == "linear") return InterpKind::Linear;
    if (name == "cubic" || name == "cubic_hermite") return InterpKind::CubicHermite;
    throw ConfigError("unknown interpolation kind '" + std::string(name) + "'");
}

std::size_t knot_count(std::size_t span, double ratio) {
    if (!(ratio > 0.0) || ratio > 1.0) {
        throw ConfigError("expressiveness ratio must lie in (0, 1], got " + std::to_string(ratio));
    }
    // Ratios usually arrive as 1/r^-1; absorb the rounding of that division before the ceiling.
    const double scaled = ratio * static_cast<double>(span);
    const auto n = static_cast<std::size_t>(std::ceil(scaled - 1e-9 * std::max(1.0, scaled)));
    return std::max<std::size_t>(n, 2);
}

KnotGrid build_knot_grid(long t_start, long t_end, double ratio) {
    if (t_end <= t_start) {
        throw ConfigError("knot grid needs t_end > t_start (got [" + std::to_string(t_start) + ", " +
                          std::to_string(t_end) + "])");
    }
    const auto span = static_cast<std::size_t>(t_end - t_start + 1);
    const std::size_t n = knot_count(span, ratio);

    KnotGrid grid{t_start, t_end, std::vector<double>(n)};
    const double width = static_cast<double>(t_end - t_start);
    for (std::size_t i = 0; i < n; ++i) {
        grid.knots[i] = static_cast<double>(t_start) + width * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    grid.knots.back() = static_cast<double>(t_end);
    return grid;
}

HermiteBasis hermite_basis(double u) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    return {2.0 * u3 - 3.0 * u2 + 1.0, -2.0 * u3 + 3.0 * u2, u3 - 2.0 * u2 + u, u3 - u2};
}

InterpOperator::InterpOperator(InterpKind kind, const KnotGrid& grid, std::span<const double> queries)
    : cols_(grid.size()) {
    const auto& knots = grid.knots;
    if (knots.size() < 2) throw ConfigError("knot grid needs at least 2 knots");
    const double lo = static_cast<double>(grid.t_start);
    const double hi = static_cast<double>(grid.t_end);

    row_ptr_.reserve(queries.size() + 1);
    row_ptr_.push_back(0);

    for (double tau : queries) {
        if (!(tau >= lo && tau <= hi)) {
            throw ConfigError("interpolation query " + std::to_string(tau) + " outside grid [" +
                              std::to_string(grid.t_start) + ", " + std::to_string(grid.t_end) + "]");
        }
        const std::size_t i = segment_of(knots, tau);
        const double t1 = knots[i];
        const double t2 = knots[i + 1];

        // Up to four distinct columns per row; merge duplicates.
        std::array<std::size_t, 4> idx{};
        std::array<double, 4> w{};
        std::size_t used = 0;
        auto add = [&](std::size_t j, double weight) {
            for (std::size_t s = 0; s < used; ++s) {
                if (idx[s] == j) {
                    w[s] += weight;
                    return;
                }
            }
            idx[used] = j;
            w[used] = weight;
            ++used;
        };

        switch (kind) {
        case InterpKind::Nearest:
            add(tau - t1 <= t2 - tau ? i : i + 1, 1.0);
            break;
        case InterpKind::Linear: {
            const double u = (tau - t1) / (t2 - t1);
            add(i, 1.0 - u);
            add(i + 1, u);
            break;
        }
        case InterpKind::CubicHermite: {
            const double h = t2 - t1;
            const double u = (tau - t1) / h;
            const HermiteBasis b = hermite_basis(u);
            add(i, b.phi1);
            add(i + 1, b.phi2);
            const Slope s1 = knot_slope(knots, i);
            const Slope s2 = knot_slope(knots, i + 1);
            add(s1.hi, h * b.psi1 * s1.inv_dt);
            add(s1.lo, -h * b.psi1 * s1.inv_dt);
            add(s2.hi, h * b.psi2 * s2.inv_dt);
            add(s2.lo, -h * b.psi2 * s2.inv_dt);
            break;
        }
        }

        // Fixed column order keeps the floating-point summation order canonical.
        std::array<std::size_t, 4> order{0, 1, 2, 3};
        std::sort(order.begin(), order.begin() + static_cast<long>(used),
                  [&](std::size_t a, std::size_t b) { return idx[a] < idx[b]; });
        for (std::size_t s = 0; s < used; ++s) {
            col_.push_back(idx[order[s]]);
            val_.push_back(w[order[s]]);
        }
        row_ptr_.push_back(col_.size());
    }
}

void InterpOperator::apply(std::span<const double> theta, std::span<double> out) const {
    if (theta.size() != cols_) {
        throw ConfigError("interpolation: " + std::to_string(theta.size()) + " coefficients for " +
                          std::to_string(cols_) + " knots");
    }
    if (out.size() != rows()) throw ConfigError("interpolation: output length mismatch");
    for (std::size_t q = 0; q + 1 < row_ptr_.size(); ++q) {
        double acc = 0.0;
        for (std::size_t p = row_ptr_[q]; p < row_ptr_[q + 1]; ++p) acc += val_[p] * theta[col_[p]];
        out[q] = acc;
    }
}

Vec1D InterpOperator::apply(std::span<const double> theta) const {
    Vec1D out(rows());
    apply(theta, out);
    return out;
}

void InterpOperator::apply_transpose_add(std::span<const double> grad_out, std::span<double> grad_theta) const {
    if (grad_out.size() != rows() || grad_theta.size() != cols_) {
        throw ConfigError("interpolation transpose: shape mismatch");
    }
    for (std::size_t q = 0; q + 1 < row_ptr_.size(); ++q) {
        for (std::size_t p = row_ptr_[q]; p < row_ptr_[q + 1]; ++p) grad_theta[col_[p]] += val_[p] * grad_out[q];
    }
}

Vec1D interpolate(InterpKind kind, const KnotGrid& grid, std::span<const double> coeffs,
                  std::span<const double> queries) {
    if (coeffs.size() != grid.size()) {
        throw ConfigError("interpolation: " + std::to_string(coeffs.size()) + " coefficients for " +
                          std::to_string(grid.size()) + " knots");
    }
    return InterpOperator(kind, grid, queries).apply(coeffs);
}

} // namespace nhits
