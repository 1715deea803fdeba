#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "nhits/numkernels.hpp"

namespace nhits {

enum class InterpKind { Nearest, Linear, CubicHermite };

std::string_view to_string(InterpKind kind);
/// Accepts "nearest", "linear", "cubic" (or "cubic_hermite"). Throws ConfigError otherwise.
InterpKind parse_interp_kind(std::string_view name);

/// Anchor positions of the interpolation coefficients over [t_start, t_end].
struct KnotGrid {
    long t_start = 0;
    long t_end = 0;
    std::vector<double> knots;

    std::size_t size() const noexcept { return knots.size(); }
};

/// Number of knots for a span of `span` integer steps at expressiveness ratio r: max(ceil(r * span), 2).
std::size_t knot_count(std::size_t span, double ratio);

/// Uniform, endpoint-inclusive knots. Throws ConfigError unless t_end > t_start and 0 < ratio <= 1.
KnotGrid build_knot_grid(long t_start, long t_end, double ratio);

struct HermiteBasis {
    double phi1, phi2, psi1, psi2;
};

HermiteBasis hermite_basis(double u);

/// The sparse linear map coefficients -> query values for a fixed (kind, grid, queries).
///
/// Stored in CSR form; each row has at most four nonzeros. Gradients flow back
/// through the transpose of the same map.
class InterpOperator {
public:
    InterpOperator() = default;
    InterpOperator(InterpKind kind, const KnotGrid& grid, std::span<const double> queries);

    std::size_t rows() const noexcept { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
    std::size_t cols() const noexcept { return cols_; }

    /// out[q] = sum_j A[q, j] * theta[j]
    void apply(std::span<const double> theta, std::span<double> out) const;
    Vec1D apply(std::span<const double> theta) const;
    /// grad_theta[j] += sum_q A[q, j] * grad_out[q]
    void apply_transpose_add(std::span<const double> grad_out, std::span<double> grad_theta) const;

    std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
    std::span<const std::size_t> col_index() const noexcept { return col_; }
    std::span<const double> values() const noexcept { return val_; }

private:
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_;
    std::vector<double> val_;
};

/// Evaluates g(tau, theta) at every query. Throws ConfigError if a query falls
/// outside [t_start, t_end] or |coeffs| != |knots|.
Vec1D interpolate(InterpKind kind, const KnotGrid& grid, std::span<const double> coeffs,
                  std::span<const double> queries);

} // namespace nhits
