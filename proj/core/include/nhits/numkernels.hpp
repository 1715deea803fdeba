#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace nhits {

using Vec1D = std::vector<double>;

/// Dense row-major matrix of 64-bit floats.
class Mat2D {
public:
    Mat2D() = default;
    Mat2D(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Mat2D(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    static Mat2D identity(std::size_t n);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Non-owning row-major matrix view, used to address weights inside a flat parameter buffer.
struct MatView {
    std::span<const double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    MatView() = default;
    MatView(std::span<const double> d, std::size_t r, std::size_t c);
    MatView(const Mat2D& m) : data(m.data()), rows(m.rows()), cols(m.cols()) {} // NOLINT: implicit by intent
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

enum class PoolMode { Max, Average };

struct PoolSpec {
    std::size_t kernel = 1;
    PoolMode mode = PoolMode::Max;
};

struct PoolResult {
    Vec1D values;
    // Max mode only: index into the input of the first maximal element of each window.
    std::optional<std::vector<std::size_t>> argmax;
};

/// Pooled width for stride == kernel with a partial final window.
std::size_t pooled_width(std::size_t input_width, std::size_t kernel);

/// 1-D pooling, stride = kernel, ceil mode. Throws ConfigError on empty input or kernel 0.
PoolResult pool1d(std::span<const double> x, const PoolSpec& spec);

/// y = W x + b. Throws ConfigError on shape mismatch.
Vec1D affine(std::span<const double> x, MatView w, std::span<const double> b);

Vec1D relu(std::span<const double> x);

/// Throws NumericError naming `what` if any element is NaN or infinite.
void require_finite(std::span<const double> x, const char* what);

} // namespace nhits
