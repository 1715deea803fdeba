#include "nhits/numkernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nhits/error.hpp"

namespace nhits {

Mat2D::Mat2D(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ConfigError("Mat2D: data length " + std::to_string(data_.size()) + " does not match " +
                          std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Mat2D Mat2D::identity(std::size_t n) {
    Mat2D m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

MatView::MatView(std::span<const double> d, std::size_t r, std::size_t c) : data(d), rows(r), cols(c) {
    if (d.size() != r * c) throw ConfigError("MatView: span length does not match shape");
}

std::size_t pooled_width(std::size_t input_width, std::size_t kernel) {
    if (kernel == 0) throw ConfigError("pooling kernel must be >= 1");
    return (input_width + kernel - 1) / kernel;
}

PoolResult pool1d(std::span<const double> x, const PoolSpec& spec) {
    if (x.empty()) throw ConfigError("pool1d: empty input");
    require_finite(x, "pool1d input");
    const std::size_t k = spec.kernel;
    const std::size_t out = pooled_width(x.size(), k);

    PoolResult result;
    result.values.resize(out);
    if (spec.mode == PoolMode::Max) result.argmax.emplace(out);

    for (std::size_t j = 0; j < out; ++j) {
        const std::size_t begin = j * k;
        const std::size_t end = std::min(begin + k, x.size());
        if (spec.mode == PoolMode::Max) {
            std::size_t best = begin;
            for (std::size_t i = begin + 1; i < end; ++i) {
                if (x[i] > x[best]) best = i;  // strict: first maximum wins
            }
            result.values[j] = x[best];
            (*result.argmax)[j] = best;
        } else {
            double sum = 0.0;
            for (std::size_t i = begin; i < end; ++i) sum += x[i];
            result.values[j] = sum / static_cast<double>(end - begin);
        }
    }
    return result;
}

Vec1D affine(std::span<const double> x, MatView w, std::span<const double> b) {
    if (w.cols != x.size() || w.rows != b.size()) {
        throw ConfigError("affine: shape mismatch (W is " + std::to_string(w.rows) + "x" +
                          std::to_string(w.cols) + ", |x|=" + std::to_string(x.size()) +
                          ", |b|=" + std::to_string(b.size()) + ")");
    }
    Vec1D y(b.begin(), b.end());
    for (std::size_t r = 0; r < w.rows; ++r) {
        const double* row = w.data.data() + r * w.cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < w.cols; ++c) acc += row[c] * x[c];
        y[r] += acc;
    }
    require_finite(y, "affine output");
    return y;
}

Vec1D relu(std::span<const double> x) {
    Vec1D y(x.size());
    std::transform(x.begin(), x.end(), y.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
    return y;
}

void require_finite(std::span<const double> x, const char* what) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) {
            throw NumericError(std::string("non-finite value in ") + what + " at index " + std::to_string(i));
        }
    }
}

} // namespace nhits
