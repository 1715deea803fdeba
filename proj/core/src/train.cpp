#include "nhits/train.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "nhits/error.hpp"
#include "nhits/io.hpp"

namespace nhits {

std::string_view to_string(LossKind kind) { return kind == LossKind::MAE ? "mae" : "mse"; }

LossKind parse_loss_kind(std::string_view name) {
    if (name == "mae" || name == "MAE") return LossKind::MAE;
    if (name == "mse" || name == "MSE") return LossKind::MSE;
    throw ConfigError("unknown loss '" + std::string(name) + "'");
}

double loss(LossKind kind, std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw ConfigError("loss: length mismatch");
    if (y.empty()) throw ConfigError("loss: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - y_hat[i];
        acc += kind == LossKind::MAE ? std::abs(e) : e * e;
    }
    return acc / static_cast<double>(y.size());
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ConfigError("adam_step: buffer length mismatch");
    }
    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double c1 = 1.0 - std::pow(AdamState::beta1, t);
    const double c2 = 1.0 - std::pow(AdamState::beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = AdamState::beta1 * state.m[i] + (1.0 - AdamState::beta1) * g;
        state.v[i] = AdamState::beta2 * state.v[i] + (1.0 - AdamState::beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + AdamState::epsilon);
    }
}

TrainConfig TrainConfig::with_steps(std::size_t steps) {
    TrainConfig cfg;
    cfg.steps = steps;
    cfg.decay_points = {steps / 4, steps / 2, 3 * steps / 4};
    return cfg;
}

void TrainConfig::validate() const {
    if (steps == 0) throw ConfigError("training steps must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (!(lr0 > 0.0)) throw ConfigError("learning rate must be positive");
    for (std::size_t i = 0; i < decay_points.size(); ++i) {
        if (decay_points[i] >= steps || (i > 0 && decay_points[i] <= decay_points[i - 1])) {
            throw ConfigError("decay points must be strictly increasing within [0, steps)");
        }
    }
}

double lr_at(std::size_t step, const TrainConfig& cfg) {
    double lr = cfg.lr0;
    for (std::size_t p : cfg.decay_points) {
        if (p <= step) lr *= cfg.decay_factor;
    }
    return lr;
}

// -- Batched network ----------------------------------------------------------

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;  // column per window
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeight = Eigen::Map<const RowMajor>;
using GradWeight = Eigen::Map<RowMajor>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using GradVec = Eigen::Map<Eigen::VectorXd>;

// Parameters and gradients live in Eigen-owned buffers: the GEMM kernels pick their code path by
// address alignment, so mapping caller memory directly makes results depend on where it was allocated.
ConstWeight weight(const Eigen::VectorXd& p, const LayerSlice& s) {
    return ConstWeight(p.data() + s.weight_offset, static_cast<long>(s.rows), static_cast<long>(s.cols));
}
ConstVec bias(const Eigen::VectorXd& p, const LayerSlice& s) {
    return ConstVec(p.data() + s.bias_offset, static_cast<long>(s.rows));
}
GradWeight weight(Eigen::VectorXd& g, const LayerSlice& s) {
    return GradWeight(g.data() + s.weight_offset, static_cast<long>(s.rows), static_cast<long>(s.cols));
}
GradVec bias(Eigen::VectorXd& g, const LayerSlice& s) {
    return GradVec(g.data() + s.bias_offset, static_cast<long>(s.rows));
}

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw NumericError(std::string("non-finite values in ") + what);
}

struct BlockTrace {
    Matrix pooled;
    std::vector<std::size_t> argmax;  // pooled rows x batch, column-major
    std::vector<Matrix> activations;  // post-ReLU output of each MLP layer
};

} // namespace

struct BatchedNetwork::Impl {
    ModelConfig config;
    ParamLayout layout;
    std::vector<InterpOperator> ops;
    std::vector<BlockTrace> traces;
    Matrix total;
    Eigen::VectorXd theta;
    Eigen::VectorXd grad;

    explicit Impl(ModelConfig c) : config(std::move(c)), layout(ParamLayout::build(config)) {
        for (const BlockConfig& b : config.blocks) ops.push_back(forecast_operator(b, 0, config.horizon));
        traces.resize(config.blocks.size());
    }

    void check(const ParamSet& params, const WindowBatch& batch) const {
        if (params.values.size() != layout.total) throw ConfigError("parameter buffer does not match model config");
        if (batch.empty()) throw ConfigError("empty batch");
        for (const WindowSample& w : batch.windows) {
            if (w.input.size() != config.input_size || w.target.size() != config.horizon) {
                throw ConfigError("window shape does not match model config");
            }
        }
    }

    void pool(const BlockConfig& b, const Matrix& x, BlockTrace& tr) const {
        const long L = x.rows();
        const long k = static_cast<long>(b.kernel);
        const long P = static_cast<long>(pooled_width(static_cast<std::size_t>(L), b.kernel));
        tr.pooled.resize(P, x.cols());
        if (b.pool == PoolMode::Max) tr.argmax.assign(static_cast<std::size_t>(P * x.cols()), 0);
        for (long c = 0; c < x.cols(); ++c) {
            for (long j = 0; j < P; ++j) {
                const long lo = j * k;
                const long hi = std::min(lo + k, L);
                if (b.pool == PoolMode::Max) {
                    long best = lo;
                    for (long i = lo + 1; i < hi; ++i) {
                        if (x(i, c) > x(best, c)) best = i;
                    }
                    tr.pooled(j, c) = x(best, c);
                    tr.argmax[static_cast<std::size_t>(c * P + j)] = static_cast<std::size_t>(best);
                } else {
                    double s = 0.0;
                    for (long i = lo; i < hi; ++i) s += x(i, c);
                    tr.pooled(j, c) = s / static_cast<double>(hi - lo);
                }
            }
        }
    }

    void unpool_add(const BlockConfig& b, const BlockTrace& tr, const Matrix& d_pooled, Matrix& dx) const {
        const long L = dx.rows();
        const long k = static_cast<long>(b.kernel);
        const long P = d_pooled.rows();
        for (long c = 0; c < dx.cols(); ++c) {
            for (long j = 0; j < P; ++j) {
                if (b.pool == PoolMode::Max) {
                    dx(static_cast<long>(tr.argmax[static_cast<std::size_t>(c * P + j)]), c) += d_pooled(j, c);
                } else {
                    const long lo = j * k;
                    const long hi = std::min(lo + k, L);
                    const double share = d_pooled(j, c) / static_cast<double>(hi - lo);
                    for (long i = lo; i < hi; ++i) dx(i, c) += share;
                }
            }
        }
    }

    static void interp_apply(const InterpOperator& op, const Matrix& theta, Matrix& out) {
        const auto rp = op.row_ptr();
        const auto ci = op.col_index();
        const auto vv = op.values();
        for (long c = 0; c < theta.cols(); ++c) {
            for (std::size_t q = 0; q + 1 < rp.size(); ++q) {
                double acc = 0.0;
                for (std::size_t p = rp[q]; p < rp[q + 1]; ++p) acc += vv[p] * theta(static_cast<long>(ci[p]), c);
                out(static_cast<long>(q), c) += acc;
            }
        }
    }

    static Matrix interp_transpose(const InterpOperator& op, const Matrix& grad_out) {
        const auto rp = op.row_ptr();
        const auto ci = op.col_index();
        const auto vv = op.values();
        Matrix g = Matrix::Zero(static_cast<long>(op.cols()), grad_out.cols());
        for (long c = 0; c < grad_out.cols(); ++c) {
            for (std::size_t q = 0; q + 1 < rp.size(); ++q) {
                for (std::size_t p = rp[q]; p < rp[q + 1]; ++p) g(static_cast<long>(ci[p]), c) += vv[p] * grad_out(static_cast<long>(q), c);
            }
        }
        return g;
    }

    // Forward over the batch; fills traces and `total` (H x batch).
    void forward(const ParamSet& in, const WindowBatch& batch) {
        theta = ConstVec(in.values.data(), static_cast<long>(in.values.size()));
        const Eigen::VectorXd& params = theta;
        const long L = static_cast<long>(config.input_size);
        const long H = static_cast<long>(config.horizon);
        const long B = static_cast<long>(batch.size());
        Matrix x(L, B);
        for (long c = 0; c < B; ++c) {
            x.col(c) = ConstVec(batch.windows[static_cast<std::size_t>(c)].input.data(), L);
        }
        require_finite(x, "input windows");
        total.setZero(H, B);
        for (std::size_t b = 0; b < config.blocks.size(); ++b) {
            const BlockConfig& bc = config.blocks[b];
            const BlockLayout& bl = layout.blocks[b];
            BlockTrace& tr = traces[b];
            pool(bc, x, tr);
            tr.activations.resize(bl.mlp.size());
            const Matrix* a = &tr.pooled;
            for (std::size_t l = 0; l < bl.mlp.size(); ++l) {
                Matrix z = weight(params, bl.mlp[l]) * *a;
                z.colwise() += bias(params, bl.mlp[l]);
                tr.activations[l] = z.cwiseMax(0.0);
                a = &tr.activations[l];
            }
            Matrix theta_f = weight(params, bl.forecast_head) * *a;
            theta_f.colwise() += bias(params, bl.forecast_head);
            Matrix back = weight(params, bl.backcast_head) * *a;
            back.colwise() += bias(params, bl.backcast_head);
            require_finite(theta_f, "forecast coefficients");
            require_finite(back, "backcast");
            interp_apply(ops[b], theta_f, total);
            x -= back;
        }
    }

    void backward(const Matrix& d_total, std::span<double> out) {
        const long L = static_cast<long>(config.input_size);
        const long B = d_total.cols();
        const Eigen::VectorXd& params = theta;
        grad.setZero(theta.size());
        Eigen::VectorXd& grads = grad;
        Matrix g_next = Matrix::Zero(L, B);  // d loss / d (input of block b+1)
        for (std::size_t bi = config.blocks.size(); bi-- > 0;) {
            const BlockConfig& bc = config.blocks[bi];
            const BlockLayout& bl = layout.blocks[bi];
            const BlockTrace& tr = traces[bi];
            const Matrix& h = tr.activations.back();

            const Matrix d_theta_f = interp_transpose(ops[bi], d_total);
            const Matrix d_back = -g_next;

            weight(grads, bl.forecast_head).noalias() += d_theta_f * h.transpose();
            bias(grads, bl.forecast_head) += d_theta_f.rowwise().sum();
            weight(grads, bl.backcast_head).noalias() += d_back * h.transpose();
            bias(grads, bl.backcast_head) += d_back.rowwise().sum();

            Matrix d_a = weight(params, bl.forecast_head).transpose() * d_theta_f;
            d_a.noalias() += weight(params, bl.backcast_head).transpose() * d_back;

            for (std::size_t l = bl.mlp.size(); l-- > 0;) {
                const Matrix& out = tr.activations[l];
                const Matrix& in = l == 0 ? tr.pooled : tr.activations[l - 1];
                const Matrix d_z = (out.array() > 0.0).select(d_a, 0.0);
                weight(grads, bl.mlp[l]).noalias() += d_z * in.transpose();
                bias(grads, bl.mlp[l]) += d_z.rowwise().sum();
                d_a = weight(params, bl.mlp[l]).transpose() * d_z;
            }
            // d_a now holds d loss / d pooled input; the identity skip carries g_next unchanged.
            unpool_add(bc, tr, d_a, g_next);
        }
        GradVec(out.data(), static_cast<long>(out.size())) = grad;
    }
};

BatchedNetwork::BatchedNetwork(ModelConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
BatchedNetwork::~BatchedNetwork() = default;
BatchedNetwork::BatchedNetwork(BatchedNetwork&&) noexcept = default;
BatchedNetwork& BatchedNetwork::operator=(BatchedNetwork&&) noexcept = default;

const ModelConfig& BatchedNetwork::config() const noexcept { return impl_->config; }

Mat2D BatchedNetwork::forecast(const ParamSet& params, const WindowBatch& batch) {
    impl_->check(params, batch);
    impl_->forward(params, batch);
    const auto& t = impl_->total;
    Mat2D out(static_cast<std::size_t>(t.cols()), static_cast<std::size_t>(t.rows()));
    for (long c = 0; c < t.cols(); ++c) {
        for (long r = 0; r < t.rows(); ++r) out(static_cast<std::size_t>(c), static_cast<std::size_t>(r)) = t(r, c);
    }
    return out;
}

double BatchedNetwork::loss_and_gradient(const ParamSet& params, const WindowBatch& batch, LossKind kind,
                                         std::span<double> grads) {
    impl_->check(params, batch);
    if (grads.size() != params.values.size()) throw ConfigError("gradient buffer length mismatch");
    impl_->forward(params, batch);

    const long H = static_cast<long>(impl_->config.horizon);
    const long B = static_cast<long>(batch.size());
    Matrix target(H, B);
    for (long c = 0; c < B; ++c) target.col(c) = ConstVec(batch.windows[static_cast<std::size_t>(c)].target.data(), H);

    const Matrix err = impl_->total - target;
    const double scale = 1.0 / static_cast<double>(H * B);
    double value = 0.0;
    Matrix d_total(H, B);
    if (kind == LossKind::MAE) {
        value = err.cwiseAbs().sum() * scale;
        d_total = err.unaryExpr([scale](double e) { return e > 0.0 ? scale : (e < 0.0 ? -scale : 0.0); });
    } else {
        value = err.squaredNorm() * scale;
        d_total = err * (2.0 * scale);
    }
    if (!std::isfinite(value)) throw NumericError("non-finite training loss");
    impl_->backward(d_total, grads);
    return value;
}

GradResult backward(const ModelConfig& config, const ParamSet& params, const WindowBatch& batch, LossKind kind) {
    BatchedNetwork net(config);
    GradResult r;
    r.grads.assign(params.values.size(), 0.0);
    r.loss_value = net.loss_and_gradient(params, batch, kind, r.grads);
    return r;
}

double batch_loss(const ModelConfig& config, const ParamSet& params, const WindowBatch& batch, LossKind kind) {
    if (batch.empty()) throw ConfigError("empty batch");
    const Network net(config);
    double acc = 0.0;
    for (const WindowSample& w : batch.windows) acc += loss(kind, w.target, net.forward(params, w.input).total_forecast);
    return acc / static_cast<double>(batch.size());
}

// -- Training loop ------------------------------------------------------------

TrainResult train(const ModelConfig& config, const SeriesDataset& data, const SplitView& view,
                  const TrainConfig& tcfg, const TrainOptions& options) {
    config.validate();
    tcfg.validate();
    const WindowShape shape{config.input_size, config.horizon};
    // Window stream and initialization draw from independent seeded generators.
    WindowSampler sampler(data, view, SplitPart::Train, shape, derive_seed(tcfg.seed, 0x5a4d));

    TrainResult result;
    result.params = init_params(config, derive_seed(tcfg.seed, 0x1417));
    AdamState adam(result.params.values.size());
    BatchedNetwork net(config);
    Vec1D grads(result.params.values.size());
    result.history.reserve(tcfg.steps);

    for (std::size_t step = 0; step < tcfg.steps; ++step) {
        auto refs = sampler.next_refs(tcfg.batch_size);
        const WindowBatch batch = make_batch(data, refs, shape);
        if (options.record_batches) result.sampled.push_back(std::move(refs));
        const double value = net.loss_and_gradient(result.params, batch, tcfg.loss, grads);
        const double lr = lr_at(step, tcfg);
        adam_step(result.params.values, grads, adam, lr);
        result.history.push_back(LossRecord{step, lr, value});
    }
    require_finite(std::span<const double>(result.params.values), "trained parameters");
    return result;
}

void write_loss_csv(std::ostream& out, std::span<const LossRecord> history) {
    out << "step,lr,train_loss\n";
    for (const LossRecord& r : history) out << r.step << ',' << format_double(r.lr) << ',' << format_double(r.train_loss) << '\n';
}

} // namespace nhits
