#include <benchmark/benchmark.h>

#include <cmath>

#include "nhits/interp.hpp"
#include "nhits/model.hpp"
#include "nhits/numkernels.hpp"
#include "nhits/train.hpp"

using namespace nhits;

namespace {

Vec1D noise(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Vec1D v(n);
    for (double& x : v) x = rng.uniform(-1, 1);
    return v;
}

// H=24 ILI-style model with the default widths.
ModelConfig ili_config(std::size_t hidden) {
    ArchitectureOptions opt;
    opt.hidden_size = hidden;
    return make_model_config(120, 24, {{8, 1.0 / 24}, {4, 1.0 / 12}, {1, 1.0}}, opt);
}

WindowBatch batch_of(const ModelConfig& c, std::size_t n) {
    WindowBatch b;
    for (std::size_t i = 0; i < n; ++i) b.windows.push_back({0, 0, noise(c.input_size, 2 * i), noise(c.horizon, 2 * i + 1)});
    return b;
}

} // namespace

static void BM_Pool1d(benchmark::State& state) {
    const Vec1D x = noise(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(pool1d(x, {8, PoolMode::Max}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Pool1d)->Arg(120)->Arg(480)->Arg(3600);

static void BM_Interpolate(benchmark::State& state) {
    const auto kind = static_cast<InterpKind>(state.range(0));
    const KnotGrid g = build_knot_grid(1, 720, 1.0 / 24);
    const Vec1D theta = noise(g.size(), 2);
    Vec1D q(720);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<double>(i + 1);
    for (auto _ : state) benchmark::DoNotOptimize(interpolate(kind, g, theta, q));
}
BENCHMARK(BM_Interpolate)->Arg(0)->Arg(1)->Arg(2);

static void BM_InterpOperatorApply(benchmark::State& state) {
    const KnotGrid g = build_knot_grid(1, 720, 1.0 / 24);
    Vec1D q(720);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<double>(i + 1);
    const InterpOperator op(InterpKind::CubicHermite, g, q);
    const Vec1D theta = noise(g.size(), 3);
    Vec1D out(720);
    for (auto _ : state) {
        op.apply(theta, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_InterpOperatorApply);

static void BM_NetworkForward(benchmark::State& state) {
    const ModelConfig c = ili_config(static_cast<std::size_t>(state.range(0)));
    const ParamSet p = init_params(c, 1);
    const Network net(c);
    const Vec1D x = noise(c.input_size, 4);
    for (auto _ : state) benchmark::DoNotOptimize(net.forward(p, x));
}
BENCHMARK(BM_NetworkForward)->Arg(64)->Arg(512);

static void BM_BatchedForecast(benchmark::State& state) {
    const ModelConfig c = ili_config(512);
    const ParamSet p = init_params(c, 1);
    BatchedNetwork net(c);
    const WindowBatch b = batch_of(c, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(net.forecast(p, b));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchedForecast)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
    const ModelConfig c = ili_config(static_cast<std::size_t>(state.range(0)));
    ParamSet p = init_params(c, 1);
    BatchedNetwork net(c);
    const WindowBatch b = batch_of(c, 256);
    Vec1D grads(p.values.size());
    AdamState adam(p.values.size());
    for (auto _ : state) {
        net.loss_and_gradient(p, b, LossKind::MAE, grads);
        adam_step(p.values, grads, adam, 1e-3);
    }
}
BENCHMARK(BM_TrainStep)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
