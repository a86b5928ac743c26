#include <benchmark/benchmark.h>

#include <vector>

#include "charrnet/channel.hpp"
#include "charrnet/dataset.hpp"
#include "charrnet/fingerprint.hpp"
#include "charrnet/layers.hpp"
#include "charrnet/model.hpp"

using namespace charrnet;

namespace {

std::vector<cplx> noise(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<cplx> v(n);
    for (cplx& z : v) z = {uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
    return v;
}

void BM_Fft(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto input = noise(n, 1);
    std::vector<cplx> buf;
    for (auto _ : state) {
        buf = input;
        fft_inplace(buf);
        benchmark::DoNotOptimize(buf.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(64, 4096);

void BM_Stft(benchmark::State& state) {
    const ComplexSignal x(noise(800, 2));
    for (auto _ : state) benchmark::DoNotOptimize(stft(x, 64, 64, 8.6));
}
BENCHMARK(BM_Stft);

void BM_Convolve(benchmark::State& state) {
    const ComplexSignal x(noise(800, 3));
    Rng rng(3);
    const ImpulseResponse h = sample_fading_channel({}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(convolve(x, h));
}
BENCHMARK(BM_Convolve);

void BM_DatasetRecord(benchmark::State& state) {
    DatasetConfig cfg;
    cfg.train_tags = {"nLOS200"};
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(generate_record(cfg, 1, i++ % 2000));
}
BENCHMARK(BM_DatasetRecord);

void BM_EquivariantLayer(benchmark::State& state) {
    Rng rng(4);
    EquivariantLayer layer("eq", 1, {8, 4, 2});
    layer.init(rng);
    const ManifoldTensor x = ManifoldTensor::from_spectrogram(stft(ComplexSignal(noise(800, 4)), 64, 64, 8.6));
    for (auto _ : state) benchmark::DoNotOptimize(layer.forward(x));
}
BENCHMARK(BM_EquivariantLayer);

void BM_ModelStep(benchmark::State& state) {
    ModelConfig cfg;
    cfg.kind = state.range(0) == 0 ? ModelKind::charrnet : ModelKind::baseline;
    auto model = make_model(cfg);
    const ComplexSignal x(noise(800, 5));
    for (auto _ : state) {
        model->zero_grad();
        const LossResult l = softmax_cross_entropy(model->forward(x), 3);
        model->backward(l.grad);
        benchmark::DoNotOptimize(l.loss);
    }
    state.SetLabel(to_string(cfg.kind));
}
BENCHMARK(BM_ModelStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ModelForward(benchmark::State& state) {
    ModelConfig cfg;
    cfg.kind = state.range(0) == 0 ? ModelKind::charrnet : ModelKind::baseline;
    auto model = make_model(cfg);
    const ComplexSignal x(noise(800, 6));
    for (auto _ : state) benchmark::DoNotOptimize(model->forward(x));
    state.SetLabel(to_string(cfg.kind));
}
BENCHMARK(BM_ModelForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
