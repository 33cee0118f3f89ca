#include <random>

#include <benchmark/benchmark.h>

#include "ssrgan/conv.hpp"
#include "ssrgan/losses.hpp"
#include "ssrgan/metrics.hpp"
#include "ssrgan/synth.hpp"
#include "ssrgan/trainer.hpp"

using namespace ssrgan;

namespace {

template <typename T>
Tensor<T> randn(Shape s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    Tensor<T> t(s);
    for (auto& v : t.data()) v = static_cast<T>(d(rng));
    return t;
}

// B2 of the default model on a batch of 16 windows.
void BM_Conv1d(benchmark::State& state) {
    const ConvSpec spec = ConvSpec::same(16, 32, 7);
    const Tensor<float> x = randn<float>({16, 16, 125}, 1), w = randn<float>(spec.kernel_shape(), 2);
    for (auto _ : state) benchmark::DoNotOptimize(conv1d<float>(x, w, nullptr, spec));
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_Conv1d);

void BM_Conv1dAdjoint(benchmark::State& state) {
    const ConvSpec spec{1, 16, 15, 2, 7};
    const Tensor<float> y = randn<float>({16, 16, 125}, 1), w = randn<float>(spec.kernel_shape(), 2);
    for (auto _ : state) benchmark::DoNotOptimize(conv1d_adjoint<float>(y, w, spec, 250));
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_Conv1dAdjoint);

// One full iteration (2 generator steps + 1 discriminator step) of the default model.
void BM_TrainIteration(benchmark::State& state) {
    const Tensor<float> a = randn<float>({64, 1, 250}, 3), b = randn<float>({64, 1, 250}, 4);
    Model<float> model(ModelConfig{}, 1);
    TrainConfig cfg;
    cfg.iterations = 1;
    cfg.final_g_only_iters = 0;
    for (auto _ : state) benchmark::DoNotOptimize(train(model, a, b, cfg));
}
BENCHMARK(BM_TrainIteration)->Unit(benchmark::kMillisecond);

// Middle-space MMD between two batches of 16 feature maps (32 x 125).
void BM_MkMmd(benchmark::State& state) {
    const Tensor<float> x = randn<float>({16, 32, 125}, 5), y = randn<float>({16, 32, 125}, 6);
    for (auto _ : state) {
        Tape<float> t;
        Var<float> vx = t.input(x);
        Var<float> loss = mk_mmd(vx, t.constant(y), MmdConfig{});
        t.backward(loss);
        benchmark::DoNotOptimize(t.grad(vx));
    }
}
BENCHMARK(BM_MkMmd)->Unit(benchmark::kMicrosecond);

void BM_Welch(benchmark::State& state) {
    SynthConfig c;
    c.duration_s = static_cast<double>(state.range(0));
    const Recording r = gen_clean(c);
    for (auto _ : state) benchmark::DoNotOptimize(psd_welch(r, 2.0, 0.5));
}
BENCHMARK(BM_Welch)->Arg(60)->Arg(600)->Unit(benchmark::kMicrosecond);

void BM_Aas(benchmark::State& state) {
    SynthConfig c;
    const SynthSeeds s = derive_seeds(1);
    const ContaminatedPair p = make_contaminated(c, s.eval_clean, s.eval_artifact, 60.0);
    for (auto _ : state) benchmark::DoNotOptimize(aas_baseline(p.contaminated));
}
BENCHMARK(BM_Aas)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
