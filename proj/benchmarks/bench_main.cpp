#include <benchmark/benchmark.h>

#include <random>

#include "srd/distill.hpp"
#include "srd/nn.hpp"
#include "srd/ops.hpp"
#include "srd/optim.hpp"
#include "srd/random.hpp"

using namespace srd;

namespace {

Tensor gaussian(std::size_t rows, std::size_t cols, Rng& rng, bool grad = false) {
    std::normal_distribution<double> g;
    std::vector<double> v(rows * cols);
    for (double& x : v) x = g(rng);
    return Tensor({rows, cols}, std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng = make_rng(1, 0);
    Tensor a = gaussian(n, n, rng), b = gaussian(n, n, rng);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(256);

void BM_MatmulBackward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng = make_rng(2, 0);
    Tensor a = gaussian(n, n, rng, true), b = gaussian(n, n, rng, true);
    for (auto _ : state) backward(sum(matmul(a, b)));
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(128);

// One stage-2 iteration at the standard architecture: 64 labeled + 128 unlabeled rows.
void BM_TrainStep(benchmark::State& state) {
    PairSpec spec;
    auto pair = build_pair(spec);
    pair.teacher.freeze();
    std::vector<Tensor> params = pair.student.parameters();
    for (auto& p : pair.adaptor.parameters()) params.push_back(p);
    Sgd opt(params, {0.05, 0.9, 5e-4});
    Rng rng = make_rng(3, 0);
    StepBatch batch{gaussian(64, spec.input_dim, rng), std::vector<int>(64), std::nullopt};
    for (std::size_t i = 0; i < 64; ++i) batch.labels[i] = static_cast<int>(i % spec.num_classes);
    if (state.range(0)) batch.unlabeled_inputs = gaussian(128, spec.input_dim, rng);
    SrdConfig cfg;
    std::size_t it = 0;
    for (auto _ : state) benchmark::DoNotOptimize(train_step(batch, {pair.student, pair.teacher, pair.adaptor}, opt, cfg, it++));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->ArgNames({"unlabeled"});

}  // namespace
BENCHMARK_MAIN();
