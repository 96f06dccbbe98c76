#include <mvcl/eval.hpp>
#include <mvcl/grad.hpp>
#include <mvcl/loss.hpp>
#include <mvcl/optim.hpp>

#include <benchmark/benchmark.h>

using namespace mvcl;

namespace {

// n samples, two 30-feature views, d = 10.
struct Fixture {
  MultiViewDataset ds;
  ProjectionSet P;
  RecoverySet F;
  HyperParams hp;

  explicit Fixture(int n) {
    SynthSpec spec;
    spec.classes = 5;
    spec.per_class = n / 5;
    ds = preprocess(synth_generate(spec), PreprocessOptions{}).first;
    std::tie(P, F) = init_params(ds.dims(), hp.d, 1);
  }
};

void BM_TotalLoss(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(total_loss(f.P, f.F, f.ds, f.hp));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TotalLoss)->RangeMultiplier(2)->Range(20, 320)->Complexity();

void BM_Gradients(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gradients(f.P, f.F, f.ds, f.hp));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Gradients)->RangeMultiplier(2)->Range(20, 320)->Complexity();

void BM_StackedGradient(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  const auto layout = pad_stack(f.ds);
  const Matrix P = stack_projections(f.P);
  for (auto _ : state) benchmark::DoNotOptimize(grad_wrt_P_stacked(P, f.F, layout, f.hp));
}
BENCHMARK(BM_StackedGradient)->Arg(40)->Arg(160);

void BM_TrainIterations(benchmark::State& state) {
  Fixture f(40);
  TrainConfig cfg;
  cfg.max_iters = state.range(0);
  cfg.tol = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(train(f.ds, cfg));
}
BENCHMARK(BM_TrainIterations)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Knn(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  const Matrix emb = fuse(f.P, f.ds);
  for (auto _ : state) benchmark::DoNotOptimize(knn_classify(emb, *f.ds.labels, emb));
}
BENCHMARK(BM_Knn)->Arg(100)->Arg(400);

}  // namespace
BENCHMARK_MAIN();
