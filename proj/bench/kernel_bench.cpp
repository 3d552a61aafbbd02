// Serial reference vs OpenMP variants of the hot kernels.

#include <numeric>

#include <benchmark/benchmark.h>

#include "alplab/estimators.hpp"
#include "alplab/kernels.hpp"

using namespace alplab;

namespace {

struct Fixture {
  GoalSpace space;
  std::shared_ptr<const GoalCatalog> catalog;
  CompetenceNet net;
  ParamStore params;
  std::vector<std::size_t> rows;
  std::vector<LabelledRow> batch;

  Fixture()
      : space(generate(GenerationConfig{2'000, 0, {0.80, 0.16, 0.032, 0.007, 0.001}, 1},
                       Vocabulary::default_vocabulary())),
        catalog(GoalCatalog::build(space)),
        net(NetShape{catalog->tokenizer().size(), 64, 128}),
        params(net.make_params(7)) {
    rows.resize(space.size());
    std::iota(rows.begin(), rows.end(), 0);
    for (std::size_t i = 0; i < 256; ++i)
      batch.push_back({(i * 37) % space.size(), space.goal(static_cast<GoalId>((i * 37) % space.size())).feasible});
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_PredictMany(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<double> out(f.rows.size());
  for (auto _ : state) {
    predict_many(f.net, f.params, f.catalog->tokens(), f.rows, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.rows.size()));
}

void BM_BatchGradient(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<double> grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_gradient(f.net, f.params, f.catalog->tokens(), f.batch, grad,
                                            exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}

void BM_ClassifyBfs(benchmark::State& state) {
  const GoalSpace space = generate(GenerationConfig{500, 0, {0.80, 0.16, 0.032, 0.007, 0.001}, 2},
                                   Vocabulary::default_vocabulary());
  for (auto _ : state) benchmark::DoNotOptimize(classify_bfs_mismatches(space, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(space.size()));
}

}  // namespace

BENCHMARK(BM_PredictMany)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradient)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassifyBfs)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
