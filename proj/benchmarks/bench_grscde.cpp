#include "grscde/datagen.hpp"
#include "grscde/harness.hpp"
#include "grscde/regularizers.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace grscde;

struct Setup {
  PairedDataset train;
  PairedDataset val;
  AuxiliaryGrid aux;
  KernelConfig cfg;
};

Setup make_setup(Index n, Index n_u) {
  Rng rng = make_rng(42, static_cast<std::uint64_t>(n));
  const PairedDataset all = gen_mixture(MixtureSpec{2, 50}, 2 * n, rng).data;
  std::vector<Index> first(static_cast<std::size_t>(n)), second(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    first[static_cast<std::size_t>(i)] = i;
    second[static_cast<std::size_t>(i)] = n + i;
  }
  Setup s{all.subset(first), all.subset(second), {}, {}};
  s.aux = sample_aux(s.train.y.minCoeff(), s.train.y.maxCoeff(), n_u, rng);
  s.cfg = KernelConfig::make(median_heuristic(s.train.x), median_heuristic(s.train.y));
  return s;
}

void BM_BuildProblem(benchmark::State& state) {
  const Setup s = make_setup(state.range(0), 50);
  for (auto _ : state) benchmark::DoNotOptimize(NodeProblem::build(s.train, s.aux, s.cfg));
}
BENCHMARK(BM_BuildProblem)->Arg(50)->Arg(100)->Arg(200);

void BM_LandweberStep(benchmark::State& state) {
  const Setup s = make_setup(state.range(0), 50);
  const NodeProblem problem = NodeProblem::build(s.train, s.aux, s.cfg);
  const StepPolicy policy = state.range(1) ? StepPolicy::line_search() : StepPolicy::fixed_inverse_kappa();
  const LandweberState start = landweber_init(InitialFunction::uniform(), problem);
  for (auto _ : state) benchmark::DoNotOptimize(landweber_step(start, problem, policy));
}
BENCHMARK(BM_LandweberStep)->ArgsProduct({{50, 100, 200}, {0, 1}});

void BM_TikhonovFit(benchmark::State& state) {
  const Setup s = make_setup(state.range(0), 50);
  const NodeProblem problem = NodeProblem::build(s.train, s.aux, s.cfg);
  for (auto _ : state) benchmark::DoNotOptimize(tikhonov_fit(problem, 1.0 / 27.0));
}
BENCHMARK(BM_TikhonovFit)->Arg(50)->Arg(100)->Arg(200);

void BM_Selection(benchmark::State& state) {
  const Setup s = make_setup(100, 50);
  const HyperGrid hyper;
  const SearchGrids grids = build_grids(s.train, hyper);
  const auto method = static_cast<Method>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(select(method, s.train, s.val, s.aux, grids, hyper));
  state.SetLabel(std::string(to_string(method)));
}
BENCHMARK(BM_Selection)
    ->Arg(static_cast<int>(Method::grs_els))
    ->Arg(static_cast<int>(Method::grs_fixed))
    ->Arg(static_cast<int>(Method::grs_tikhonov))
    ->Arg(static_cast<int>(Method::nw))
    ->Arg(static_cast<int>(Method::kmd))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
