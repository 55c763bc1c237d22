#include <benchmark/benchmark.h>

#include "cregmm/dgp.hpp"
#include "cregmm/gmm.hpp"
#include "cregmm/mc.hpp"

using namespace cregmm;

namespace {

ExecPolicy policy_of(const benchmark::State& s) { return s.range(0) ? ExecPolicy::Parallel : ExecPolicy::Serial; }

void BM_SimulatePanel(benchmark::State& state) {
  DgpConfig c;
  c.N = 5000;
  c.T = 20;
  c.gamma1 = 0.25;
  for (auto _ : state) {
    ++c.seed;
    benchmark::DoNotOptimize(simulate_panel(c, false, policy_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * c.N * c.T);
}
BENCHMARK(BM_SimulatePanel)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_RunGrid(benchmark::State& state) {
  McConfig c;
  c.grid.gamma3 = {0.0};
  c.reps = 16;
  c.estimators = {"FE", "CRE1", "GL", "CREGMM5"};
  c.policy = policy_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(run_grid(c));
  state.SetItemsProcessed(state.iterations() * c.reps);
}
BENCHMARK(BM_RunGrid)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_TwoStepGL(benchmark::State& state) {
  DgpConfig c;
  c.N = static_cast<int>(state.range(0));
  c.T = 10;
  const auto p = simulate_panel(c, false);
  ModelSpec m;
  m.x_terms = {{"x", 0, {}}};
  m.presample_end = 2;
  GmmOptions o;
  o.steps = 2;
  o.windmeijer = true;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_variant(p, m, Variant::GL, o));
}
BENCHMARK(BM_TwoStepGL)->Arg(100)->Arg(1000)->ArgName("N")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
