#include <benchmark/benchmark.h>

#include "dta/agents.hpp"
#include "dta/engine.hpp"

namespace {

dta::CostSpec table_spec() {
  const double a[] = {0.0314, 0.0342, 0.0392, 0.0379, 0.0366,
                      0.0304, 0.0385, 0.0393, 0.0368, 0.0396};
  const double b[] = {0.352, 0.349, 0.278, 0.331, 0.234,
                      0.341, 0.206, 0.255, 0.209, 0.219};
  std::vector<dta::QuadraticCost> q;
  for (int i = 0; i < 10; ++i) q.emplace_back(a[i], b[i]);
  dta::StateMatrix d = dta::StateMatrix::Constant(10, 1, 10.0);
  return dta::CostSpec::quadratic(q, d);
}

dta::EngineConfig config(dta::Execution ex, int replicas) {
  dta::EngineConfig cfg;
  cfg.plan = dta::StepsizePlan::shared(0.3784, 28.62);
  cfg.iterations = 5000;
  cfg.x0 = dta::StateMatrix::Zero(10, 1);
  cfg.replicas = replicas;
  cfg.seed = 7;
  cfg.execution = ex;
  return cfg;
}

void BM_RunSerial(benchmark::State& state) {
  const auto spec = table_spec();
  const auto model = dta::NetworkModel::complete(10, 0.5);
  const auto cfg = config(dta::Execution::Serial, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dta::run(cfg, spec, model));
  state.SetItemsProcessed(state.iterations() * state.range(0) * cfg.iterations);
}

void BM_RunParallel(benchmark::State& state) {
  const auto spec = table_spec();
  const auto model = dta::NetworkModel::complete(10, 0.5);
  const auto cfg = config(dta::Execution::Parallel, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dta::run(cfg, spec, model));
  state.SetItemsProcessed(state.iterations() * state.range(0) * cfg.iterations);
}

void BM_MatrixKernel(benchmark::State& state) {
  const auto spec = table_spec();
  const auto model = dta::NetworkModel::complete(10, 0.5);
  dta::Rng rng = dta::make_stream(1, 0, dta::StreamPurpose::Network);
  const auto w = dta::sample(model, rng);
  auto s = dta::init(spec, dta::StateMatrix::Zero(10, 1));
  const auto plan = dta::StepsizePlan::shared(0.1, 10.0);
  dta::StepWorkspace ws;
  for (auto _ : state) {
    dta::dta_step(s, spec, w, plan, ws);
    benchmark::DoNotOptimize(s.x.data());
  }
}

void BM_AgentKernel(benchmark::State& state) {
  const auto spec = table_spec();
  const auto model = dta::NetworkModel::complete(10, 0.5);
  dta::Rng rng = dta::make_stream(1, 0, dta::StreamPurpose::Network);
  const auto w = dta::sample(model, rng);
  auto s = dta::init(spec, dta::StateMatrix::Zero(10, 1));
  const auto plan = dta::StepsizePlan::shared(0.1, 10.0);
  for (auto _ : state) {
    dta::agent_dta_step(s, spec, model, w, plan, nullptr);
    benchmark::DoNotOptimize(s.x.data());
  }
}

}  // namespace

BENCHMARK(BM_RunSerial)->Arg(1)->Arg(8)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunParallel)->Arg(1)->Arg(8)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatrixKernel);
BENCHMARK(BM_AgentKernel);

BENCHMARK_MAIN();
