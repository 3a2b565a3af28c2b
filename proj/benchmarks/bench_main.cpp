#include <benchmark/benchmark.h>

#include "dgrel/engine.hpp"
#include "dgrel/network_io.hpp"
#include "dgrel/scenario.hpp"
#include "dgrel/solver.hpp"

namespace {

const dgrel::Network& reference() {
  static const dgrel::Network net = dgrel::load_network(std::string(DGREL_SOURCE_DIR) + "/networks/loop4kv.json");
  return net;
}

void BM_SteadyState(benchmark::State& state) {
  const auto net = dgrel::with_dg_at(reference(), std::string("C3"));
  const auto sw = dgrel::SwitchState::all_closed(net, true);
  for (auto _ : state) benchmark::DoNotOptimize(dgrel::solve_steady_state(net, sw));
}
BENCHMARK(BM_SteadyState);

void BM_Fault(benchmark::State& state) {
  const auto& net = reference();
  const auto sw = dgrel::SwitchState::all_closed(net);
  const auto fault = dgrel::Study::of(net).fault_in("B");
  for (auto _ : state) benchmark::DoNotOptimize(dgrel::solve_fault(net, sw, fault));
}
BENCHMARK(BM_Fault);

void BM_Scenario(benchmark::State& state) {
  const auto& net = reference();
  const auto study = dgrel::Study::of(net);
  const auto placed = dgrel::with_dg_at(net, study.dg_bus("C"));
  const auto fault = study.fault_in("B");
  for (auto _ : state) benchmark::DoNotOptimize(dgrel::run_scenario(placed, fault));
}
BENCHMARK(BM_Scenario)->Unit(benchmark::kMicrosecond);

void BM_Sweep(benchmark::State& state) {
  const auto& net = reference();
  const dgrel::SweepOptions opts{static_cast<unsigned>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(dgrel::sweep_all(net, dgrel::DeviceMode::asbuilt, opts));
}
BENCHMARK(BM_Sweep)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
