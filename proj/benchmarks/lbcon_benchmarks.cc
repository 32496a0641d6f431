#include <benchmark/benchmark.h>

#include "lbcon/gains.hpp"
#include "lbcon/numerics.hpp"
#include "lbcon/run.hpp"
#include "lbcon/scenario.hpp"
#include "lbcon/simulation.hpp"

namespace lbcon {
namespace {

void BM_ParseScenario(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(canned_scenario("example1"));
}
BENCHMARK(BM_ParseScenario);

void BM_VerifyExampleOne(benchmark::State& state) {
  const Scenario s = canned_scenario("example1");
  const ObservableDecomposition dec = decompose(s.system, s.U_o, s.h);
  const Vector y0 = s.initial_outputs();
  for (auto _ : state) benchmark::DoNotOptimize(verify_certificate(dec, s.certificate, y0));
}
BENCHMARK(BM_VerifyExampleOne);

void BM_PencilDegree(benchmark::State& state) {
  const Scenario s = canned_scenario("example1");
  for (auto _ : state) {
    benchmark::DoNotOptimize(pencil_determinant_degree(s.system.E(), s.system.A()));
  }
}
BENCHMARK(BM_PencilDegree);

void BM_SimulateExample(benchmark::State& state) {
  const Scenario s = canned_scenario(state.range(0) == 1 ? "example1" : "example2");
  for (auto _ : state) benchmark::DoNotOptimize(run(s, Command::simulate));
}
BENCHMARK(BM_SimulateExample)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace lbcon

BENCHMARK_MAIN();
