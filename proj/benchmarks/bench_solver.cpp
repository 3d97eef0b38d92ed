#include <benchmark/benchmark.h>

#include "neuroglue/cnf.hpp"
#include "neuroglue/extract.hpp"
#include "neuroglue/solver.hpp"

using namespace neuroglue;

static void BM_SolveRandom3Sat(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Formula f = random_ksat(n, static_cast<int>(n * 4.26), 3, 42);
  std::uint64_t conflicts = 0;
  for (auto _ : state) {
    Solver s(f);
    const auto r = s.solve();
    conflicts += r.stats.conflicts;
    benchmark::DoNotOptimize(r.status);
  }
  state.counters["conflicts/iter"] =
      benchmark::Counter(static_cast<double>(conflicts), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_SolveRandom3Sat)->Arg(50)->Arg(100)->Arg(150)->Unit(benchmark::kMillisecond);

static void BM_PropagateDecisions(benchmark::State& state) {
  const Formula f = random_ksat(500, 1500, 3, 7);
  Solver s(f);
  for (auto _ : state) {
    int decisions = 0;
    while (auto lit = s.pick_decision()) {
      s.decide(*lit);
      ++decisions;
      if (s.propagate()) break;
    }
    s.backtrack(0);
    benchmark::DoNotOptimize(decisions);
  }
}
BENCHMARK(BM_PropagateDecisions);

static void BM_ExtractGraph(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Formula f = random_ksat(n, static_cast<int>(n * 4.26), 3, 3);
  Solver s(f);
  s.solve(Budget::of_conflicts(200));
  for (auto _ : state) {
    auto g = extract_graph(s, 10'000'000);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_ExtractGraph)->Arg(100)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
