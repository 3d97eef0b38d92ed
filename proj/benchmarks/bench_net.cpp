#include <benchmark/benchmark.h>

#include "neuroglue/net.hpp"
#include "neuroglue/trainer.hpp"

using namespace neuroglue;

static void BM_Forward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto h = HyperParams::supervised();
  const auto p = init_params(h, 1);
  const auto g = clause_literal_graph(random_ksat(n, static_cast<int>(n * 4.26), 3, 5));
  for (auto _ : state) {
    auto out = forward(p, h, g);
    benchmark::DoNotOptimize(out.policy_logits.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.edges.size()));
}
BENCHMARK(BM_Forward)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

static void BM_ForwardBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto h = HyperParams::supervised();
  const auto p = init_params(h, 1);
  const auto g = clause_literal_graph(random_ksat(n, static_cast<int>(n * 4.26), 3, 5));
  const std::vector<double> target(static_cast<std::size_t>(n), 1.0 / n);
  const LossFn loss = [&](const ForwardOutput& out) { return kl_loss(target, out.policy_logits); };
  for (auto _ : state) {
    auto r = loss_and_gradient(p, h, g, loss, true, 3);
    benchmark::DoNotOptimize(r.loss);
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);
