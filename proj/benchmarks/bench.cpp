#include <benchmark/benchmark.h>

#include "blockmix/cavi.hpp"
#include "blockmix/simulate.hpp"

namespace {

blockmix::SimConfig sim_config(int n_nodes) {
  blockmix::SimConfig sim;
  sim.n_nodes = n_nodes;
  sim.seed = 5;
  return sim;
}

blockmix::ModelConfig model_config() {
  blockmix::ModelConfig mc;
  mc.n_states = 2;
  mc.blocks_per_state = {3, 3};
  mc.noise_var = 6.0;
  mc.gamma_prior_prob = 1e-4;
  return mc;
}

void bm_suffstats(benchmark::State& bench) {
  const auto [tensor, truth] = blockmix::generate(sim_config(static_cast<int>(bench.range(0))));
  const auto mc = model_config();
  const auto st = blockmix::init_state(mc, tensor, 1);
  for (auto _ : bench) {
    benchmark::DoNotOptimize(blockmix::block_suffstats(tensor, st.eta));
  }
}
BENCHMARK(bm_suffstats)->Arg(60)->Arg(200)->Unit(benchmark::kMillisecond);

void bm_sweep(benchmark::State& bench) {
  const auto [tensor, truth] = blockmix::generate(sim_config(static_cast<int>(bench.range(0))));
  auto mc = model_config();
  mc.max_iter = 1;
  mc.check_monotonicity = false;
  for (auto _ : bench) {
    auto st = blockmix::init_state(mc, tensor, 1);
    benchmark::DoNotOptimize(blockmix::run_sweeps(st, tensor, mc));
  }
}
BENCHMARK(bm_sweep)->Arg(60)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
