#include <benchmark/benchmark.h>

#include <random>

#include "fsmfusion/fault_graph.hpp"
#include "fsmfusion/fusion.hpp"
#include "fsmfusion/partition.hpp"
#include "fsmfusion/product.hpp"
#include "fsmfusion/recovery.hpp"

using namespace fsmfusion;

namespace {

// Mod-k counter that advances on the given events.
Machine counter(const std::string& name, std::size_t k, const std::vector<Event>& events) {
  std::vector<std::string> st;
  for (std::size_t i = 0; i < k; ++i) st.push_back(name + std::to_string(i));
  std::vector<std::vector<StateId>> table(k, std::vector<StateId>(events.size()));
  for (StateId s = 0; s < k; ++s)
    for (std::size_t i = 0; i < events.size(); ++i) table[s][i] = static_cast<StateId>((s + 1) % k);
  return Machine(name, st, events, 0, table);
}

std::vector<Machine> counters(std::size_t n, std::size_t k) {
  std::vector<Machine> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(counter("p" + std::to_string(i), k, {static_cast<Event>(i)}));
  return out;
}

void BM_Rcp(benchmark::State& state) {
  auto ms = counters(3, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rcp(ms).size());
  state.SetComplexityN(state.range(0) * state.range(0) * state.range(0));
}
BENCHMARK(BM_Rcp)->Arg(4)->Arg(8)->Arg(16)->Complexity();

void BM_Closure(benchmark::State& state) {
  auto idx = rcp(counters(3, static_cast<std::size_t>(state.range(0))));
  std::mt19937_64 rng(1);
  for (auto _ : state) {
    StatePair seed{static_cast<StateId>(rng() % idx.size()), static_cast<StateId>(rng() % idx.size())};
    benchmark::DoNotOptimize(largest_consistent(idx, std::span(&seed, 1)).num_blocks);
  }
}
BENCHMARK(BM_Closure)->Arg(4)->Arg(8)->Arg(16);

void BM_ReduceState(benchmark::State& state) {
  auto idx = rcp(counters(3, static_cast<std::size_t>(state.range(0))));
  auto top = largest_consistent(idx, std::span<const StatePair>{});
  for (auto _ : state) benchmark::DoNotOptimize(reduce_state(idx, top).size());
}
BENCHMARK(BM_ReduceState)->Arg(3)->Arg(4)->Arg(5);

void BM_GenFusion(benchmark::State& state) {
  auto idx = rcp(counters(3, static_cast<std::size_t>(state.range(0))));
  FusionOptions o;
  o.delta_states = 1;
  o.delta_events = 1;
  for (auto _ : state) benchmark::DoNotOptimize(gen_fusion(idx, 2, o).m());
}
BENCHMARK(BM_GenFusion)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_LshQuery(benchmark::State& state) {
  // Four mod-5 counters with two checksum backups, dmin 3.
  auto ms = counters(4, 5);
  auto idx = rcp(ms);
  std::vector<BlockPartition> fus;
  std::vector<std::vector<StateId>> bump{{1, 1, 1, 1}, {1, 2, 3, 4}};
  for (std::size_t j = 0; j < 2; ++j) {
    std::vector<std::string> st;
    for (int i = 0; i < 5; ++i) st.push_back("f" + std::to_string(j) + "_" + std::to_string(i));
    std::vector<std::vector<StateId>> table(5, std::vector<StateId>(4));
    for (StateId s = 0; s < 5; ++s)
      for (std::size_t e = 0; e < 4; ++e) table[s][e] = (s + bump[j][e]) % 5;
    fus.push_back(map_states(idx, Machine("F" + std::to_string(j), st, {0, 1, 2, 3}, 0, table)));
  }
  LshOptions lo;
  lo.distance = 2;
  RecoveryIndex ri(idx, fus, lo);
  std::mt19937_64 rng(2);
  for (auto _ : state) {
    StateId s = static_cast<StateId>(rng() % idx.size());
    auto t = idx.tuple_of(s);
    Tuple q(t.begin(), t.end());
    q[rng() % 4] = static_cast<StateId>(rng() % 5);
    auto pq = to_partial(q);
    if (state.range(0))
      benchmark::DoNotOptimize(ri.lsh_query(0, fus[0].block_of[s], pq, 2).size());
    else
      benchmark::DoNotOptimize(ri.exhaustive_query(0, fus[0].block_of[s], pq, 2).size());
  }
}
BENCHMARK(BM_LshQuery)->ArgName("lsh")->Arg(0)->Arg(1);

}  // namespace
BENCHMARK_MAIN();
