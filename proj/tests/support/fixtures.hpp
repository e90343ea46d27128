#pragma once

// Shared test fixtures: the three-parity example system, hand-built backups,
// and brute-force oracles that never call into the library's product,
// partition or fault-graph code.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <stdexcept>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fsmfusion/fusion.hpp"
#include "fsmfusion/machine.hpp"
#include "fsmfusion/product.hpp"

namespace fixtures {

using namespace fsmfusion;

// Parity machines: A counts {0,2}, B counts {1,2}, C counts {0}.
inline const char* kA = R"(machine A
states a0 a1
events 0 2
initial a0
trans a0 0 a1
trans a0 2 a1
trans a1 0 a0
trans a1 2 a0
)";

inline const char* kB = R"(machine B
states b0 b1
events 1 2
initial b0
trans b0 1 b1
trans b0 2 b1
trans b1 1 b0
trans b1 2 b0
)";

inline const char* kC = R"(machine C
states c0 c1
events 0
initial c0
trans c0 0 c1
trans c1 0 c0
)";

inline const char* kF1 = R"(machine F1
states f1_0 f1_1
events 1
initial f1_0
trans f1_0 1 f1_1
trans f1_1 1 f1_0
)";

// Blocks {r0,r3} {r1,r2} {r4,r6} {r5,r7} in the published labelling.
inline const char* kF2 = R"(machine F2
states f2_0 f2_1 f2_2 f2_3
events 0 1 2
initial f2_0
trans f2_0 0 f2_1
trans f2_1 0 f2_0
trans f2_2 0 f2_3
trans f2_3 0 f2_2
trans f2_0 1 f2_1
trans f2_1 1 f2_0
trans f2_2 1 f2_3
trans f2_3 1 f2_2
trans f2_0 2 f2_2
trans f2_1 2 f2_3
trans f2_2 2 f2_0
trans f2_3 2 f2_1
)";

inline const char* kG = R"(machine G
states g0 g1 g2 g3 g4
events 0 1 2
initial g0
trans g0 0 g4
trans g4 0 g0
trans g1 0 g1
trans g2 0 g2
trans g3 0 g3
trans g0 1 g1
trans g4 1 g1
trans g1 1 g0
trans g2 1 g3
trans g3 1 g2
trans g0 2 g3
trans g4 2 g3
trans g3 2 g0
trans g1 2 g2
trans g2 2 g1
)";

inline const char* kM = R"(machine M
states m0 m1 m2 m3
events 0 1 2 3
initial m0
trans m0 0 m3
trans m3 0 m0
trans m1 0 m2
trans m2 0 m1
trans m0 3 m1
trans m1 3 m0
trans m2 3 m3
trans m3 3 m2
trans m0 2 m0
trans m1 2 m0
trans m2 2 m0
trans m3 2 m0
trans m0 1 m3
trans m1 1 m3
trans m2 1 m3
trans m3 1 m3
)";

inline Machine A() { return parse_fsm_text(kA); }
inline Machine B() { return parse_fsm_text(kB); }
inline Machine C() { return parse_fsm_text(kC); }
inline Machine F1() { return parse_fsm_text(kF1); }
inline Machine F2() { return parse_fsm_text(kF2); }
inline Machine G() { return parse_fsm_text(kG); }
inline Machine M() { return parse_fsm_text(kM); }
inline std::vector<Machine> ABC() { return {A(), B(), C()}; }

// Published product labels r0..r7 as (A, B, C) state names.
inline const std::map<std::string, std::vector<std::string>>& labels() {
  static const std::map<std::string, std::vector<std::string>> t = {
      {"r0", {"a0", "b0", "c0"}}, {"r1", {"a0", "b1", "c0"}}, {"r2", {"a1", "b0", "c1"}},
      {"r3", {"a1", "b1", "c1"}}, {"r4", {"a1", "b1", "c0"}}, {"r5", {"a0", "b1", "c1"}},
      {"r6", {"a0", "b0", "c1"}}, {"r7", {"a1", "b0", "c0"}},
  };
  return t;
}

/// Product state id for a published label, resolved through its tuple.
inline StateId r(const RcpIndex& idx, const std::string& label) {
  auto id = idx.find(labels().at(label));
  if (!id) throw std::runtime_error("label " + label + " not in product");
  return *id;
}

using StateSet = std::set<StateId>;
using Blocks = std::set<StateSet>;

inline Blocks blocks_of(const BlockPartition& p) {
  Blocks out;
  for (const auto& b : p.blocks()) out.insert(StateSet(b.begin(), b.end()));
  return out;
}

/// Blocks given as lists of published labels.
inline Blocks blocks_from_labels(const RcpIndex& idx, const std::vector<std::vector<std::string>>& spec) {
  Blocks out;
  for (const auto& b : spec) {
    StateSet s;
    for (const auto& l : b) s.insert(r(idx, l));
    out.insert(s);
  }
  return out;
}

inline StateSet set_of(const RcpIndex& idx, const std::vector<std::string>& ls) {
  StateSet s;
  for (const auto& l : ls) s.insert(r(idx, l));
  return s;
}

// Published machines of the example lattice, as product blocks.
inline Blocks M1_blocks(const RcpIndex& idx) {  // parities of 0 and 1
  return blocks_from_labels(idx, {{"r0", "r4"}, {"r1", "r7"}, {"r2", "r5"}, {"r3", "r6"}});
}
inline Blocks M2_blocks(const RcpIndex& idx) {  // r0 and r2 merged
  return blocks_from_labels(idx, {{"r0", "r2"}, {"r1", "r3"}, {"r4", "r5"}, {"r6", "r7"}});
}
inline Blocks F1_blocks(const RcpIndex& idx) {
  return blocks_from_labels(idx, {{"r0", "r2", "r4", "r5"}, {"r1", "r3", "r6", "r7"}});
}
inline Blocks F2_blocks(const RcpIndex& idx) {
  return blocks_from_labels(idx, {{"r0", "r3"}, {"r1", "r2"}, {"r4", "r6"}, {"r5", "r7"}});
}
inline Blocks P2_blocks(const RcpIndex& idx) {  // parity of event 2 alone
  return blocks_from_labels(idx, {{"r0", "r1", "r2", "r3"}, {"r4", "r5", "r6", "r7"}});
}
inline Blocks P01_blocks(const RcpIndex& idx) {  // parity of events 0 and 1 together
  return blocks_from_labels(idx, {{"r0", "r3", "r4", "r6"}, {"r1", "r2", "r5", "r7"}});
}

/// A closed partition from explicit blocks; canonical form comes from make_partition.
inline BlockPartition partition_from(const RcpIndex& idx, const Blocks& b, std::string name = "X") {
  std::vector<std::uint32_t> raw(idx.size());
  std::uint32_t k = 0;
  for (const auto& blk : b) {
    for (auto s : blk) raw[s] = k;
    ++k;
  }
  return make_partition(std::move(name), raw, idx.tag());
}

// ---------------------------------------------------------------------------
// Oracles

/// Reachable primary tuples with a shortest witness sequence each, found by
/// breadth-first search over tuples using only Machine::step.
struct ReachOracle {
  std::map<std::vector<StateId>, EventSequence> witness;
};

inline ReachOracle reach(const std::vector<Machine>& ms) {
  std::set<Event> sigma;
  for (const auto& m : ms) sigma.insert(m.events().begin(), m.events().end());
  ReachOracle o;
  std::vector<StateId> init;
  for (const auto& m : ms) init.push_back(m.initial());
  std::deque<std::vector<StateId>> q{init};
  o.witness[init] = {};
  while (!q.empty()) {
    auto t = q.front();
    q.pop_front();
    for (auto e : sigma) {
      auto u = t;
      for (std::size_t i = 0; i < ms.size(); ++i) u[i] = ms[i].step(t[i], e);
      if (o.witness.count(u)) continue;
      auto w = o.witness[t];
      w.push_back(e);
      o.witness[u] = w;
      q.push_back(u);
    }
  }
  return o;
}

/// Witness sequence for each product state, in product-state order.
inline std::vector<EventSequence> witnesses(const RcpIndex& idx) {
  auto o = reach(idx.primaries());
  std::vector<EventSequence> out;
  for (StateId s = 0; s < idx.size(); ++s) {
    auto t = idx.tuple_of(s);
    out.push_back(o.witness.at(std::vector<StateId>(t.begin(), t.end())));
  }
  return out;
}

/// Weight of (u, v): machines whose run on the two witnesses ends in different states.
inline std::vector<std::vector<int>> oracle_weights(const std::vector<EventSequence>& w,
                                                    const std::vector<Machine>& machines) {
  const std::size_t n = w.size();
  std::vector<std::vector<StateId>> at(machines.size(), std::vector<StateId>(n));
  for (std::size_t m = 0; m < machines.size(); ++m)
    for (std::size_t s = 0; s < n; ++s) at[m][s] = machines[m].run(w[s]);
  std::vector<std::vector<int>> wt(n, std::vector<int>(n, 0));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t m = 0; m < machines.size(); ++m) wt[u][v] += at[m][u] != at[m][v];
  return wt;
}

inline int oracle_dmin(const std::vector<std::vector<int>>& wt) {
  int best = -1;
  for (std::size_t u = 0; u < wt.size(); ++u)
    for (std::size_t v = u + 1; v < wt.size(); ++v)
      if (best < 0 || wt[u][v] < best) best = wt[u][v];
  return best;
}

/// Brute-force closure test straight from the definition.
inline bool oracle_closed(const RcpIndex& idx, const std::vector<std::uint32_t>& block_of) {
  const auto& R = idx.rcp();
  for (StateId u = 0; u < idx.size(); ++u)
    for (StateId v = 0; v < idx.size(); ++v) {
      if (block_of[u] != block_of[v]) continue;
      for (auto e : R.events())
        if (block_of[R.step(u, e)] != block_of[R.step(v, e)]) return false;
    }
  return true;
}

/// Every set partition of {0..n-1} as a restricted growth string.
inline std::vector<std::vector<std::uint32_t>> all_set_partitions(std::size_t n) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> a(n, 0);
  std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t i, std::uint32_t mx) {
    if (i == n) {
      out.push_back(a);
      return;
    }
    for (std::uint32_t b = 0; b <= mx + 1 && (i > 0 || b == 0); ++b) {
      a[i] = b;
      rec(i + 1, std::max(mx, b));
    }
  };
  if (n == 0) return {{}};
  a[0] = 0;
  rec(1, 0);
  return out;
}

/// p <= q from the definition: each block of q inside a block of p.
inline bool oracle_leq(const std::vector<std::uint32_t>& p, const std::vector<std::uint32_t>& q) {
  for (std::size_t u = 0; u < p.size(); ++u)
    for (std::size_t v = 0; v < p.size(); ++v)
      if (q[u] == q[v] && p[u] != p[v]) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Random systems

/// Random machine with the given number of states over a random non-empty
/// subset of {0..universe-1}. Every state is reachable (a spanning path on
/// the first event guarantees it).
inline Machine random_machine(std::mt19937_64& rng, const std::string& name, std::size_t states,
                              std::size_t universe, std::size_t max_events = 0) {
  std::vector<Event> ev;
  for (Event e = 0; e < universe; ++e)
    if (rng() % 2) ev.push_back(e);
  if (ev.empty()) ev.push_back(static_cast<Event>(rng() % universe));
  std::shuffle(ev.begin(), ev.end(), rng);
  if (max_events && ev.size() > max_events) ev.resize(max_events);
  std::sort(ev.begin(), ev.end());
  std::vector<std::string> names;
  for (std::size_t s = 0; s < states; ++s) names.push_back(name + std::to_string(s));
  std::vector<std::vector<StateId>> table(states, std::vector<StateId>(ev.size()));
  for (std::size_t s = 0; s < states; ++s)
    for (std::size_t i = 0; i < ev.size(); ++i) table[s][i] = static_cast<StateId>(rng() % states);
  for (std::size_t s = 0; s < states; ++s) table[s][0] = static_cast<StateId>((s + 1) % states);
  return Machine(name, names, ev, 0, table);
}

}  // namespace fixtures
