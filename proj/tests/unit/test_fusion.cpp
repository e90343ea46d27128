#include <doctest.h>

#include "fixtures.hpp"
#include "fsmfusion/error.hpp"
#include "fsmfusion/fusion.hpp"

using namespace fsmfusion;
using fixtures::r;

namespace {

/// dmin of primaries plus backups, computed from runs on witness sequences.
int oracle_fusion_dmin(const RcpIndex& idx, const FusionSet& fs) {
  auto ms = idx.primaries();
  for (const auto& b : fs.backups) ms.push_back(b.machine);
  return fixtures::oracle_dmin(fixtures::oracle_weights(fixtures::witnesses(idx), ms));
}

std::vector<Machine> random_system(std::mt19937_64& rng, std::size_t max_rcp) {
  for (;;) {
    std::vector<Machine> ms;
    for (int j = 0; j < 3; ++j)
      ms.push_back(fixtures::random_machine(rng, std::string(1, char('p' + j)), 2 + rng() % 2, 4));
    auto idx = rcp(ms);
    if (idx.size() >= 3 && idx.size() <= max_rcp) return ms;
  }
}

bool contains_all(const std::vector<StatePair>& big, const std::vector<StatePair>& small) {
  return std::all_of(small.begin(), small.end(),
                     [&](StatePair e) { return std::find(big.begin(), big.end(), e) != big.end(); });
}

}  // namespace

TEST_CASE("parity example synthesis") {
  auto ms = fixtures::ABC();
  auto idx = rcp(ms);
  FusionOptions o;
  o.delta_states = 1;
  o.delta_events = 1;
  auto fs = gen_fusion(idx, 2, o);
  REQUIRE(fs.m() == 2);
  CHECK(fs.backups[0].machine.num_states() == 2);
  CHECK(fs.backups[0].events.size() == 1);
  CHECK(fs.backups[1].machine.num_states() == 4);
  CHECK(fs.backups[1].events.size() == 3);
  CHECK(fixtures::blocks_of(fs.backups[0].partition) == fixtures::F1_blocks(idx));
  CHECK(fs.backups[0].events == std::vector<Event>{1});
  CHECK(fs.backups[0].machine.name() == "F1");
  CHECK(fs.backups[1].machine.name() == "F2");
  CHECK(fs.dmin_before == 1);
  CHECK(fs.dmin_after == 3);
  CHECK(verify_fusion(idx, fs) == 3);
  CHECK(oracle_fusion_dmin(idx, fs) == 3);

  REQUIRE(fs.trace.size() == 2);
  CHECK(fs.trace[0].dmin_before == 1);
  CHECK(fs.trace[1].dmin_before == 2);
  CHECK(contains_all(fs.trace[1].weakest, fs.trace[0].weakest));
  for (const auto& b : fs.backups) CHECK(is_closed(idx, b.partition));
}

TEST_CASE("zero budget and argument errors") {
  auto ms = fixtures::ABC();
  auto fs = gen_fusion(std::span<const Machine>(ms), 0);
  CHECK(fs.m() == 0);
  CHECK(fs.dmin_after == fs.dmin_before);
  CHECK_THROWS_AS(gen_fusion(std::span<const Machine>(ms), -1), ValidationError);
}

TEST_CASE("generated fusions verify on random systems") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 20; ++i) {
    auto ms = random_system(rng, 16);
    auto idx = rcp(ms);
    int f = 1 + static_cast<int>(rng() % 2);
    FusionOptions o;
    o.delta_states = static_cast<int>(rng() % 3);
    o.delta_events = static_cast<int>(rng() % 2);
    o.frontier_cap = 0;
    auto fs = gen_fusion(idx, f, o);
    CAPTURE(i);
    CHECK(fs.m() == static_cast<std::size_t>(f));
    CHECK(oracle_fusion_dmin(idx, fs) > f);
    CHECK(verify_fusion(idx, fs) == fs.dmin_after);
    // Each iteration raises dmin by exactly one.
    for (std::size_t t = 0; t < fs.trace.size(); ++t) CHECK(fs.trace[t].dmin_before == fs.dmin_before + t);
    CHECK(fs.dmin_after == fs.dmin_before + f);
    CHECK(fs.m() + fs.dmin_before > static_cast<std::size_t>(f));
    for (std::size_t t = 1; t < fs.trace.size(); ++t) CHECK(contains_all(fs.trace[t].weakest, fs.trace[t - 1].weakest));
    for (const auto& b : fs.backups) {
      CHECK(is_closed(idx, b.partition));
      CHECK(covers_all(b.partition, fs.trace[0].weakest));
      CHECK(b.events == acting_events(idx, b.partition));
    }
  }
}

TEST_CASE("coverage of the primaries' weakest edges, via the oracle") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    auto ms = random_system(rng, 12);
    auto idx = rcp(ms);
    auto fs = gen_fusion(idx, 1);
    auto wt = fixtures::oracle_weights(fixtures::witnesses(idx), ms);
    int d = fixtures::oracle_dmin(wt);
    auto w = fixtures::witnesses(idx);
    for (StateId u = 0; u < idx.size(); ++u)
      for (StateId v = u + 1; v < idx.size(); ++v)
        if (wt[u][v] == d) CHECK(fs.backups[0].machine.run(w[u]) != fs.backups[0].machine.run(w[v]));
  }
}

TEST_CASE("minimality: nothing coarser still qualifies") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 15; ++i) {
    auto ms = random_system(rng, 12);
    auto idx = rcp(ms);
    auto lattice = enumerate_closed_partitions(idx, 12);
    FusionOptions o;
    o.frontier_cap = 0;
    o.delta_states = static_cast<int>(rng() % 2);
    auto fs = gen_fusion(idx, 2, o);
    for (std::size_t t = 0; t < fs.m(); ++t) {
      const auto& chosen = fs.backups[t].partition;
      for (const auto& q : lattice)
        if (!(q == chosen) && leq(q, chosen)) CHECK_FALSE(covers_all(q, fs.trace[t].weakest));
    }
  }
}

TEST_CASE("efficiency: a smaller qualifying machine is found whenever one exists") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 40; ++i) {
    auto ms = random_system(rng, 12);
    auto idx = rcp(ms);
    auto lattice = enumerate_closed_partitions(idx, 12);
    auto weakest = weakest_edges(build_fault_graph(idx, primary_partitions(idx)));
    const std::size_t n = idx.size(), sigma = idx.sigma().size();
    CAPTURE(i);

    FusionOptions o;
    o.frontier_cap = 0;
    o.delta_states = 1 + static_cast<int>(rng() % 3);
    auto fs = gen_fusion(idx, 1, o);
    bool exists_s = std::any_of(lattice.begin(), lattice.end(), [&](const BlockPartition& q) {
      return covers_all(q, weakest) && q.num_blocks + o.delta_states <= n;
    });
    CHECK(exists_s == (fs.trace[0].min_states + o.delta_states <= n));

    FusionOptions e;
    e.frontier_cap = 0;
    e.delta_events = 1 + static_cast<int>(rng() % 2);
    auto fe = gen_fusion(idx, 1, e);
    bool exists_e = std::any_of(lattice.begin(), lattice.end(), [&](const BlockPartition& q) {
      return covers_all(q, weakest) && acting_events(idx, q).size() + e.delta_events <= sigma;
    });
    bool found_e = fe.trace[0].min_events + e.delta_events <= sigma;
    CHECK(exists_e == found_e);
    if (found_e) CHECK(fe.backups[0].events.size() + e.delta_events <= sigma);
  }
}

TEST_CASE("incremental synthesis") {
  auto ms = fixtures::ABC();
  auto fs = inc_fusion(ms, 1);
  auto idx = rcp(ms);
  REQUIRE(fs.m() == 1);
  CHECK(verify_fusion(idx, fs) >= 2);
  CHECK(oracle_fusion_dmin(idx, fs) >= 2);
  REQUIRE(fs.rounds.size() == 2);
  CHECK(fs.rounds[0].inputs == std::vector<std::string>{"A", "B"});
  CHECK(fs.rounds[0].rcp_states == 4);
  CHECK(fs.rounds[1].inputs.size() == 2);
  CHECK(fs.rounds[1].inputs[1] == "C");

  std::vector<Machine> one{fixtures::A()};
  auto single = inc_fusion(one, 1);
  auto direct = gen_fusion(std::span<const Machine>(one), 1);
  REQUIRE(single.m() == direct.m());
  CHECK(single.backups[0].partition == direct.backups[0].partition);
}

TEST_CASE("incremental synthesis verifies on random systems") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 20; ++i) {
    auto ms = random_system(rng, 16);
    auto idx = rcp(ms);
    int f = 1 + static_cast<int>(rng() % 2);
    auto fs = inc_fusion(ms, f);
    CAPTURE(i);
    CHECK(fs.m() == static_cast<std::size_t>(f));
    CHECK(oracle_fusion_dmin(idx, fs) > f);
    for (const auto& b : fs.backups) CHECK(is_closed(idx, b.partition));
  }
}

TEST_CASE("event decomposition of the four-event machine") {
  auto m = fixtures::M();
  auto d = event_decompose(m, 1);
  REQUIRE(d.exists);
  REQUIRE(d.parts.size() == 2);
  std::vector<Machine> one{m};
  auto o = fixtures::reach(one);
  std::set<std::set<std::set<std::string>>> shapes;
  for (const auto& p : d.parts) {
    CHECK(p.machine.num_events() == 3);
    CHECK(p.machine.num_states() == 2);
    std::map<StateId, std::set<std::string>> cls;
    for (const auto& [t, w] : o.witness) cls[p.machine.run(w)].insert(m.state_name(t[0]));
    std::set<std::set<std::string>> s;
    for (auto& [k, v] : cls) s.insert(v);
    shapes.insert(s);
  }
  using S = std::set<std::set<std::string>>;
  CHECK(shapes == std::set<S>{S{{"m0", "m3"}, {"m1", "m2"}}, S{{"m0", "m1"}, {"m2", "m3"}}});
}

TEST_CASE("event decomposition separates all pairs") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 25; ++i) {
    auto m = fixtures::random_machine(rng, "m", 2 + rng() % 4, 5);
    std::vector<Machine> one{m};
    auto o = fixtures::reach(one);
    for (int e = 0; e <= 2; ++e) {
      auto d = event_decompose(m, e);
      if (!d.exists) continue;
      CHECK(d.parts.size() <= o.witness.size() * o.witness.size());
      for (const auto& p : d.parts) CHECK(p.machine.num_events() + e <= m.num_events());
      for (auto a = o.witness.begin(); a != o.witness.end(); ++a)
        for (auto b = std::next(a); b != o.witness.end(); ++b) {
          bool sep = std::any_of(d.parts.begin(), d.parts.end(), [&](const Backup& p) {
            return p.machine.run(a->second) != p.machine.run(b->second);
          });
          CHECK(sep);
        }
    }
  }
  auto m = fixtures::M();
  auto d0 = event_decompose(m, 0);
  REQUIRE(d0.parts.size() == 1);
  CHECK(d0.parts[0].machine.num_states() == 4);
}

TEST_CASE("external backup check") {
  auto ms = fixtures::ABC();
  std::vector<Machine> g{fixtures::G()};
  auto rep = check_external_backup(ms, g, 1);
  CHECK(rep.ok);
  CHECK(rep.dmin >= 2);
  auto idx = rcp(ms);
  auto at_r0 = std::find_if(rep.ambiguities.begin(), rep.ambiguities.end(),
                            [&](const Ambiguity& a) { return a.rcp_state == r(idx, "r0"); });
  REQUIRE(at_r0 != rep.ambiguities.end());
  CHECK(at_r0->machine == "G");
  CHECK(at_r0->states == std::vector<std::string>{"g0", "g4"});
  for (const auto& a : rep.ambiguities) CHECK(a.states.size() >= 2);

  // Copies of the product always suffice.
  for (int f = 0; f < 4; ++f) {
    std::vector<Machine> copies;
    for (int i = 0; i < f; ++i) copies.push_back(idx.rcp().renamed("R" + std::to_string(i)));
    CHECK(check_external_backup(ms, copies, f).ok);
  }
  // A machine that is constant on the product adds nothing.
  std::vector<Machine> useless{parse_fsm_text("machine U\nstates u\nevents\ninitial u\n")};
  CHECK_FALSE(check_external_backup(ms, useless, 1).ok);
}
