#include <doctest.h>

#include <bit>
#include <cmath>

#include "fixtures.hpp"
#include "fsmfusion/error.hpp"
#include "fsmfusion/recovery.hpp"

using namespace fsmfusion;
using fixtures::r;

namespace {

struct Parity {
  std::vector<Machine> ms = fixtures::ABC();
  RcpIndex idx = rcp(ms);
  std::vector<BlockPartition> fusions{map_states(idx, fixtures::F1()), map_states(idx, fixtures::F2())};

  RecoveryIndex index(LshOptions o = {}) const {
    if (o.distance < 0) o.distance = 2;
    return RecoveryIndex(idx, fusions, o);
  }
  Tuple tuple(const std::string& label) const {
    auto t = idx.tuple_of(r(idx, label));
    return Tuple(t.begin(), t.end());
  }
  Tuple at(StateId s) const {
    auto t = idx.tuple_of(s);
    return Tuple(t.begin(), t.end());
  }
  StateId fstate(std::size_t j, const std::string& name) const { return *fusions[j].find_label(name); }
  StateId fstate_of(std::size_t j, StateId s) const { return fusions[j].block_of[s]; }
};

std::string show(const RcpIndex& idx, const Tuple& t) { return idx.tuple_label(*idx.state_of(t)); }

}  // namespace

TEST_CASE("partial tuples and distance") {
  PartialTuple q{0, std::nullopt, 1};
  CHECK(missing_count(q) == 1);
  CHECK(hamming(Tuple{0, 0, 1}, q) == 1);
  CHECK(hamming(Tuple{1, 0, 0}, q) == 3);
  CHECK(to_partial(Tuple{2, 3}) == PartialTuple{2, 3});
}

TEST_CASE("table count") {
  CHECK(derive_table_count(1.0 / 3.0, 2, 0.1) == 20);
  CHECK(derive_table_count(2.0 / 3.0, 3, 0.1) == 7);
  CHECK(derive_table_count(1.0, 4, 0.1) == 1);
  CHECK(derive_table_count(0.0, 2, 0.1, 9) == 9);
  for (double g : {0.2, 0.5, 0.8})
    for (int k = 1; k <= 4; ++k) {
      int L = derive_table_count(g, k, 0.1, 100000);
      CHECK(std::pow(1 - std::pow(g, k), L) <= 0.1 + 1e-12);
      CHECK(std::pow(1 - std::pow(g, k), L - 1) > 0.1);
    }
}

TEST_CASE("index construction") {
  Parity p;
  auto ri = p.index();
  CHECK(ri.k() == 2);
  CHECK(ri.L() == 20);
  CHECK(ri.gamma() == doctest::Approx(1.0 / 3.0));
  CHECK(ri.stored_points() == 8 * 2);
  CHECK(ri.num_states(0) == 2);
  CHECK(ri.num_states(1) == 4);
  for (const auto& c : ri.coordinate_sets()) {
    CHECK(std::is_sorted(c.begin(), c.end()));
    CHECK(c.back() < 3);
  }
  LshOptions bad;
  bad.k = 4;
  CHECK_THROWS_AS(p.index(bad), ValidationError);
  bad = {};
  bad.delta = 1.0;
  CHECK_THROWS_AS(p.index(bad), ValidationError);
}

TEST_CASE("explicit coordinate sets bucket like the worked example") {
  Parity p;
  LshOptions o;
  o.coordinate_sets = {{0, 1}, {0, 2}};
  auto ri = p.index(o);
  CHECK(ri.L() == 2);
  auto t = p.tuple("r2");  // a1 b0 c1
  CHECK(ri.bucket_key(0, t) == "10");
  CHECK(ri.bucket_key(1, t) == "11");

  auto f10 = p.fstate(0, "f1_0");
  auto q = to_partial(p.tuple("r1"));  // a0 b1 c0
  auto hits = ri.lsh_query(0, f10, q, 2);
  std::set<StateId> got(hits.begin(), hits.end());
  CHECK(got == fixtures::set_of(p.idx, {"r5", "r0"}));
  auto all = ri.exhaustive_query(0, f10, q, 2);
  CHECK(std::set<StateId>(all.begin(), all.end()) == fixtures::set_of(p.idx, {"r5", "r0", "r4"}));
}

TEST_CASE("query basics") {
  Parity p;
  auto ri = p.index();
  for (StateId s = 0; s < p.idx.size(); ++s) {
    auto t = p.idx.tuple_of(s);
    for (std::size_t j = 0; j < 2; ++j) {
      auto fs = p.fstate_of(j, s);
      CHECK(ri.lsh_query(j, fs, to_partial(t), 0) == std::vector<StateId>{s});
      for (std::size_t d = 0; d <= 3; ++d) {
        auto l = ri.lsh_query(j, fs, to_partial(t), d);
        auto e = ri.exhaustive_query(j, fs, to_partial(t), d);
        CHECK(std::includes(e.begin(), e.end(), l.begin(), l.end()));
      }
    }
  }
  // Every table touches a missing slot: exhaustive fallback.
  LshOptions o;
  o.coordinate_sets = {{0}};
  auto r1 = p.index(o);
  QueryStats st;
  auto out = r1.lsh_query(0, 0, PartialTuple{std::nullopt, 0, 0}, 1, &st);
  CHECK(st.fallbacks == 1);
  CHECK(st.tables_skipped == 1);
  CHECK(out == r1.exhaustive_query(0, 0, PartialTuple{std::nullopt, 0, 0}, 1));
}

TEST_CASE("crash walkthrough") {
  Parity p;
  auto ri = p.index();
  PartialTuple q{p.ms[0].state_id("a0"), std::nullopt, std::nullopt};
  std::vector<FusionReading> av{{0, p.fstate(0, "f1_0")}, {1, p.fstate(1, "f2_0")}};
  auto t = correct_crash(ri, av, q);
  CHECK(show(p.idx, t) == "(a0,b0,c0)");
  CHECK(t == p.tuple("r0"));
  // Nothing missing: the tuple itself.
  CHECK(correct_crash(ri, av, to_partial(p.tuple("r0"))) == p.tuple("r0"));
}

TEST_CASE("byzantine detection walkthrough") {
  Parity p;
  auto ri = p.index();
  std::vector<StateId> fs{p.fstate(0, "f1_1"), p.fstate(1, "f2_1")};
  auto t = Tuple{p.ms[0].state_id("a1"), p.ms[1].state_id("b1"), p.ms[2].state_id("c0")};
  CHECK(detect_byz(ri, fs, t));
  for (StateId s = 0; s < p.idx.size(); ++s) {
    auto tt = p.idx.tuple_of(s);
    std::vector<StateId> honest{p.fstate_of(0, s), p.fstate_of(1, s)};
    CHECK_FALSE(detect_byz(ri, honest, tt));
  }
  std::vector<StateId> out_of_range{7, 0};
  CHECK(detect_byz(ri, out_of_range, t));
}

TEST_CASE("byzantine correction walkthrough") {
  Parity p;
  auto ri = p.index();
  std::vector<StateId> fs{p.fstate(0, "f1_0"), p.fstate(1, "f2_0")};
  auto res = correct_byz(ri, fs, p.tuple("r1"));
  CHECK(res.tuple == p.tuple("r0"));
  CHECK(res.votes == 4);
  CHECK(res.threshold == 4);

  std::vector<StateId> honest{p.fstate_of(0, 3), p.fstate_of(1, 3)};
  auto same = correct_byz(ri, honest, p.at(3));
  CHECK(same.tuple == p.at(3));
  CHECK(same.votes == 5);
}

TEST_CASE("every crash pattern of up to two machines is corrected") {
  Parity p;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    LshOptions o;
    o.seed = seed;
    auto ri = p.index(o);
    std::size_t cases = 0;
    for (StateId s = 0; s < p.idx.size(); ++s)
      for (unsigned mask = 0; mask < 32; ++mask) {
        if (std::popcount(mask) > 2) continue;
        PartialTuple q;
        for (std::size_t i = 0; i < 3; ++i)
          q.push_back(mask & (1u << i) ? std::nullopt : std::optional<StateId>(p.idx.tuple_of(s)[i]));
        std::vector<FusionReading> av;
        for (std::size_t j = 0; j < 2; ++j)
          if (!(mask & (1u << (3 + j)))) av.push_back({j, p.fstate_of(j, s)});
        CHECK(correct_crash(ri, av, q) == p.at(s));
        ++cases;
      }
    CHECK(cases == 8 * 16);
  }
}

TEST_CASE("three crashes exceed the budget somewhere") {
  Parity p;
  auto ri = p.index();
  std::size_t ambiguous = 0;
  for (StateId s = 0; s < p.idx.size(); ++s)
    for (unsigned mask = 0; mask < 32; ++mask) {
      if (std::popcount(mask) != 3) continue;
      PartialTuple q;
      for (std::size_t i = 0; i < 3; ++i)
        q.push_back(mask & (1u << i) ? std::nullopt : std::optional<StateId>(p.idx.tuple_of(s)[i]));
      std::vector<FusionReading> av;
      for (std::size_t j = 0; j < 2; ++j)
        if (!(mask & (1u << (3 + j)))) av.push_back({j, p.fstate_of(j, s)});
      Tuple got;
      try {
        got = correct_crash(ri, av, q);
      } catch (const RecoveryError&) {
        ++ambiguous;
        continue;
      }
      CHECK(got == p.at(s));
    }
  CHECK(ambiguous > 0);
}

namespace {

/// Every way for up to `liars` of the five machines to report a wrong state
/// from their own state set, for one true product state.
template <class Visit>
void for_each_lie(const Parity& p, StateId s, std::size_t liars, Visit&& visit) {
  Tuple truth = p.at(s);
  std::vector<StateId> ftruth{p.fstate_of(0, s), p.fstate_of(1, s)};
  auto sizes = std::vector<std::size_t>{2, 2, 2, p.fusions[0].num_blocks, p.fusions[1].num_blocks};
  std::function<void(std::size_t, std::size_t, Tuple&, std::vector<StateId>&)> rec =
      [&](std::size_t i, std::size_t used, Tuple& t, std::vector<StateId>& f) {
        if (i == 5) {
          visit(t, f, used);
          return;
        }
        rec(i + 1, used, t, f);
        if (used == liars) return;
        StateId& slot = i < 3 ? t[i] : f[i - 3];
        StateId keep = slot;
        for (StateId v = 0; v < sizes[i]; ++v) {
          if (v == keep) continue;
          slot = v;
          rec(i + 1, used + 1, t, f);
        }
        slot = keep;
      };
  rec(0, 0, truth, ftruth);
}

}  // namespace

TEST_CASE("detection finds every lie of up to two machines") {
  Parity p;
  auto ri = p.index();
  std::size_t lies = 0;
  for (StateId s = 0; s < p.idx.size(); ++s)
    for_each_lie(p, s, 2, [&](const Tuple& t, const std::vector<StateId>& f, std::size_t used) {
      CHECK(detect_byz(ri, f, t) == (used > 0));
      lies += used > 0;
    });
  CHECK(lies > 0);
}

TEST_CASE("correction with one liar always returns the truth") {
  Parity p;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    LshOptions o;
    o.seed = seed;
    auto ri = p.index(o);
    QueryStats st;
    for (StateId s = 0; s < p.idx.size(); ++s)
      for_each_lie(p, s, 1, [&](const Tuple& t, const std::vector<StateId>& f, std::size_t) {
        auto res = correct_byz(ri, f, t, &st);
        CHECK(res.tuple == p.at(s));
        CHECK(res.votes >= 4);
      });
    CHECK(st.queries > 0);
  }
}

TEST_CASE("correction inputs are validated") {
  Parity p;
  auto ri = p.index();
  std::vector<StateId> one{0};
  CHECK_THROWS_AS(correct_byz(ri, one, p.at(0)), ValidationError);
  std::vector<FusionReading> bad{{5, 0}};
  CHECK_THROWS_AS(correct_crash(ri, bad, to_partial(p.at(0))), ValidationError);
}

TEST_CASE("build_index uses the fusion budget as the distance") {
  auto ms = fixtures::ABC();
  auto idx = rcp(ms);
  FusionOptions fo;
  fo.delta_states = 1;
  fo.delta_events = 1;
  auto fs = gen_fusion(idx, 2, fo);
  auto ri = build_index(idx, fs);
  CHECK(ri.gamma() == doctest::Approx(1.0 / 3.0));
  CHECK(ri.num_fusions() == 2);
  CHECK(ri.stored_points() == idx.size() * 2);
  CHECK(ri.approx_bytes() > 0);
}
