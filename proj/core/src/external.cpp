#include <algorithm>

#include "fsmfusion/error.hpp"
#include "fsmfusion/fusion.hpp"

namespace fsmfusion {

ExternalReport check_external_backup(std::span<const Machine> primaries, std::span<const Machine> externals, int f,
                                     std::size_t state_limit) {
  if (f < 0) throw ValidationError("fault budget must be non-negative");
  auto idx = rcp(primaries, state_limit);

  // Joint product of the primaries' product and every external machine.
  std::string rname = "R";
  auto taken = [&](const std::string& n) {
    return std::any_of(externals.begin(), externals.end(), [&](const Machine& m) { return m.name() == n; });
  };
  while (taken(rname)) rname += "'";
  std::vector<Machine> joint{idx.rcp().renamed(rname)};
  joint.insert(joint.end(), externals.begin(), externals.end());
  auto big = rcp(joint, state_limit);

  ExternalReport rep;
  rep.joint_states = big.size();
  rep.related.assign(externals.size(), std::vector<std::vector<std::uint32_t>>(idx.size()));
  for (StateId b = 0; b < big.size(); ++b) {
    auto t = big.tuple_of(b);
    for (std::size_t j = 0; j < externals.size(); ++j) rep.related[j][t[0]].push_back(t[j + 1]);
  }
  for (auto& per : rep.related)
    for (auto& s : per) {
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
    }

  FaultGraph g = build_fault_graph(idx, primary_partitions(idx));
  for (std::size_t j = 0; j < externals.size(); ++j) {
    g.add_relation(externals[j].name(), rep.related[j]);
    for (StateId r = 0; r < idx.size(); ++r) {
      const auto& s = rep.related[j][r];
      if (s.size() < 2) continue;
      Ambiguity a;
      a.machine = externals[j].name();
      a.rcp_state = r;
      for (auto x : s) a.states.push_back(externals[j].state_name(x));
      rep.ambiguities.push_back(std::move(a));
    }
  }
  rep.dmin = dmin(g);
  rep.ok = rep.dmin == kInfiniteDistance || rep.dmin > static_cast<std::uint32_t>(f);
  return rep;
}

}  // namespace fsmfusion
