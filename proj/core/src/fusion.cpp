#include "fsmfusion/fusion.hpp"

#include <algorithm>
#include <limits>

#include "fsmfusion/error.hpp"

namespace fsmfusion {

namespace {

void sort_unique(std::vector<BlockPartition>& v) {
  std::sort(v.begin(), v.end(), canonical_less);
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

template <class F>
std::size_t min_over(const std::vector<BlockPartition>& v, F&& key) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (const auto& p : v) best = std::min<std::size_t>(best, key(p));
  return best;
}

std::size_t cap_frontier(std::vector<BlockPartition>& v, std::size_t cap) {
  if (cap == 0 || v.size() <= cap) return 0;
  std::size_t dropped = v.size() - cap;
  v.resize(cap);
  return dropped;
}

std::string backup_name(std::size_t i) { return "F" + std::to_string(i + 1); }

Backup make_backup(const RcpIndex& idx, BlockPartition p, std::string name) {
  p.machine_name = name;
  std::string prefix = name;
  for (auto& ch : prefix) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  prefix += '_';
  Machine m = to_machine(idx, p, name, prefix);
  auto events = m.events();
  p.labels = m.state_names();
  return {std::move(m), std::move(p), std::move(events)};
}

}  // namespace

std::vector<BlockPartition> FusionSet::partitions() const {
  std::vector<BlockPartition> out;
  for (const auto& b : backups) out.push_back(b.partition);
  return out;
}

std::vector<Machine> FusionSet::machines() const {
  std::vector<Machine> out;
  for (const auto& b : backups) out.push_back(b.machine);
  return out;
}

std::vector<BlockPartition> primary_partitions(const RcpIndex& idx) {
  std::vector<BlockPartition> out;
  for (const auto& p : idx.primaries()) out.push_back(map_states(idx, p));
  return out;
}

FusionSet gen_fusion(const RcpIndex& idx, int f, const FusionOptions& opts) {
  if (f < 0) throw ValidationError("fault budget must be non-negative");
  if (opts.delta_states < 0 || opts.delta_events < 0) throw ValidationError("reduction parameters must be non-negative");

  FusionSet fs;
  fs.f = f;
  fs.params = opts;
  FaultGraph g = build_fault_graph(idx, primary_partitions(idx));
  fs.dmin_before = dmin(g);

  for (int i = 0; i < f; ++i) {
    IterationTrace tr;
    tr.dmin_before = dmin(g);
    tr.weakest = weakest_edges(g);
    const auto& weak = tr.weakest;
    auto keep = [&](const BlockPartition& c) { return covers_all(c, weak); };

    std::vector<BlockPartition> frontier{idx.singletons()};

    // A candidate with no qualifying successor survives the round when it
    // already meets the round's target, since one merge can drop several states.
    for (int j = 0; j < opts.delta_states; ++j) {
      const std::size_t target = idx.size() - std::min<std::size_t>(idx.size(), j + 1);
      std::vector<BlockPartition> next;
      bool progressed = false;
      for (const auto& m : frontier) {
        auto r = reduce_state(idx, m, keep);
        progressed |= !r.empty();
        if (r.empty() && m.num_blocks <= target) next.push_back(m);
        next.insert(next.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
      }
      if (!progressed) next.clear();
      sort_unique(next);
      if (next.empty()) {
        tr.state_exit_early = true;
        break;
      }
      tr.truncated += cap_frontier(next, opts.frontier_cap);
      tr.state_rounds.push_back(next.size());
      frontier = std::move(next);
    }

    tr.min_states = min_over(frontier, [](const BlockPartition& p) { return p.num_blocks; });

    const std::size_t sigma = idx.sigma().size();
    for (int j = 0; j < opts.delta_events; ++j) {
      const std::size_t target = sigma - std::min<std::size_t>(sigma, j + 1);
      std::vector<BlockPartition> next;
      bool progressed = false;
      for (const auto& m : frontier) {
        bool any = false;
        for (auto& r : reduce_event(idx, m))
          if (keep(r.partition)) {
            next.push_back(std::move(r.partition));
            any = true;
          }
        progressed |= any;
        if (!any && acting_events(idx, m).size() <= target) next.push_back(m);
      }
      if (!progressed) next.clear();
      sort_unique(next);
      if (next.empty()) {
        tr.event_exit_early = true;
        break;
      }
      tr.truncated += cap_frontier(next, opts.frontier_cap);
      tr.event_rounds.push_back(next.size());
      frontier = std::move(next);
    }

    tr.min_events = min_over(frontier, [&](const BlockPartition& p) { return acting_events(idx, p).size(); });

    BlockPartition chosen = frontier.front();
    for (;;) {
      auto c = reduce_state(idx, chosen, keep);
      if (c.empty()) break;
      chosen = std::move(c.front());
      ++tr.minimality_steps;
    }

    if (tr.truncated > 0)
      fs.warnings.push_back("iteration " + std::to_string(i + 1) + ": frontier truncated, " +
                            std::to_string(tr.truncated) + " candidates dropped");
    auto b = make_backup(idx, std::move(chosen), backup_name(fs.backups.size()));
    g.add(b.partition);
    fs.backups.push_back(std::move(b));
    fs.trace.push_back(std::move(tr));
  }
  fs.dmin_after = dmin(g);
  return fs;
}

FusionSet gen_fusion(std::span<const Machine> primaries, int f, const FusionOptions& opts) {
  auto idx = rcp(primaries, opts.state_limit);
  return gen_fusion(idx, f, opts);
}

std::uint32_t verify_fusion(const RcpIndex& idx, const FusionSet& fs) {
  auto parts = primary_partitions(idx);
  for (const auto& b : fs.backups) parts.push_back(map_states(idx, b.machine));
  return dmin(build_fault_graph(idx, parts));
}

FusionSet inc_fusion(std::span<const Machine> primaries, int f, const FusionOptions& opts) {
  if (primaries.empty()) throw ValidationError("no primaries");
  if (primaries.size() == 1) return gen_fusion(primaries, f, opts);
  if (f < 0) throw ValidationError("fault budget must be non-negative");

  std::vector<IncRound> rounds;
  std::vector<std::string> warnings;
  Machine acc = primaries[0];
  FusionSet last;
  for (std::size_t i = 1; i < primaries.size(); ++i) {
    std::vector<Machine> n{acc, primaries[i]};
    auto idx = rcp(n, opts.state_limit);
    last = gen_fusion(idx, f, opts);
    IncRound r;
    r.inputs = {acc.name(), primaries[i].name()};
    r.rcp_states = idx.size();
    for (const auto& b : last.backups) r.backup_shapes.emplace_back(b.machine.num_states(), b.events.size());
    rounds.push_back(std::move(r));
    for (auto& w : last.warnings) warnings.push_back("round " + std::to_string(i) + ": " + w);
    if (i + 1 == primaries.size()) break;
    if (last.backups.empty()) {
      // f == 0: nothing to carry forward.
      acc = primaries[i];
      continue;
    }
    auto machines = last.machines();
    auto inner = rcp(machines, opts.state_limit);
    acc = inner.rcp().renamed("RCP" + std::to_string(i));
  }

  // Re-express the final backups over the full product and check them there.
  auto full = rcp(primaries, opts.state_limit);
  FusionSet fs;
  fs.f = f;
  fs.params = opts;
  fs.rounds = std::move(rounds);
  fs.warnings = std::move(warnings);
  FaultGraph g = build_fault_graph(full, primary_partitions(full));
  fs.dmin_before = dmin(g);
  for (std::size_t k = 0; k < last.backups.size(); ++k) {
    auto p = map_states(full, last.backups[k].machine);
    auto b = make_backup(full, std::move(p), backup_name(k));
    g.add(b.partition);
    fs.backups.push_back(std::move(b));
  }
  fs.dmin_after = dmin(g);
  if (f > 0 && fs.dmin_after <= static_cast<std::uint32_t>(f))
    throw InconsistencyError("incremental fusion failed verification on the full product (dmin " +
                             std::to_string(fs.dmin_after) + ")");
  return fs;
}

Decomposition event_decompose(const Machine& m, int e) {
  if (e < 0) throw ValidationError("event reduction must be non-negative");
  std::vector<Machine> one{m};
  auto idx = rcp(one);
  std::vector<BlockPartition> frontier{idx.singletons()};
  for (int j = 0; j < e; ++j) {
    std::vector<BlockPartition> next;
    for (const auto& p : frontier)
      for (auto& r : reduce_event(idx, p)) next.push_back(std::move(r.partition));
    sort_unique(next);
    frontier = std::move(next);
  }

  Decomposition d;
  d.frontier = frontier.size();
  std::vector<const BlockPartition*> chosen;
  for (StateId u = 0; u < idx.size() && d.exists; ++u) {
    for (StateId v = u + 1; v < idx.size(); ++v) {
      bool done = std::any_of(chosen.begin(), chosen.end(), [&](auto* p) { return covers(*p, {u, v}); });
      if (done) continue;
      auto it = std::find_if(frontier.begin(), frontier.end(), [&](const auto& p) { return covers(p, {u, v}); });
      if (it == frontier.end()) {
        d.exists = false;
        break;
      }
      chosen.push_back(&*it);
    }
  }
  if (!d.exists) return d;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    std::string name = m.name() + "_" + std::to_string(i + 1);
    d.parts.push_back(make_backup(idx, *chosen[i], name));
  }
  return d;
}

}  // namespace fsmfusion
