#include "fsmfusion/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "fsmfusion/error.hpp"

namespace fsmfusion {

PartialTuple to_partial(std::span<const StateId> t) { return PartialTuple(t.begin(), t.end()); }

std::size_t missing_count(const PartialTuple& q) {
  return static_cast<std::size_t>(std::count(q.begin(), q.end(), std::nullopt));
}

std::size_t hamming(std::span<const StateId> a, const PartialTuple& q) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!q[i] || *q[i] != a[i]) ++d;
  return d;
}

int derive_table_count(double gamma, int k, double delta, int max_tables) {
  if (gamma <= 0) return std::max(1, max_tables);
  double hit = std::pow(gamma, k);
  if (hit >= 1) return 1;
  double l = std::ceil(std::log(delta) / std::log1p(-hit));
  if (!(l < static_cast<double>(max_tables))) return std::max(1, max_tables);
  return std::max(1, static_cast<int>(l));
}

QueryStats& QueryStats::operator+=(const QueryStats& o) {
  queries += o.queries;
  tables_probed += o.tables_probed;
  tables_skipped += o.tables_skipped;
  lsh_candidates += o.lsh_candidates;
  fallbacks += o.fallbacks;
  return *this;
}

RecoveryIndex::RecoveryIndex(const RcpIndex& idx, std::span<const BlockPartition> fusions, const LshOptions& opts)
    : idx_(idx), fusions_(fusions.begin(), fusions.end()) {
  const std::size_t n = idx_.arity();
  if (n == 0) throw ValidationError("recovery index needs at least one primary");
  if (!(opts.delta > 0 && opts.delta < 1)) throw ValidationError("delta must lie in (0, 1)");

  for (const auto& p : fusions_)
    if (p.rcp_tag != idx_.tag() || p.block_of.size() != idx_.size())
      throw InconsistencyError("fusion '" + p.machine_name + "' is over a different product");

  std::size_t s = 1;
  for (const auto& m : idx_.primaries()) s = std::max(s, m.num_states());
  while ((std::size_t{1} << width_) < s) ++width_;

  delta_ = opts.delta;
  const int dist = opts.distance >= 0 ? opts.distance : static_cast<int>(fusions_.size());
  gamma_ = 1.0 - static_cast<double>(dist) / static_cast<double>(n);

  if (!opts.coordinate_sets.empty()) {
    for (auto c : opts.coordinate_sets) {
      if (c.empty()) throw ValidationError("empty coordinate set");
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
      if (c.back() >= n) throw ValidationError("coordinate out of range");
      k_ = std::max(k_, static_cast<int>(c.size()));
      coords_.push_back(std::move(c));
    }
  } else {
    k_ = opts.k > 0 ? opts.k : static_cast<int>((n + 1) / 2);
    if (static_cast<std::size_t>(k_) > n) throw ValidationError("k exceeds the number of primaries");
    int L = opts.L > 0 ? opts.L : derive_table_count(gamma_, k_, delta_, opts.max_tables);
    // Coordinates are drawn independently, so a table misses a given
    // coordinate set of size d with probability exactly (1 - d/n)^k.
    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int j = 0; j < L; ++j) {
      std::set<std::size_t> c;
      for (int i = 0; i < k_; ++i) c.insert(pick(rng));
      coords_.emplace_back(c.begin(), c.end());
    }
  }

  members_.resize(fusions_.size());
  tables_.resize(fusions_.size());
  for (std::size_t f = 0; f < fusions_.size(); ++f) {
    const auto& p = fusions_[f];
    members_[f].resize(p.num_blocks);
    for (StateId r = 0; r < idx_.size(); ++r) members_[f][p.block_of[r]].push_back(r);
    tables_[f].assign(p.num_blocks, std::vector<Buckets>(coords_.size()));
    for (StateId r = 0; r < idx_.size(); ++r)
      for (std::size_t j = 0; j < coords_.size(); ++j)
        tables_[f][p.block_of[r]][j][bucket_key(j, idx_.tuple_of(r))].push_back(r);
  }
}

std::size_t RecoveryIndex::stored_points() const {
  std::size_t total = 0;
  for (const auto& per : members_)
    for (const auto& m : per) total += m.size();
  return total;
}

std::size_t RecoveryIndex::approx_bytes() const {
  return (stored_points() * arity() * static_cast<std::size_t>(width_) + 7) / 8;
}

const std::vector<StateId>& RecoveryIndex::members(std::size_t fusion, StateId state) const {
  return members_.at(fusion).at(state);
}

bool RecoveryIndex::contains(std::size_t fusion, StateId state, std::span<const StateId> tuple) const {
  auto r = idx_.state_of(tuple);
  return r && fusions_.at(fusion).block_of[*r] == state;
}

std::string RecoveryIndex::bucket_key(std::size_t table, std::span<const StateId> tuple) const {
  std::string key;
  for (auto c : coords_.at(table))
    for (int b = width_ - 1; b >= 0; --b) key.push_back(((tuple[c] >> b) & 1u) ? '1' : '0');
  return key;
}

std::string RecoveryIndex::key_of(std::size_t table, const PartialTuple& q) const {
  std::string key;
  for (auto c : coords_[table]) {
    if (!q[c]) return {};
    for (int b = width_ - 1; b >= 0; --b) key.push_back(((*q[c] >> b) & 1u) ? '1' : '0');
  }
  return key;
}

std::vector<StateId> RecoveryIndex::exhaustive_query(std::size_t fusion, StateId state, const PartialTuple& q,
                                                     std::size_t d) const {
  if (q.size() != arity()) throw ValidationError("query has the wrong number of coordinates");
  std::vector<StateId> out;
  for (auto r : members(fusion, state))
    if (hamming(idx_.tuple_of(r), q) <= d) out.push_back(r);
  return out;
}

std::vector<StateId> RecoveryIndex::lsh_query(std::size_t fusion, StateId state, const PartialTuple& q,
                                              std::size_t d, QueryStats* stats) const {
  if (q.size() != arity()) throw ValidationError("query has the wrong number of coordinates");
  const auto& tabs = tables_.at(fusion).at(state);
  QueryStats local;
  local.queries = 1;
  std::vector<StateId> hits;
  for (std::size_t j = 0; j < tabs.size(); ++j) {
    auto key = key_of(j, q);
    if (key.empty()) {
      ++local.tables_skipped;
      continue;
    }
    ++local.tables_probed;
    auto it = tabs[j].find(key);
    if (it == tabs[j].end()) continue;
    local.lsh_candidates += it->second.size();
    hits.insert(hits.end(), it->second.begin(), it->second.end());
  }
  std::vector<StateId> out;
  if (local.tables_probed == 0) {
    ++local.fallbacks;
    out = exhaustive_query(fusion, state, q, d);
  } else {
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    for (auto r : hits)
      if (hamming(idx_.tuple_of(r), q) <= d) out.push_back(r);
  }
  if (stats) *stats += local;
  return out;
}

RecoveryIndex build_index(const RcpIndex& idx, const FusionSet& fs, const LshOptions& opts) {
  auto parts = fs.partitions();
  LshOptions o = opts;
  if (o.distance < 0) o.distance = fs.f;
  return RecoveryIndex(idx, parts, o);
}

bool detect_byz(const RecoveryIndex& ri, std::span<const StateId> fusion_states, std::span<const StateId> r) {
  if (fusion_states.size() != ri.num_fusions()) throw ValidationError("expected one state per fusion");
  if (r.size() != ri.arity()) throw ValidationError("tuple has the wrong number of coordinates");
  for (std::size_t j = 0; j < fusion_states.size(); ++j) {
    if (fusion_states[j] >= ri.num_states(j)) return true;
    if (!ri.contains(j, fusion_states[j], r)) return true;
  }
  return false;
}

namespace {

std::vector<StateId> intersect(std::vector<std::vector<StateId>> sets) {
  if (sets.empty()) return {};
  std::vector<StateId> acc = std::move(sets.front());
  for (std::size_t i = 1; i < sets.size() && !acc.empty(); ++i) {
    std::vector<StateId> next;
    std::set_intersection(acc.begin(), acc.end(), sets[i].begin(), sets[i].end(), std::back_inserter(next));
    acc = std::move(next);
  }
  return acc;
}

Tuple tuple_at(const RecoveryIndex& ri, StateId r) {
  auto t = ri.rcp().tuple_of(r);
  return Tuple(t.begin(), t.end());
}

}  // namespace

Tuple correct_crash(const RecoveryIndex& ri, std::span<const FusionReading> available, const PartialTuple& r,
                    QueryStats* stats) {
  if (r.size() != ri.arity()) throw ValidationError("tuple has the wrong number of coordinates");
  for (const auto& a : available)
    if (a.fusion >= ri.num_fusions() || a.state >= ri.num_states(a.fusion))
      throw ValidationError("fusion reading out of range");
  const std::size_t t = missing_count(r);

  if (available.empty()) {
    // Nothing to consult but the primaries themselves.
    std::vector<StateId> match;
    for (StateId s = 0; s < ri.rcp().size(); ++s)
      if (hamming(ri.rcp().tuple_of(s), r) <= t) match.push_back(s);
    if (match.size() != 1) throw RecoveryError("surviving primaries do not determine the state");
    return tuple_at(ri, match.front());
  }

  std::vector<std::vector<StateId>> d;
  for (const auto& a : available) d.push_back(ri.lsh_query(a.fusion, a.state, r, t, stats));
  auto hit = intersect(std::move(d));
  if (hit.size() == 1) return tuple_at(ri, hit.front());

  if (stats) ++stats->fallbacks;
  d.clear();
  for (const auto& a : available) d.push_back(ri.exhaustive_query(a.fusion, a.state, r, t));
  hit = intersect(std::move(d));
  if (hit.size() == 1) return tuple_at(ri, hit.front());
  if (hit.empty()) throw RecoveryError("no tuple is consistent with the surviving machines");
  throw RecoveryError("survivors are consistent with " + std::to_string(hit.size()) +
                      " tuples; more faults than the fusion can correct");
}

namespace {

std::optional<ByzResult> vote(const RecoveryIndex& ri, const std::vector<std::vector<StateId>>& d,
                              std::span<const StateId> r, std::size_t threshold) {
  std::map<StateId, std::size_t> votes;
  for (const auto& s : d)
    for (auto g : s) ++votes[g];
  std::optional<ByzResult> best;
  std::size_t winners = 0;
  for (auto& [g, v] : votes) {
    auto t = ri.rcp().tuple_of(g);
    for (std::size_t i = 0; i < r.size(); ++i)
      if (t[i] == r[i]) ++v;
    if (v >= threshold) {
      ++winners;
      best = ByzResult{tuple_at(ri, g), v, threshold};
    }
  }
  if (winners > 1) throw RecoveryError("several tuples reach the vote threshold; more liars than the budget");
  return best;
}

}  // namespace

ByzResult correct_byz(const RecoveryIndex& ri, std::span<const StateId> fusion_states, std::span<const StateId> r,
                      QueryStats* stats) {
  if (fusion_states.size() != ri.num_fusions()) throw ValidationError("expected one state per fusion");
  if (r.size() != ri.arity()) throw ValidationError("tuple has the wrong number of coordinates");
  const std::size_t half = ri.num_fusions() / 2;
  const std::size_t threshold = ri.arity() + half;
  const auto q = to_partial(r);

  auto gather = [&](bool exhaustive) {
    std::vector<std::vector<StateId>> d;
    for (std::size_t j = 0; j < fusion_states.size(); ++j) {
      // A state outside the fusion's range is a lie that votes for nothing.
      if (fusion_states[j] >= ri.num_states(j)) continue;
      d.push_back(exhaustive ? ri.exhaustive_query(j, fusion_states[j], q, half)
                             : ri.lsh_query(j, fusion_states[j], q, half, stats));
    }
    return d;
  };

  if (auto res = vote(ri, gather(false), r, threshold)) return *res;
  if (stats) ++stats->fallbacks;
  if (auto res = vote(ri, gather(true), r, threshold)) return *res;
  throw RecoveryError("no tuple reaches the vote threshold; more liars than the budget");
}

}  // namespace fsmfusion
