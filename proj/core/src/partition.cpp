#include "fsmfusion/partition.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <unordered_set>

#include "fsmfusion/error.hpp"

namespace fsmfusion {

namespace {

// Transition table of a closed partition, one row per block.
struct Quotient {
  std::uint32_t blocks = 0;
  std::size_t events = 0;
  std::vector<std::uint32_t> next;  // blocks * events

  std::uint32_t at(std::uint32_t b, std::size_t e) const { return next[b * events + e]; }
};

Quotient quotient(const RcpIndex& idx, const BlockPartition& p) {
  Quotient q;
  q.blocks = p.num_blocks;
  q.events = idx.sigma().size();
  q.next.assign(static_cast<std::size_t>(q.blocks) * q.events, 0);
  std::vector<bool> seen(q.blocks, false);
  for (StateId s = 0; s < idx.size(); ++s) {
    auto b = p.block_of[s];
    if (seen[b]) continue;
    seen[b] = true;
    for (std::size_t e = 0; e < q.events; ++e) q.next[b * q.events + e] = p.block_of[idx.next(s, e)];
  }
  return q;
}

class UnionFind {
 public:
  explicit UnionFind(std::uint32_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (a < b) std::swap(a, b);
    parent_[a] = b;
    return true;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

// Congruence closure over the quotient: after seeding merges, keeps merging
// successors until every event respects the classes. Returns the class of
// every quotient block, canonically numbered, and the class count.
class Closure {
 public:
  explicit Closure(const Quotient& q) : q_(q), uf_(q.blocks) {}

  void merge(std::uint32_t a, std::uint32_t b) {
    if (uf_.unite(a, b)) pending_.emplace_back(a, b);
  }

  std::uint32_t run(std::vector<std::uint32_t>& out) {
    while (!pending_.empty()) {
      auto [a, b] = pending_.back();
      pending_.pop_back();
      for (std::size_t e = 0; e < q_.events; ++e) merge(q_.at(a, e), q_.at(b, e));
    }
    out.assign(q_.blocks, 0);
    std::vector<std::uint32_t> renum(q_.blocks, ~0u);
    std::uint32_t count = 0;
    for (std::uint32_t b = 0; b < q_.blocks; ++b) {
      auto r = uf_.find(b);
      if (renum[r] == ~0u) renum[r] = count++;
      out[b] = renum[r];
    }
    return count;
  }

 private:
  const Quotient& q_;
  UnionFind uf_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pending_;
};

// Lifts a class assignment of quotient blocks back to product states. Since
// quotient blocks are canonical (ordered by min state) and classes are
// numbered by min block, the result is already canonical.
BlockPartition lift(const BlockPartition& base, const std::vector<std::uint32_t>& cls, std::uint32_t count) {
  BlockPartition p;
  p.rcp_tag = base.rcp_tag;
  p.num_blocks = count;
  p.block_of.resize(base.block_of.size());
  for (std::size_t s = 0; s < base.block_of.size(); ++s) p.block_of[s] = cls[base.block_of[s]];
  return p;
}

void check_same(const BlockPartition& a, const BlockPartition& b) {
  if (a.rcp_tag != b.rcp_tag || a.block_of.size() != b.block_of.size())
    throw InconsistencyError("partitions '" + a.machine_name + "' and '" + b.machine_name +
                             "' are over different products");
}

void check_over(const RcpIndex& idx, const BlockPartition& p) {
  if (p.rcp_tag != idx.tag() || p.block_of.size() != idx.size())
    throw InconsistencyError("partition '" + p.machine_name + "' is over a different product");
}

}  // namespace

BlockPartition largest_consistent(const RcpIndex& idx, std::span<const StatePair> seeds) {
  return largest_consistent(idx, idx.singletons(), seeds);
}

BlockPartition largest_consistent(const RcpIndex& idx, const BlockPartition& base,
                                  std::span<const StatePair> seeds) {
  check_over(idx, base);
  Quotient q = quotient(idx, base);
  Closure c(q);
  for (auto [a, b] : seeds) {
    if (a >= idx.size() || b >= idx.size()) throw ValidationError("seed state out of range");
    c.merge(base.block_of[a], base.block_of[b]);
  }
  std::vector<std::uint32_t> cls;
  auto count = c.run(cls);
  return lift(base, cls, count);
}

bool is_closed(const RcpIndex& idx, const BlockPartition& p) {
  check_over(idx, p);
  const std::size_t E = idx.sigma().size();
  std::vector<std::uint32_t> image(static_cast<std::size_t>(p.num_blocks) * E, ~0u);
  for (StateId s = 0; s < idx.size(); ++s) {
    for (std::size_t e = 0; e < E; ++e) {
      auto& cell = image[p.block_of[s] * E + e];
      auto t = p.block_of[idx.next(s, e)];
      if (cell == ~0u)
        cell = t;
      else if (cell != t)
        return false;
    }
  }
  return true;
}

bool leq(const BlockPartition& p, const BlockPartition& q) {
  check_same(p, q);
  std::vector<std::uint32_t> img(q.num_blocks, ~0u);
  for (std::size_t s = 0; s < q.block_of.size(); ++s) {
    auto& cell = img[q.block_of[s]];
    if (cell == ~0u)
      cell = p.block_of[s];
    else if (cell != p.block_of[s])
      return false;
  }
  return true;
}

std::vector<Event> acting_events(const RcpIndex& idx, const BlockPartition& p) {
  check_over(idx, p);
  std::vector<Event> out;
  for (std::size_t e = 0; e < idx.sigma().size(); ++e) {
    for (StateId s = 0; s < idx.size(); ++s) {
      if (p.block_of[idx.next(s, e)] != p.block_of[s]) {
        out.push_back(idx.sigma()[e]);
        break;
      }
    }
  }
  return out;
}

std::vector<BlockPartition> maximal_elements(std::vector<BlockPartition> c) {
  std::sort(c.begin(), c.end(), canonical_less);
  c.erase(std::unique(c.begin(), c.end()), c.end());
  std::vector<BlockPartition> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < c.size() && !dominated; ++j)
      dominated = j != i && c[j].num_blocks > c[i].num_blocks && leq(c[i], c[j]);
    if (!dominated) out.push_back(c[i]);
  }
  return out;
}

std::vector<BlockPartition> reduce_state(const RcpIndex& idx, const BlockPartition& p,
                                         const std::function<bool(const BlockPartition&)>& keep) {
  check_over(idx, p);
  const std::uint32_t k = p.num_blocks;
  if (k < 2) return {};
  Quotient q = quotient(idx, p);

  // Close every block pair; remember which distinct candidate each pair produced.
  std::vector<std::vector<std::uint32_t>> classes;
  std::vector<std::uint32_t> counts;
  std::unordered_map<BlockPartition, std::uint32_t, BlockPartitionHash> seen;
  std::vector<std::uint32_t> pair_id(static_cast<std::size_t>(k) * k, 0);
  std::vector<std::uint32_t> cls;
  for (std::uint32_t i = 0; i < k; ++i) {
    for (std::uint32_t j = i + 1; j < k; ++j) {
      Closure c(q);
      c.merge(i, j);
      auto count = c.run(cls);
      BlockPartition key;
      key.rcp_tag = p.rcp_tag;
      key.block_of = cls;
      auto [it, fresh] = seen.emplace(std::move(key), static_cast<std::uint32_t>(classes.size()));
      if (fresh) {
        classes.push_back(cls);
        counts.push_back(count);
      }
      pair_id[i * k + j] = it->second;
    }
  }

  // A candidate is maximal iff every block pair it merges closes to itself;
  // any pair closing to something else yields a strictly finer candidate.
  std::vector<BlockPartition> out;
  for (std::uint32_t id = 0; id < classes.size(); ++id) {
    const auto& c = classes[id];
    std::vector<std::vector<std::uint32_t>> members(counts[id]);
    for (std::uint32_t b = 0; b < k; ++b) members[c[b]].push_back(b);
    bool maximal = true;
    for (const auto& m : members) {
      for (std::size_t x = 0; x < m.size() && maximal; ++x)
        for (std::size_t y = x + 1; y < m.size() && maximal; ++y)
          maximal = pair_id[m[x] * k + m[y]] == id;
      if (!maximal) break;
    }
    if (!maximal) continue;
    BlockPartition cand = lift(p, c, counts[id]);
    if (keep && !keep(cand)) continue;
    out.push_back(std::move(cand));
  }
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

std::vector<EventReduced> reduce_event(const RcpIndex& idx, const BlockPartition& p,
                                       std::span<const Event> sigma_p) {
  check_over(idx, p);
  Quotient q = quotient(idx, p);
  std::vector<BlockPartition> cands;
  std::vector<std::uint32_t> cls;
  for (Event ev : sigma_p) {
    auto it = std::lower_bound(idx.sigma().begin(), idx.sigma().end(), ev);
    if (it == idx.sigma().end() || *it != ev) continue;
    const std::size_t e = static_cast<std::size_t>(it - idx.sigma().begin());
    Closure c(q);
    for (std::uint32_t b = 0; b < q.blocks; ++b) c.merge(b, q.at(b, e));
    auto count = c.run(cls);
    cands.push_back(lift(p, cls, count));
  }
  std::vector<EventReduced> out;
  for (auto& m : maximal_elements(std::move(cands))) {
    auto ev = acting_events(idx, m);
    out.push_back({std::move(m), std::move(ev)});
  }
  return out;
}

std::vector<EventReduced> reduce_event(const RcpIndex& idx, const BlockPartition& p) {
  auto sigma_p = acting_events(idx, p);
  return reduce_event(idx, p, sigma_p);
}

std::vector<BlockPartition> enumerate_closed_partitions(const RcpIndex& idx, std::size_t max_states) {
  if (idx.size() > max_states)
    throw CapacityError("lattice enumeration is capped at " + std::to_string(max_states) + " product states");
  // Every closed partition is reachable from the singletons by successive
  // pair merges followed by closure.
  std::unordered_set<BlockPartition, BlockPartitionHash> seen;
  std::vector<BlockPartition> frontier{idx.singletons()};
  seen.insert(frontier.front());
  while (!frontier.empty()) {
    std::vector<BlockPartition> next;
    for (const auto& p : frontier) {
      Quotient q = quotient(idx, p);
      std::vector<std::uint32_t> cls;
      for (std::uint32_t i = 0; i < p.num_blocks; ++i)
        for (std::uint32_t j = i + 1; j < p.num_blocks; ++j) {
          Closure c(q);
          c.merge(i, j);
          auto count = c.run(cls);
          auto cand = lift(p, cls, count);
          if (seen.insert(cand).second) next.push_back(std::move(cand));
        }
    }
    frontier = std::move(next);
  }
  std::vector<BlockPartition> out(seen.begin(), seen.end());
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

Machine to_machine(const RcpIndex& idx, const BlockPartition& p, std::string name, std::string prefix) {
  check_over(idx, p);
  if (prefix.empty()) {
    prefix = name;
    for (auto& ch : prefix) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    prefix += '_';
  }
  auto events = acting_events(idx, p);
  Quotient q = quotient(idx, p);
  std::vector<std::string> states;
  for (std::uint32_t b = 0; b < p.num_blocks; ++b) states.push_back(prefix + std::to_string(b));
  std::vector<std::vector<StateId>> table(p.num_blocks);
  for (std::uint32_t b = 0; b < p.num_blocks; ++b)
    for (Event ev : events) {
      auto e = static_cast<std::size_t>(std::lower_bound(idx.sigma().begin(), idx.sigma().end(), ev) -
                                        idx.sigma().begin());
      table[b].push_back(q.at(b, e));
    }
  return Machine(std::move(name), std::move(states), std::move(events), p.block_of[idx.rcp().initial()],
                 std::move(table));
}

}  // namespace fsmfusion
