#include "fsmfusion/product.hpp"

#include <deque>
#include <set>
#include <sstream>

#include "fsmfusion/error.hpp"

namespace fsmfusion {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline void fnv_mix(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
}

}  // namespace

std::vector<std::vector<StateId>> BlockPartition::blocks() const {
  std::vector<std::vector<StateId>> out(num_blocks);
  for (StateId s = 0; s < block_of.size(); ++s) out[block_of[s]].push_back(s);
  return out;
}

std::string BlockPartition::label(std::uint32_t block) const {
  if (block < labels.size()) return labels[block];
  return "b" + std::to_string(block);
}

std::optional<std::uint32_t> BlockPartition::find_label(std::string_view name) const {
  for (std::uint32_t b = 0; b < num_blocks; ++b)
    if (label(b) == name) return b;
  return std::nullopt;
}

bool canonical_less(const BlockPartition& a, const BlockPartition& b) noexcept {
  return a.block_of < b.block_of;
}

BlockPartition make_partition(std::string name, std::span<const std::uint32_t> raw, std::uint64_t tag) {
  BlockPartition p;
  p.machine_name = std::move(name);
  p.rcp_tag = tag;
  p.block_of.resize(raw.size());
  std::unordered_map<std::uint32_t, std::uint32_t> renum;
  for (std::size_t s = 0; s < raw.size(); ++s) {
    auto [it, fresh] = renum.emplace(raw[s], p.num_blocks);
    if (fresh) ++p.num_blocks;
    p.block_of[s] = it->second;
  }
  return p;
}

std::size_t BlockPartitionHash::operator()(const BlockPartition& p) const noexcept {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, p.rcp_tag);
  for (auto b : p.block_of) fnv_mix(h, b);
  return static_cast<std::size_t>(h);
}

std::size_t RcpIndex::TupleHash::operator()(const std::vector<StateId>& t) const noexcept {
  std::uint64_t h = kFnvOffset;
  for (auto v : t) fnv_mix(h, v);
  return static_cast<std::size_t>(h);
}

std::vector<std::string> RcpIndex::order() const {
  std::vector<std::string> out;
  for (const auto& m : primaries_) out.push_back(m.name());
  return out;
}

std::span<const StateId> RcpIndex::tuple_of(StateId r) const {
  if (r >= tuples_.size()) throw ValidationError("unknown product state " + std::to_string(r));
  return tuples_[r];
}

std::optional<StateId> RcpIndex::state_of(std::span<const StateId> tuple) const {
  auto it = lookup_.find(std::vector<StateId>(tuple.begin(), tuple.end()));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::string RcpIndex::tuple_label(StateId r) const {
  auto t = tuple_of(r);
  std::string out = "(";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += ',';
    out += primaries_[i].state_name(t[i]);
  }
  return out + ")";
}

std::optional<StateId> RcpIndex::find(std::span<const std::string> names) const {
  if (names.size() != primaries_.size()) return std::nullopt;
  std::vector<StateId> t;
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto s = primaries_[i].find_state(names[i]);
    if (!s) return std::nullopt;
    t.push_back(*s);
  }
  return state_of(t);
}

BlockPartition RcpIndex::singletons() const {
  BlockPartition p;
  p.machine_name = "RCP";
  p.rcp_tag = tag_;
  p.num_blocks = static_cast<std::uint32_t>(size());
  p.block_of.resize(size());
  for (StateId s = 0; s < size(); ++s) p.block_of[s] = s;
  return p;
}

BlockPartition RcpIndex::bottom() const {
  BlockPartition p;
  p.machine_name = "Rbot";
  p.rcp_tag = tag_;
  p.num_blocks = size() ? 1 : 0;
  p.block_of.assign(size(), 0);
  return p;
}

RcpIndex rcp(std::span<const Machine> primaries, std::size_t state_limit) {
  if (primaries.empty()) throw ValidationError("reachable cross product needs at least one machine");
  std::set<std::string> names;
  for (const auto& m : primaries)
    if (!names.insert(m.name()).second) throw ValidationError("duplicate machine name '" + m.name() + "'");

  RcpIndex idx;
  idx.primaries_.assign(primaries.begin(), primaries.end());

  std::set<Event> sigma_set;
  for (const auto& m : primaries) sigma_set.insert(m.events().begin(), m.events().end());
  std::vector<Event> sigma(sigma_set.begin(), sigma_set.end());

  // Per primary, the column of each sigma event (or none when the primary ignores it).
  const std::size_t n = primaries.size();
  std::vector<std::vector<std::optional<std::size_t>>> col(n);
  for (std::size_t i = 0; i < n; ++i)
    for (Event e : sigma) col[i].push_back(primaries[i].event_index(e));

  std::vector<StateId> init(n);
  for (std::size_t i = 0; i < n; ++i) init[i] = primaries[i].initial();

  std::vector<std::vector<StateId>> table;
  idx.tuples_.push_back(init);
  idx.lookup_.emplace(init, 0);
  for (std::size_t head = 0; head < idx.tuples_.size(); ++head) {
    std::vector<StateId> row(sigma.size());
    for (std::size_t e = 0; e < sigma.size(); ++e) {
      std::vector<StateId> next = idx.tuples_[head];
      for (std::size_t i = 0; i < n; ++i)
        if (col[i][e]) next[i] = primaries[i].row(next[i])[*col[i][e]];
      auto [it, fresh] = idx.lookup_.emplace(next, static_cast<StateId>(idx.tuples_.size()));
      if (fresh) {
        if (idx.tuples_.size() >= state_limit)
          throw CapacityError("reachable cross product exceeds the state limit of " + std::to_string(state_limit));
        idx.tuples_.push_back(std::move(next));
      }
      row[e] = it->second;
    }
    table.push_back(std::move(row));
  }

  std::vector<std::string> state_names;
  for (std::size_t r = 0; r < idx.tuples_.size(); ++r) state_names.push_back("r" + std::to_string(r));
  std::string name = "RCP";
  idx.rcp_ = Machine(name, std::move(state_names), sigma, 0, table);

  std::uint64_t h = kFnvOffset;
  fnv_mix(h, table.size());
  for (Event e : sigma) fnv_mix(h, e);
  for (const auto& row : table)
    for (auto t : row) fnv_mix(h, t);
  for (const auto& t : idx.tuples_)
    for (auto v : t) fnv_mix(h, v);
  idx.tag_ = h;
  return idx;
}

BlockPartition map_states(const RcpIndex& idx, const Machine& m) {
  const auto& R = idx.rcp();
  std::set<Event> ev(R.events().begin(), R.events().end());
  ev.insert(m.events().begin(), m.events().end());

  constexpr StateId kUnset = ~StateId{0};
  std::vector<StateId> paired(idx.size(), kUnset);
  std::deque<StateId> queue;
  paired[R.initial()] = m.initial();
  queue.push_back(R.initial());
  while (!queue.empty()) {
    StateId r = queue.front();
    queue.pop_front();
    for (Event e : ev) {
      StateId rn = R.step(r, e);
      StateId mn = m.step(paired[r], e);
      if (paired[rn] == kUnset) {
        paired[rn] = mn;
        queue.push_back(rn);
      } else if (paired[rn] != mn) {
        throw InconsistencyError("machine '" + m.name() + "' is not below the product: state " +
                                 idx.tuple_label(rn) + " pairs with both '" + m.state_name(paired[rn]) +
                                 "' and '" + m.state_name(mn) + "'");
      }
    }
  }
  BlockPartition p = make_partition(m.name(), paired, idx.tag());
  p.labels.resize(p.num_blocks);
  for (StateId r = 0; r < idx.size(); ++r) p.labels[p.block_of[r]] = m.state_name(paired[r]);
  return p;
}

std::vector<StateId> project(const RcpIndex& idx, StateId r) {
  auto t = idx.tuple_of(r);
  return {t.begin(), t.end()};
}

std::string dump_rcp(const RcpIndex& idx) {
  std::ostringstream out;
  out << "# reachable cross product of";
  for (const auto& m : idx.primaries()) out << ' ' << m.name();
  out << "\n";
  for (StateId r = 0; r < idx.size(); ++r) out << "# r" << r << " = " << idx.tuple_label(r) << '\n';
  out << serialize(idx.rcp());
  return out.str();
}

}  // namespace fsmfusion
