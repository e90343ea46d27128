#include "fsmfusion/fault_graph.hpp"

#include <algorithm>

#include "fsmfusion/error.hpp"

namespace fsmfusion {

FaultGraph::FaultGraph(std::size_t nodes, std::uint64_t rcp_tag) : nodes_(nodes), tag_(rcp_tag) {
  if (nodes_ <= kDenseLimit && nodes_ > 1) dense_.assign(nodes_ * (nodes_ - 1) / 2, 0);
}

std::size_t FaultGraph::offset(StateId u, StateId v) const {
  // Row-major upper triangle without the diagonal.
  return static_cast<std::size_t>(u) * (2 * nodes_ - u - 1) / 2 + (v - u - 1);
}

template <class Separates>
void FaultGraph::bump(Separates&& sep) {
  const bool dense = nodes_ <= kDenseLimit;
  for (StateId u = 0; u < nodes_; ++u) {
    std::size_t base = dense ? offset(u, u + 1) : 0;
    for (StateId v = u + 1; v < nodes_; ++v) {
      if (!sep(u, v)) continue;
      if (dense)
        ++dense_[base + (v - u - 1)];
      else
        ++sparse_[{u, v}];
    }
  }
}

void FaultGraph::add(const BlockPartition& p) {
  if (p.block_of.size() != nodes_ || (tag_ != 0 && p.rcp_tag != tag_))
    throw InconsistencyError("machine '" + p.machine_name + "' is over a different product");
  if (machines_.size() >= 0xffff) throw CapacityError("too many machines in one fault graph");
  machines_.push_back(p.machine_name);
  const auto& b = p.block_of;
  bump([&](StateId u, StateId v) { return b[u] != b[v]; });
}

void FaultGraph::add_relation(std::string name, const std::vector<std::vector<std::uint32_t>>& related) {
  if (related.size() != nodes_) throw InconsistencyError("relation for '" + name + "' has the wrong size");
  machines_.push_back(std::move(name));
  std::vector<std::vector<std::uint32_t>> sorted = related;
  for (auto& r : sorted) std::sort(r.begin(), r.end());
  bump([&](StateId u, StateId v) {
    const auto& a = sorted[u];
    const auto& c = sorted[v];
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < c.size()) {
      if (a[i] == c[j]) return false;
      a[i] < c[j] ? ++i : ++j;
    }
    return true;
  });
}

std::uint32_t FaultGraph::weight(StateId u, StateId v) const {
  if (u >= nodes_ || v >= nodes_ || u == v) throw ValidationError("no such fault-graph edge");
  if (u > v) std::swap(u, v);
  if (nodes_ <= kDenseLimit) return dense_[offset(u, v)];
  auto it = sparse_.find({u, v});
  return it == sparse_.end() ? 0 : it->second;
}

FaultGraph build_fault_graph(const RcpIndex& idx, std::span<const BlockPartition> machines) {
  FaultGraph g(idx.size(), idx.tag());
  for (const auto& p : machines) g.add(p);
  return g;
}

std::uint32_t dmin(const FaultGraph& g) {
  if (g.nodes_ < 2) return kInfiniteDistance;
  if (g.nodes_ <= FaultGraph::kDenseLimit) return *std::min_element(g.dense_.begin(), g.dense_.end());
  const std::size_t pairs = g.nodes_ * (g.nodes_ - 1) / 2;
  if (g.sparse_.size() < pairs) return 0;
  std::uint32_t best = kInfiniteDistance;
  for (const auto& [k, w] : g.sparse_) best = std::min(best, w);
  return best;
}

std::vector<StatePair> weakest_edges(const FaultGraph& g) {
  std::vector<StatePair> out;
  const auto d = dmin(g);
  if (d == kInfiniteDistance) return out;
  for (StateId u = 0; u < g.nodes_; ++u)
    for (StateId v = u + 1; v < g.nodes_; ++v)
      if (g.weight(u, v) == d) out.emplace_back(u, v);
  return out;
}

bool covers_all(const BlockPartition& p, std::span<const StatePair> edges) {
  return std::all_of(edges.begin(), edges.end(), [&](StatePair e) { return covers(p, e); });
}

}  // namespace fsmfusion
