#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fsmfusion/partition.hpp"

namespace fsmfusion {

/// dmin of a graph with fewer than two nodes: there is no pair to confuse.
inline constexpr std::uint32_t kInfiniteDistance = std::numeric_limits<std::uint32_t>::max();

/// Complete weighted graph over product states; the weight of (u, v) counts
/// the machines that put u and v in different blocks.
///
/// Storage is a dense upper triangle for up to kDenseLimit nodes and a map of
/// nonzero pairs beyond that.
class FaultGraph {
 public:
  static constexpr std::size_t kDenseLimit = 4096;

  explicit FaultGraph(std::size_t nodes, std::uint64_t rcp_tag = 0);

  std::size_t num_nodes() const noexcept { return nodes_; }
  const std::vector<std::string>& machine_set() const noexcept { return machines_; }

  /// Adds one machine. Throws InconsistencyError if `p` is over another product.
  void add(const BlockPartition& p);

  /// Adds a machine known only through a relation: `related[r]` lists the
  /// machine states compatible with product state r. The pair (u, v) is
  /// separated when the two lists share no state.
  void add_relation(std::string name, const std::vector<std::vector<std::uint32_t>>& related);

  std::uint32_t weight(StateId u, StateId v) const;

 private:
  friend std::uint32_t dmin(const FaultGraph&);
  friend std::vector<StatePair> weakest_edges(const FaultGraph&);

  std::size_t offset(StateId u, StateId v) const;
  template <class Separates>
  void bump(Separates&& sep);

  std::size_t nodes_;
  std::uint64_t tag_;
  std::vector<std::string> machines_;
  std::vector<std::uint16_t> dense_;
  std::map<std::pair<StateId, StateId>, std::uint32_t> sparse_;
};

FaultGraph build_fault_graph(const RcpIndex& idx, std::span<const BlockPartition> machines);

/// Minimum edge weight, or kInfiniteDistance below two nodes.
std::uint32_t dmin(const FaultGraph& g);

/// Every pair (u < v) achieving dmin, in lexicographic order.
std::vector<StatePair> weakest_edges(const FaultGraph& g);

inline bool covers(const BlockPartition& p, StatePair e) { return p.block_of.at(e.first) != p.block_of.at(e.second); }

/// True when `p` separates every listed edge.
bool covers_all(const BlockPartition& p, std::span<const StatePair> edges);

inline bool can_correct_crash(const FaultGraph& g, int f) { return f < 0 || dmin(g) > static_cast<std::uint32_t>(f); }
inline bool can_correct_byz(const FaultGraph& g, int f) {
  return f < 0 || dmin(g) > 2 * static_cast<std::uint32_t>(f);
}

}  // namespace fsmfusion
