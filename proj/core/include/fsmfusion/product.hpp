#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fsmfusion/machine.hpp"

namespace fsmfusion {

/// A partition of the product's states into blocks. Stored in canonical form:
/// block ids are assigned in order of each block's smallest state id, so two
/// partitions are equal exactly when their `block_of` vectors are.
struct BlockPartition {
  std::string machine_name;
  std::vector<std::uint32_t> block_of;
  std::uint32_t num_blocks = 0;
  /// Fingerprint of the product this partition lives over.
  std::uint64_t rcp_tag = 0;
  /// Optional per-block labels (the mapped machine's state names).
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return block_of.size(); }
  std::vector<std::vector<StateId>> blocks() const;
  std::string label(std::uint32_t block) const;
  std::optional<std::uint32_t> find_label(std::string_view name) const;

  /// Structural equality: same product, same blocks. Names and labels are ignored.
  bool operator==(const BlockPartition& o) const noexcept {
    return rcp_tag == o.rcp_tag && block_of == o.block_of;
  }
};

/// Canonical (lexicographic on block_of) order; used for every tie-break.
bool canonical_less(const BlockPartition& a, const BlockPartition& b) noexcept;

/// Renumbers arbitrary per-state block ids into canonical form.
BlockPartition make_partition(std::string name, std::span<const std::uint32_t> raw_block_of,
                              std::uint64_t rcp_tag);

struct BlockPartitionHash {
  std::size_t operator()(const BlockPartition& p) const noexcept;
};

/// The reachable cross product of a list of primaries, with the maps between
/// product states and primary n-tuples.
class RcpIndex {
 public:
  const Machine& rcp() const noexcept { return rcp_; }
  const std::vector<Machine>& primaries() const noexcept { return primaries_; }
  std::vector<std::string> order() const;
  std::size_t size() const noexcept { return tuples_.size(); }
  std::size_t arity() const noexcept { return primaries_.size(); }
  /// Union of the primaries' event sets, ascending.
  const std::vector<Event>& sigma() const noexcept { return rcp_.events(); }
  std::uint64_t tag() const noexcept { return tag_; }

  std::span<const StateId> tuple_of(StateId r) const;
  std::optional<StateId> state_of(std::span<const StateId> tuple) const;
  /// Successor of `r` on the `i`-th event of sigma().
  StateId next(StateId r, std::size_t event_index) const { return rcp_.row(r)[event_index]; }
  /// e.g. "(a0,b0,c1)".
  std::string tuple_label(StateId r) const;
  /// Looks a product state up by primary state names.
  std::optional<StateId> find(std::span<const std::string> names) const;

  BlockPartition singletons() const;
  BlockPartition bottom() const;

 private:
  friend RcpIndex rcp(std::span<const Machine>, std::size_t);

  struct TupleHash {
    std::size_t operator()(const std::vector<StateId>& t) const noexcept;
  };

  Machine rcp_;
  std::vector<Machine> primaries_;
  std::vector<std::vector<StateId>> tuples_;
  std::unordered_map<std::vector<StateId>, StateId, TupleHash> lookup_;
  std::uint64_t tag_ = 0;
};

inline constexpr std::size_t kDefaultStateLimit = 1'000'000;

/// Breadth-first reachable product from the initial tuple. Product states are
/// numbered in discovery order with events visited in ascending id.
RcpIndex rcp(std::span<const Machine> primaries, std::size_t state_limit = kDefaultStateLimit);

/// Co-traverses the product and `m`, returning the partition of product states
/// induced by m's states. Throws InconsistencyError when m is not below the product.
BlockPartition map_states(const RcpIndex& idx, const Machine& m);

std::vector<StateId> project(const RcpIndex& idx, StateId r);

/// The product in native format, with a `# rK = (tuple)` comment per state.
std::string dump_rcp(const RcpIndex& idx);

}  // namespace fsmfusion
