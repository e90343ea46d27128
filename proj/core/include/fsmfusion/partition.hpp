#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "fsmfusion/product.hpp"

namespace fsmfusion {

using StatePair = std::pair<StateId, StateId>;

/// The finest closed partition of the product that merges every seed pair:
/// the largest machine at or below the product consistent with the seeds.
BlockPartition largest_consistent(const RcpIndex& idx, std::span<const StatePair> seeds);

/// Same, starting from an already-closed partition `base` rather than singletons.
BlockPartition largest_consistent(const RcpIndex& idx, const BlockPartition& base,
                                  std::span<const StatePair> seeds);

/// True when every event maps each block into a single block.
bool is_closed(const RcpIndex& idx, const BlockPartition& p);

/// p <= q: every block of q lies inside a block of p (q's state determines p's).
/// Throws InconsistencyError for partitions over different products.
bool leq(const BlockPartition& p, const BlockPartition& q);

/// Events that move at least one block of the closed partition `p`.
std::vector<Event> acting_events(const RcpIndex& idx, const BlockPartition& p);

/// Keeps the maximal elements under leq, deduplicated, in canonical order.
std::vector<BlockPartition> maximal_elements(std::vector<BlockPartition> candidates);

/// For each pair of blocks of `p`, merges the pair and closes; returns the
/// maximal results in canonical order. Empty when `p` has a single block.
///
/// When `keep` is given only candidates satisfying it are returned. `keep` must
/// be downward closed in the refinement order (if it holds for q it holds for
/// every closed partition finer than q); "covers a fixed edge set" is.
std::vector<BlockPartition> reduce_state(const RcpIndex& idx, const BlockPartition& p,
                                         const std::function<bool(const BlockPartition&)>& keep = {});

struct EventReduced {
  BlockPartition partition;
  std::vector<Event> events;  // acting events of the reduced machine
};

/// For each event in `sigma_p`, merges every block with its image under that
/// event, closes, and records the acting events of the result. Returns the
/// maximal results in canonical order.
std::vector<EventReduced> reduce_event(const RcpIndex& idx, const BlockPartition& p,
                                       std::span<const Event> sigma_p);
/// sigma_p defaults to acting_events(p).
std::vector<EventReduced> reduce_event(const RcpIndex& idx, const BlockPartition& p);

/// Every closed partition of the product, in canonical order. Throws
/// CapacityError when the product has more than `max_states` states.
std::vector<BlockPartition> enumerate_closed_partitions(const RcpIndex& idx, std::size_t max_states = 12);

/// Materializes a closed partition as a machine over its acting events. States
/// are named `<prefix><block>`.
Machine to_machine(const RcpIndex& idx, const BlockPartition& p, std::string name, std::string prefix = "");

}  // namespace fsmfusion
