#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fsmfusion/fault_graph.hpp"
#include "fsmfusion/partition.hpp"
#include "fsmfusion/product.hpp"

namespace fsmfusion {

struct FusionOptions {
  /// State-reduction rounds (each merges at least one pair of states).
  int delta_states = 0;
  /// Event-reduction rounds (each drops at least one event).
  int delta_events = 0;
  /// Candidate frontier limit per reduction round; 0 disables truncation.
  std::size_t frontier_cap = 512;
  std::size_t state_limit = kDefaultStateLimit;
};

struct Backup {
  Machine machine;
  BlockPartition partition;
  std::vector<Event> events;
};

/// What one outer iteration saw and did.
struct IterationTrace {
  std::uint32_t dmin_before = 0;
  std::vector<StatePair> weakest;
  /// Qualifying candidates after each completed state / event round.
  std::vector<std::size_t> state_rounds;
  std::vector<std::size_t> event_rounds;
  /// True when a round found nothing and the loop kept the previous frontier.
  bool state_exit_early = false;
  bool event_exit_early = false;
  std::size_t min_states = 0;  // smallest candidate after the state rounds
  std::size_t min_events = 0;  // fewest acting events after the event rounds
  std::size_t minimality_steps = 0;
  std::size_t truncated = 0;
};

/// One round of incremental synthesis.
struct IncRound {
  std::vector<std::string> inputs;
  std::size_t rcp_states = 0;
  std::vector<std::pair<std::size_t, std::size_t>> backup_shapes;  // (states, events)
};

struct FusionSet {
  std::vector<Backup> backups;
  int f = 0;
  FusionOptions params;
  std::vector<IterationTrace> trace;
  std::vector<IncRound> rounds;  // filled by inc_fusion only
  std::uint32_t dmin_before = 0;
  std::uint32_t dmin_after = 0;
  std::vector<std::string> warnings;

  std::size_t m() const noexcept { return backups.size(); }
  std::vector<BlockPartition> partitions() const;
  std::vector<Machine> machines() const;
};

/// Partitions of the product induced by each of its own primaries.
std::vector<BlockPartition> primary_partitions(const RcpIndex& idx);

/// Synthesizes f backups over the product of `idx.primaries()`. Each outer
/// iteration adds one machine covering every weakest edge of the current
/// fault graph, so dmin rises by exactly one per backup. Candidates are
/// ordered canonically wherever a choice is free.
FusionSet gen_fusion(const RcpIndex& idx, int f, const FusionOptions& opts = {});
FusionSet gen_fusion(std::span<const Machine> primaries, int f, const FusionOptions& opts = {});

/// Incremental synthesis: fuses P1 with P2, then the product of those backups
/// with P3, and so on. The result is mapped onto the full product of
/// `primaries` and verified there; InconsistencyError if it does not verify.
FusionSet inc_fusion(std::span<const Machine> primaries, int f, const FusionOptions& opts = {});

/// dmin of primaries plus backups on the full product.
std::uint32_t verify_fusion(const RcpIndex& idx, const FusionSet& fs);

struct Decomposition {
  std::vector<Backup> parts;
  /// Size of the candidate frontier after the event rounds.
  std::size_t frontier = 0;
  /// False when some pair of states could not be separated.
  bool exists = true;
};

/// Replaces `m` by machines with at most |events(m)| - e events each, whose
/// joint state determines m's (reachable) state. `parts` is empty when no
/// such set exists.
Decomposition event_decompose(const Machine& m, int e);

struct Ambiguity {
  std::string machine;
  StateId rcp_state = 0;
  std::vector<std::string> states;
};

struct ExternalReport {
  bool ok = false;
  std::uint32_t dmin = 0;
  std::size_t joint_states = 0;
  /// Product states that map to more than one state of an external machine;
  /// the primaries cannot restore that machine after a fault.
  std::vector<Ambiguity> ambiguities;
  /// related[j][r] lists the states of externals[j] compatible with product state r.
  std::vector<std::vector<std::vector<std::uint32_t>>> related;
};

/// Decides whether machines that need not be below the product can correct f
/// crash faults among the primaries.
ExternalReport check_external_backup(std::span<const Machine> primaries, std::span<const Machine> externals, int f,
                                     std::size_t state_limit = kDefaultStateLimit);

}  // namespace fsmfusion
