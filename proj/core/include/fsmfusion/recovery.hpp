#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fsmfusion/fusion.hpp"
#include "fsmfusion/product.hpp"

namespace fsmfusion {

/// Primary states in product order.
using Tuple = std::vector<StateId>;
/// A tuple with crashed primaries left empty.
using PartialTuple = std::vector<std::optional<StateId>>;

PartialTuple to_partial(std::span<const StateId> t);
std::size_t missing_count(const PartialTuple& q);
/// Mismatched coordinates; an empty slot always counts as a mismatch.
std::size_t hamming(std::span<const StateId> a, const PartialTuple& q);

struct LshOptions {
  /// Coordinates per hash function; 0 picks ceil(n/2).
  int k = 0;
  /// Tables; 0 derives L from delta and gamma.
  int L = 0;
  double delta = 0.1;
  /// Distance the tables are tuned for (gamma = 1 - distance/n); negative uses f.
  int distance = -1;
  std::uint64_t seed = 1;
  /// Used when gamma^k leaves no finite L.
  int max_tables = 256;
  /// Explicit coordinate sets, one per table; overrides k, L and the seed.
  std::vector<std::vector<std::size_t>> coordinate_sets;
};

/// L = ceil(log(delta) / log(1 - gamma^k)), at least 1; max_tables when gamma <= 0.
int derive_table_count(double gamma, int k, double delta, int max_tables = 256);

struct QueryStats {
  std::size_t queries = 0;
  std::size_t tables_probed = 0;
  std::size_t tables_skipped = 0;
  std::size_t lsh_candidates = 0;
  std::size_t fallbacks = 0;

  QueryStats& operator+=(const QueryStats& o);
};

/// The recovery agent's view of a fusion set: the tuple-set of every fusion
/// state in an exact hash index, plus L locality-sensitive tables per state.
class RecoveryIndex {
 public:
  RecoveryIndex(const RcpIndex& idx, std::span<const BlockPartition> fusions, const LshOptions& opts = {});

  const RcpIndex& rcp() const noexcept { return idx_; }
  std::size_t arity() const noexcept { return idx_.arity(); }
  std::size_t num_fusions() const noexcept { return fusions_.size(); }
  std::size_t num_states(std::size_t fusion) const { return members_.at(fusion).size(); }
  const std::string& fusion_name(std::size_t fusion) const { return fusions_.at(fusion).machine_name; }

  int k() const noexcept { return k_; }
  int L() const noexcept { return static_cast<int>(coords_.size()); }
  double gamma() const noexcept { return gamma_; }
  double delta() const noexcept { return delta_; }
  const std::vector<std::vector<std::size_t>>& coordinate_sets() const noexcept { return coords_; }
  /// Bits per coordinate in a bucket key.
  int coordinate_width() const noexcept { return width_; }

  /// Tuples stored across all fusion states (N per fusion).
  std::size_t stored_points() const;
  /// Rough index size: stored points * n * coordinate width, in bytes.
  std::size_t approx_bytes() const;

  /// Product states in fusion state `state`, ascending.
  const std::vector<StateId>& members(std::size_t fusion, StateId state) const;
  /// Exact membership of a full tuple in a fusion state's tuple-set.
  bool contains(std::size_t fusion, StateId state, std::span<const StateId> tuple) const;

  /// Bucket key of table j for a full tuple, e.g. "10".
  std::string bucket_key(std::size_t table, std::span<const StateId> tuple) const;

  /// Tuples of the fusion state found in the query's buckets, within
  /// distance d. Tables touching an empty slot are skipped; if every table is
  /// skipped the state is scanned exhaustively. Product state ids, ascending.
  std::vector<StateId> lsh_query(std::size_t fusion, StateId state, const PartialTuple& q, std::size_t d,
                                 QueryStats* stats = nullptr) const;
  /// Every tuple of the fusion state within distance d.
  std::vector<StateId> exhaustive_query(std::size_t fusion, StateId state, const PartialTuple& q,
                                        std::size_t d) const;

 private:
  using Buckets = std::unordered_map<std::string, std::vector<StateId>>;

  std::string key_of(std::size_t table, const PartialTuple& q) const;

  RcpIndex idx_;
  std::vector<BlockPartition> fusions_;
  std::vector<std::vector<std::vector<StateId>>> members_;  // [fusion][state]
  std::vector<std::vector<std::size_t>> coords_;             // [table]
  std::vector<std::vector<std::vector<Buckets>>> tables_;    // [fusion][state][table]
  int k_ = 0;
  int width_ = 1;
  double gamma_ = 0;
  double delta_ = 0;
};

RecoveryIndex build_index(const RcpIndex& idx, const FusionSet& fs, const LshOptions& opts = {});

/// True when the tuple is missing from some fusion state's tuple-set, or a
/// fusion reports a state it does not have.
bool detect_byz(const RecoveryIndex& ri, std::span<const StateId> fusion_states, std::span<const StateId> r);

/// A surviving fusion and the state it reported.
struct FusionReading {
  std::size_t fusion = 0;
  StateId state = 0;
};

/// Restores the full tuple from surviving primaries (the filled slots of r)
/// and surviving fusions. Throws RecoveryError when the survivors do not pin
/// down a single tuple.
Tuple correct_crash(const RecoveryIndex& ri, std::span<const FusionReading> available, const PartialTuple& r,
                    QueryStats* stats = nullptr);

struct ByzResult {
  Tuple tuple;
  std::size_t votes = 0;
  std::size_t threshold = 0;
};

/// Majority vote over primaries and all f fusions, tolerating floor(f/2)
/// liars. Throws RecoveryError when no tuple, or more than one, reaches
/// n + floor(f/2) votes.
ByzResult correct_byz(const RecoveryIndex& ri, std::span<const StateId> fusion_states, std::span<const StateId> r,
                      QueryStats* stats = nullptr);

}  // namespace fsmfusion
