#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsmfusion/fusion.hpp"

namespace fsmfusion {

using Triple = std::array<std::string, 3>;

/// One published evaluation row, used as the comparison target.
struct ReferenceRow {
  Triple machines;
  std::uint64_t replication_state_space;
  std::uint64_t fusion_state_space;
  double savings_pct;
  std::size_t primary_events;
  double avg_fusion_events;
  double event_reduction_pct;
};

struct BenchmarkMachine {
  std::string name;
  std::size_t states;
  std::size_t events;
};

std::span<const ReferenceRow> reference_rows();
std::span<const BenchmarkMachine> benchmark_machines();
const ReferenceRow* find_reference(const Triple& t);

struct BenchOptions {
  int f = 2;
  int delta_states = 0;
  int delta_events = 3;
  bool direct = true;
  bool incremental = true;
  /// 0 keeps every candidate.
  std::size_t frontier_cap = 0;
  std::size_t state_limit = kDefaultStateLimit;
  /// Relative tolerance for NEAR.
  double near_tolerance = 0.25;
};

struct BenchRow {
  std::string machines;
  std::size_t rcp_states = 0;
  std::uint64_t replication_state_space = 0;
  std::uint64_t fusion_state_space = 0;
  double savings_pct = 0;
  std::size_t primary_events = 0;
  double avg_fusion_events = 0;
  double event_reduction_pct = 0;
  double rho = 0;
  double beta = 0;
  std::uint32_t dmin = 0;
  bool verified = false;
  double direct_ms = -1;
  double incremental_ms = -1;
  std::uint64_t direct_fusion_state_space = 0;
  std::uint64_t incremental_fusion_state_space = 0;
  std::string source;  // "incremental" or "direct"
  std::string status;  // PASS / NEAR / DIFF / NOREF / SKIP
  std::string reference;
  std::string note;
};

/// Replication, savings and event columns for the given primaries and fusion.
void fill_columns(BenchRow& row, std::span<const Machine> primaries, const RcpIndex& idx, const FusionSet& fs);

/// Synthesizes and verifies one triple of already-loaded machines.
BenchRow bench_row(std::span<const Machine> primaries, const BenchOptions& opts);

/// Loads `<dir>/<name>.kiss2` (or `.kiss`) for each machine of each triple.
/// Missing or oversized rows are reported as SKIP with a reason.
std::vector<BenchRow> bench(const std::string& dir, std::span<const Triple> triples, const BenchOptions& opts);

/// One triple per line, names separated by whitespace or commas.
std::vector<Triple> parse_triples(std::string_view text);

/// Distinct unordered triples from `names`, drawn with a seeded generator.
std::vector<Triple> generate_triples(std::span<const std::string> names, std::size_t count, std::uint64_t seed);

/// Tab-separated report; the `#` header names BenchRow fields.
std::string format_bench(std::span<const BenchRow> rows);

}  // namespace fsmfusion
