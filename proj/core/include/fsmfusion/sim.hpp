#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsmfusion/fusion.hpp"
#include "fsmfusion/recovery.hpp"

namespace fsmfusion {

enum class FaultKind { Crash, Byzantine };

struct FaultSpec {
  /// Number of events delivered before the fault strikes.
  std::size_t time = 0;
  std::string machine;
  FaultKind kind = FaultKind::Crash;
  /// State a Byzantine machine claims; chosen at random when empty.
  std::string lie_state;
};

struct ScenarioConfig {
  std::vector<Machine> primaries;
  std::vector<Machine> backups;
  /// Synthesize this many backups. Cannot be combined with `backups`.
  std::optional<int> auto_fuse;
  FusionOptions fuse_options;
  EventSequence events;
  /// When set, `events` is replaced by this many seeded random events over the primaries' events.
  std::optional<std::size_t> random_events;
  std::vector<FaultSpec> faults;
  /// Run liar detection every this many events (0 = only when a lie is planned).
  std::size_t detect_interval = 0;
  std::uint64_t seed = 1;
  /// Declared fault budget; defaults to the number of backups.
  std::optional<int> budget;
  LshOptions lsh;
};

/// Line-oriented scenario format:
///
///     primary <file>            backup <file>
///     auto-fuse <f> [ds de]     events <int>*
///     random-events <count>     seed <int>
///     budget <int>              detect-interval <int>
///     fault <time> <machine> crash
///     fault <time> <machine> byzantine [lie-state]
///     lsh <k> <L> <delta>
///
/// Relative paths resolve against `base_dir`.
ScenarioConfig parse_scenario(std::string_view text, const std::string& base_dir = ".");
ScenarioConfig load_scenario(const std::string& path);

enum class EpisodeKind { CrashCorrection, ByzDetection, ByzCorrection };

struct Episode {
  EpisodeKind kind = EpisodeKind::CrashCorrection;
  std::size_t time = 0;
  std::vector<std::string> faulty;
  /// Machine states the recovery agent had to fetch.
  std::size_t acquired = 0;
  bool over_budget = false;
  /// Detection verdict (detection episodes).
  bool detected = false;
  /// Recovery outcome (correction episodes): the recovered tuple matched ground truth.
  bool recovered = false;
  std::size_t votes = 0;
  std::string recovered_tuple;
  std::string true_tuple;
  std::string note;
};

struct SimReport {
  std::size_t n = 0;
  std::size_t f = 0;
  int budget = 0;
  std::size_t events = 0;
  std::vector<std::string> machines;
  std::vector<std::string> final_states;
  std::vector<Episode> episodes;
  std::size_t detection_messages = 0;
  std::size_t correction_messages = 0;
  QueryStats queries;
  double wall_ms = 0;
  /// Every in-budget episode matched ground truth.
  bool sound = true;
};

SimReport run_scenario(const ScenarioConfig& cfg);

struct AuditRecord {
  bool ok = true;
  std::size_t detection_messages = 0;
  std::size_t correction_messages = 0;
  std::vector<std::string> failures;
};

/// Checks message counts: n + f per detection, the surviving machines per
/// crash correction (n when f machines crashed), and the detection snapshot
/// reused for Byzantine correction.
AuditRecord message_audit(const SimReport& report);

/// Tab-separated rendering with a `#` header line.
std::string format_report(const SimReport& report);

std::string_view to_string(EpisodeKind k);

}  // namespace fsmfusion
