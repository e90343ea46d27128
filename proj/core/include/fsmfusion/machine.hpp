#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fsmfusion {

using Event = std::uint32_t;
using StateId = std::uint32_t;

/// The client's input stream.
using EventSequence = std::vector<Event>;

/// A deterministic finite state machine over non-negative integer events.
///
/// The transition table is total over the machine's own event set. Stepping on
/// an event outside that set leaves the state unchanged, so a machine can be
/// run against the shared event universe of a whole system.
class Machine {
 public:
  Machine() = default;

  /// Builds and validates a machine. `table[s][i]` is the successor of state
  /// `s` on `events[i]`; `events` need not be sorted.
  Machine(std::string name, std::vector<std::string> states, std::vector<Event> events,
          StateId initial, std::vector<std::vector<StateId>> table);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& state_names() const noexcept { return states_; }
  /// Sorted ascending.
  const std::vector<Event>& events() const noexcept { return events_; }
  StateId initial() const noexcept { return initial_; }
  std::size_t num_states() const noexcept { return states_.size(); }
  std::size_t num_events() const noexcept { return events_.size(); }

  bool has_event(Event e) const noexcept { return event_index(e).has_value(); }
  std::optional<std::size_t> event_index(Event e) const noexcept;
  std::optional<StateId> find_state(std::string_view name) const;
  /// Throws ValidationError when the state is not declared.
  StateId state_id(std::string_view name) const;
  const std::string& state_name(StateId s) const;

  /// Successor of `s` on `e`; a self-loop when `e` is not one of the machine's events.
  StateId step(StateId s, Event e) const;
  /// Left fold of step() from the initial state.
  StateId run(std::span<const Event> seq) const;

  /// Raw table row for `s`, indexed like events().
  std::span<const StateId> row(StateId s) const { return table_.at(s); }

  Machine renamed(std::string name) const;

  friend bool operator==(const Machine&, const Machine&) = default;

 private:
  std::string name_;
  std::vector<std::string> states_;
  std::vector<Event> events_;
  StateId initial_ = 0;
  std::vector<std::vector<StateId>> table_;
  std::map<std::string, StateId, std::less<>> state_lookup_;
};

/// Maps symbolic event names to integer ids shared across several machines.
/// Integer tokens map to themselves; other tokens get fresh ids in
/// first-occurrence order, above every id seen so far.
class EventTable {
 public:
  Event resolve(std::string_view token);
  const std::map<std::string, Event, std::less<>>& symbols() const noexcept { return symbols_; }

 private:
  std::map<std::string, Event, std::less<>> symbols_;
  Event next_ = 0;
};

/// Parses the native line format:
///
///     machine <name>
///     states <id>+
///     events <int>+
///     initial <id>
///     trans <state> <event> <state>
///
/// `#` starts a comment. Throws ParseError or ValidationError.
Machine parse_fsm_text(std::string_view text, EventTable* symbols = nullptr);

/// Canonical native-format rendering; parse_fsm_text(serialize(m)) == m.
std::string serialize(const Machine& m);

struct Kiss2Result {
  Machine machine;
  /// (state, event) pairs with no transition line (or a `*` next state). They
  /// are left as self-loops.
  std::size_t unspecified = 0;
  int declared_states = -1;
};

/// Parses a KISS2 benchmark. Event ids are the MSB-first value of the input
/// bit-vector; `-` bits expand to every matching id; outputs are discarded.
Kiss2Result parse_kiss2(std::string_view text, std::string name = "kiss2");

/// Loads a machine from disk, choosing the parser by extension (`.kiss2` or
/// `.kiss` for KISS2, anything else native).
Machine load_machine(const std::string& path, EventTable* symbols = nullptr);

std::size_t max_state_count(std::span<const Machine> machines);

}  // namespace fsmfusion
