#include "fsmfusion/machine.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "fsmfusion/error.hpp"
#include "text_util.hpp"

namespace fsmfusion {

Machine::Machine(std::string name, std::vector<std::string> states, std::vector<Event> events,
                 StateId initial, std::vector<std::vector<StateId>> table)
    : name_(std::move(name)), states_(std::move(states)), initial_(initial) {
  if (states_.empty()) throw ValidationError("machine '" + name_ + "' has no states");
  for (StateId s = 0; s < states_.size(); ++s) {
    if (!state_lookup_.emplace(states_[s], s).second)
      throw ValidationError("duplicate state '" + states_[s] + "' in machine '" + name_ + "'");
  }
  if (initial_ >= states_.size()) throw ValidationError("initial state out of range in '" + name_ + "'");
  if (table.size() != states_.size())
    throw ValidationError("transition table of '" + name_ + "' does not cover every state");

  // Sort events, permuting table columns to match.
  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return events[a] < events[b]; });
  events_.reserve(events.size());
  for (auto i : order) events_.push_back(events[i]);
  if (std::adjacent_find(events_.begin(), events_.end()) != events_.end())
    throw ValidationError("duplicate event id in machine '" + name_ + "'");

  table_.resize(states_.size());
  for (StateId s = 0; s < states_.size(); ++s) {
    if (table[s].size() != events.size())
      throw ValidationError("state '" + states_[s] + "' of '" + name_ + "' has a partial transition row");
    table_[s].reserve(order.size());
    for (auto i : order) {
      StateId t = table[s][i];
      if (t >= states_.size())
        throw ValidationError("undefined transition target in machine '" + name_ + "'");
      table_[s].push_back(t);
    }
  }
}

std::optional<std::size_t> Machine::event_index(Event e) const noexcept {
  auto it = std::lower_bound(events_.begin(), events_.end(), e);
  if (it == events_.end() || *it != e) return std::nullopt;
  return static_cast<std::size_t>(it - events_.begin());
}

std::optional<StateId> Machine::find_state(std::string_view name) const {
  auto it = state_lookup_.find(name);
  if (it == state_lookup_.end()) return std::nullopt;
  return it->second;
}

StateId Machine::state_id(std::string_view name) const {
  if (auto s = find_state(name)) return *s;
  throw ValidationError("unknown state '" + std::string(name) + "' in machine '" + name_ + "'");
}

const std::string& Machine::state_name(StateId s) const {
  if (s >= states_.size()) throw ValidationError("unknown state id " + std::to_string(s));
  return states_[s];
}

StateId Machine::step(StateId s, Event e) const {
  if (s >= states_.size())
    throw ValidationError("unknown state id " + std::to_string(s) + " in machine '" + name_ + "'");
  auto idx = event_index(e);
  return idx ? table_[s][*idx] : s;
}

StateId Machine::run(std::span<const Event> seq) const {
  StateId s = initial_;
  for (Event e : seq) s = step(s, e);
  return s;
}

Machine Machine::renamed(std::string name) const {
  Machine m = *this;
  m.name_ = std::move(name);
  return m;
}

Event EventTable::resolve(std::string_view token) {
  if (auto v = detail::parse_uint<Event>(token)) {
    next_ = std::max(next_, *v + 1);
    return *v;
  }
  if (auto it = symbols_.find(token); it != symbols_.end()) return it->second;
  Event id = next_++;
  symbols_.emplace(std::string(token), id);
  return id;
}

Machine parse_fsm_text(std::string_view text, EventTable* symbols) {
  std::optional<std::string> name;
  std::vector<std::string> states;
  std::vector<Event> events;
  std::optional<std::string> initial;
  struct Trans {
    std::string from;
    Event ev;
    std::string to;
    int line;
  };
  std::vector<Trans> trans;
  EventTable local;
  EventTable& table = symbols ? *symbols : local;

  detail::for_each_line(text, [&](int line, const std::vector<std::string_view>& t) {
    const auto& kw = t[0];
    if (kw == "machine") {
      if (t.size() != 2) throw ParseError("expected 'machine <name>'", line);
      if (name) throw ParseError("duplicate 'machine' line", line);
      name = std::string(t[1]);
    } else if (kw == "states") {
      for (std::size_t i = 1; i < t.size(); ++i) states.emplace_back(t[i]);
    } else if (kw == "events") {
      for (std::size_t i = 1; i < t.size(); ++i) events.push_back(table.resolve(t[i]));
    } else if (kw == "initial") {
      if (t.size() != 2) throw ParseError("expected 'initial <state>'", line);
      if (initial) throw ParseError("duplicate 'initial' line", line);
      initial = std::string(t[1]);
    } else if (kw == "trans") {
      if (t.size() != 4) throw ParseError("expected 'trans <state> <event> <state>'", line);
      trans.push_back({std::string(t[1]), table.resolve(t[2]), std::string(t[3]), line});
    } else {
      throw ParseError("unknown keyword '" + std::string(kw) + "'", line);
    }
  });

  if (!name) throw ParseError("missing 'machine' line");
  if (!initial) throw ValidationError("machine '" + *name + "' has no initial state");

  std::map<std::string, StateId, std::less<>> sid;
  for (StateId i = 0; i < states.size(); ++i) {
    if (!sid.emplace(states[i], i).second)
      throw ValidationError("duplicate state '" + states[i] + "' in machine '" + *name + "'");
  }
  std::map<Event, std::size_t> eid;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!eid.emplace(events[i], i).second)
      throw ValidationError("duplicate event " + std::to_string(events[i]) + " in machine '" + *name + "'");
  }
  auto it = sid.find(*initial);
  if (it == sid.end()) throw ValidationError("initial state '" + *initial + "' is not declared");

  constexpr StateId kUnset = ~StateId{0};
  std::vector<std::vector<StateId>> rows(states.size(), std::vector<StateId>(events.size(), kUnset));
  for (const auto& tr : trans) {
    auto f = sid.find(tr.from);
    auto to = sid.find(tr.to);
    if (f == sid.end()) throw ValidationError("line " + std::to_string(tr.line) + ": undeclared source state '" + tr.from + "'");
    if (to == sid.end()) throw ValidationError("line " + std::to_string(tr.line) + ": undefined transition target '" + tr.to + "'");
    auto e = eid.find(tr.ev);
    if (e == eid.end())
      throw ValidationError("line " + std::to_string(tr.line) + ": event " + std::to_string(tr.ev) + " is not declared");
    auto& cell = rows[f->second][e->second];
    if (cell != kUnset && cell != to->second)
      throw ValidationError("line " + std::to_string(tr.line) + ": conflicting transition for (" + tr.from + ", " +
                            std::to_string(tr.ev) + ")");
    cell = to->second;
  }
  for (StateId s = 0; s < rows.size(); ++s)
    for (std::size_t e = 0; e < events.size(); ++e)
      if (rows[s][e] == kUnset)
        throw ValidationError("non-total transition table: (" + states[s] + ", " + std::to_string(events[e]) +
                              ") has no target");

  return Machine(*name, std::move(states), std::move(events), it->second, std::move(rows));
}

std::string serialize(const Machine& m) {
  std::ostringstream out;
  out << "machine " << m.name() << "\nstates";
  for (const auto& s : m.state_names()) out << ' ' << s;
  out << "\nevents";
  for (Event e : m.events()) out << ' ' << e;
  out << "\ninitial " << m.state_name(m.initial()) << '\n';
  for (StateId s = 0; s < m.num_states(); ++s) {
    auto row = m.row(s);
    for (std::size_t i = 0; i < m.num_events(); ++i)
      out << "trans " << m.state_name(s) << ' ' << m.events()[i] << ' ' << m.state_name(row[i]) << '\n';
  }
  return out.str();
}

Machine load_machine(const std::string& path, EventTable* symbols) {
  std::string text = detail::read_file(path);
  auto ends_with = [&](std::string_view suf) {
    return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (ends_with(".kiss2") || ends_with(".kiss")) {
    auto slash = path.find_last_of('/');
    std::string base = path.substr(slash == std::string::npos ? 0 : slash + 1);
    base = base.substr(0, base.find('.'));
    return parse_kiss2(text, base).machine;
  }
  return parse_fsm_text(text, symbols);
}

std::size_t max_state_count(std::span<const Machine> machines) {
  std::size_t s = 0;
  for (const auto& m : machines) s = std::max(s, m.num_states());
  return s;
}

}  // namespace fsmfusion
