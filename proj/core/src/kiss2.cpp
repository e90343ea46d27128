#include <map>

#include "fsmfusion/error.hpp"
#include "fsmfusion/machine.hpp"
#include "text_util.hpp"

namespace fsmfusion {

namespace {

// Every event id whose MSB-first bit pattern matches `bits` ('0', '1', '-').
std::vector<Event> expand_pattern(std::string_view bits, int line) {
  std::vector<Event> ids{0};
  for (char c : bits) {
    std::vector<Event> next;
    next.reserve(ids.size() * 2);
    for (Event v : ids) {
      if (c == '0' || c == '-') next.push_back(v << 1);
      if (c == '1' || c == '-') next.push_back((v << 1) | 1u);
      if (c != '0' && c != '1' && c != '-')
        throw ParseError("invalid input bit '" + std::string(1, c) + "'", line);
    }
    ids = std::move(next);
  }
  return ids;
}

bool is_dont_care_state(std::string_view s) { return s == "*" || s == "ANY" || s == "-"; }

}  // namespace

Kiss2Result parse_kiss2(std::string_view text, std::string name) {
  int inputs = -1;
  int declared_states = -1;
  std::optional<std::string> reset;
  std::vector<std::string> states;
  std::map<std::string, StateId, std::less<>> sid;
  auto intern = [&](std::string_view s) {
    auto it = sid.find(s);
    if (it != sid.end()) return it->second;
    StateId id = static_cast<StateId>(states.size());
    states.emplace_back(s);
    sid.emplace(std::string(s), id);
    return id;
  };

  struct Line {
    std::vector<Event> events;
    StateId from;
    std::optional<StateId> to;
    int line;
  };
  std::vector<Line> lines;
  bool ended = false;

  detail::for_each_line(text, [&](int line, const std::vector<std::string_view>& t) {
    if (ended) return;
    const auto& kw = t[0];
    if (kw.starts_with('.')) {
      auto need_int = [&]() -> int {
        if (t.size() < 2) throw ParseError("directive " + std::string(kw) + " needs a value", line);
        auto v = detail::parse_uint<unsigned>(t[1]);
        if (!v) throw ParseError("bad value for " + std::string(kw), line);
        return static_cast<int>(*v);
      };
      if (kw == ".i") {
        inputs = need_int();
        if (inputs > 24) throw ParseError(".i wider than 24 bits is not supported", line);
      } else if (kw == ".s") {
        declared_states = need_int();
      } else if (kw == ".r") {
        if (t.size() < 2) throw ParseError(".r needs a state", line);
        reset = std::string(t[1]);
      } else if (kw == ".e" || kw == ".end") {
        ended = true;
      }
      // .o, .p, .ilb, .ob and other directives carry nothing we keep.
      return;
    }
    if (inputs < 0) throw ParseError("transition before .i", line);
    if (t.size() < 3) throw ParseError("expected '<inbits> <cur> <next> [<outbits>]'", line);
    if (static_cast<int>(t[0].size()) != inputs)
      throw ParseError("input width " + std::to_string(t[0].size()) + " inconsistent with .i " +
                           std::to_string(inputs),
                       line);
    Line l;
    l.events = expand_pattern(t[0], line);
    l.from = intern(t[1]);
    if (!is_dont_care_state(t[2])) l.to = intern(t[2]);
    l.line = line;
    lines.push_back(std::move(l));
  });

  if (inputs < 0) throw ParseError("missing .i directive");
  if (lines.empty()) throw ParseError("no transition lines");

  const std::size_t num_events = std::size_t{1} << inputs;
  constexpr StateId kUnset = ~StateId{0};
  std::vector<std::vector<StateId>> table(states.size(), std::vector<StateId>(num_events, kUnset));
  for (const auto& l : lines) {
    if (!l.to) continue;
    for (Event e : l.events) {
      auto& cell = table[l.from][e];
      if (cell != kUnset && cell != *l.to)
        throw ParseError("conflicting transitions for state '" + states[l.from] + "' on input " +
                             std::to_string(e),
                         l.line);
      cell = *l.to;
    }
  }

  Kiss2Result out;
  out.declared_states = declared_states;
  for (StateId s = 0; s < table.size(); ++s)
    for (std::size_t e = 0; e < num_events; ++e)
      if (table[s][e] == kUnset) {
        table[s][e] = s;
        ++out.unspecified;
      }

  StateId initial = lines.front().from;
  if (reset) {
    auto it = sid.find(*reset);
    if (it == sid.end()) throw ParseError("reset state '" + *reset + "' never appears in a transition");
    initial = it->second;
  }

  std::vector<Event> events(num_events);
  for (std::size_t e = 0; e < num_events; ++e) events[e] = static_cast<Event>(e);
  out.machine = Machine(std::move(name), std::move(states), std::move(events), initial, std::move(table));
  return out;
}

}  // namespace fsmfusion
