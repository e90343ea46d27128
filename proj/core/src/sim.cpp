#include "fsmfusion/sim.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include "fsmfusion/error.hpp"
#include "text_util.hpp"

namespace fsmfusion {

namespace {

std::string resolve(const std::string& base, std::string_view p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = std::filesystem::path(base) / path;
  return path.string();
}

std::size_t need_uint(std::string_view tok, int line) {
  auto v = detail::parse_uint<std::size_t>(tok);
  if (!v) throw ParseError("expected a non-negative integer, got '" + std::string(tok) + "'", line);
  return *v;
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view text, const std::string& base_dir) {
  ScenarioConfig cfg;
  EventTable symbols;
  detail::for_each_line(text, [&](int line, const std::vector<std::string_view>& t) {
    const auto& kw = t[0];
    auto arity = [&](std::size_t lo, std::size_t hi) {
      if (t.size() < lo + 1 || t.size() > hi + 1)
        throw ParseError("wrong number of arguments to '" + std::string(kw) + "'", line);
    };
    if (kw == "primary" || kw == "backup") {
      arity(1, 1);
      auto m = load_machine(resolve(base_dir, t[1]), &symbols);
      (kw == "primary" ? cfg.primaries : cfg.backups).push_back(std::move(m));
    } else if (kw == "auto-fuse") {
      if (t.size() != 2 && t.size() != 4) throw ParseError("auto-fuse takes <f> or <f> <ds> <de>", line);
      cfg.auto_fuse = static_cast<int>(need_uint(t[1], line));
      if (t.size() == 4) {
        cfg.fuse_options.delta_states = static_cast<int>(need_uint(t[2], line));
        cfg.fuse_options.delta_events = static_cast<int>(need_uint(t[3], line));
      }
    } else if (kw == "events") {
      for (std::size_t i = 1; i < t.size(); ++i) cfg.events.push_back(symbols.resolve(t[i]));
    } else if (kw == "random-events") {
      arity(1, 1);
      cfg.random_events = need_uint(t[1], line);
    } else if (kw == "seed") {
      arity(1, 1);
      cfg.seed = need_uint(t[1], line);
    } else if (kw == "budget") {
      arity(1, 1);
      cfg.budget = static_cast<int>(need_uint(t[1], line));
    } else if (kw == "detect-interval") {
      arity(1, 1);
      cfg.detect_interval = need_uint(t[1], line);
    } else if (kw == "lsh") {
      arity(3, 3);
      cfg.lsh.k = static_cast<int>(need_uint(t[1], line));
      cfg.lsh.L = static_cast<int>(need_uint(t[2], line));
      try {
        cfg.lsh.delta = std::stod(std::string(t[3]));
      } catch (const std::exception&) {
        throw ParseError("bad delta '" + std::string(t[3]) + "'", line);
      }
    } else if (kw == "fault") {
      if (t.size() < 4 || t.size() > 5) throw ParseError("fault takes <time> <machine> <kind> [lie-state]", line);
      FaultSpec fs;
      fs.time = need_uint(t[1], line);
      fs.machine = std::string(t[2]);
      if (t[3] == "crash") {
        fs.kind = FaultKind::Crash;
        if (t.size() == 5) throw ParseError("crash faults take no lie state", line);
      } else if (t[3] == "byzantine") {
        fs.kind = FaultKind::Byzantine;
        if (t.size() == 5) fs.lie_state = std::string(t[4]);
      } else {
        throw ParseError("unknown fault kind '" + std::string(t[3]) + "'", line);
      }
      cfg.faults.push_back(std::move(fs));
    } else {
      throw ParseError("unknown keyword '" + std::string(kw) + "'", line);
    }
  });
  if (cfg.primaries.empty()) throw ParseError("scenario declares no primaries");
  if (cfg.auto_fuse && !cfg.backups.empty()) throw ParseError("auto-fuse and backup lines are exclusive");
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  auto base = std::filesystem::path(path).parent_path().string();
  return parse_scenario(detail::read_file(path), base.empty() ? "." : base);
}

std::string_view to_string(EpisodeKind k) {
  switch (k) {
    case EpisodeKind::CrashCorrection: return "crash-correct";
    case EpisodeKind::ByzDetection: return "byz-detect";
    case EpisodeKind::ByzCorrection: return "byz-correct";
  }
  return "?";
}

namespace {

std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

}  // namespace

SimReport run_scenario(const ScenarioConfig& cfg) {
  auto start = std::chrono::steady_clock::now();
  auto idx = rcp(cfg.primaries);

  FusionSet fs;
  if (cfg.auto_fuse) {
    fs = gen_fusion(idx, *cfg.auto_fuse, cfg.fuse_options);
  } else {
    for (const auto& m : cfg.backups) {
      auto p = map_states(idx, m);
      fs.backups.push_back({m, p, m.events()});
    }
    fs.f = static_cast<int>(fs.backups.size());
  }

  const std::size_t n = idx.arity();
  const std::size_t f = fs.backups.size();
  SimReport rep;
  rep.n = n;
  rep.f = f;
  rep.budget = cfg.budget.value_or(static_cast<int>(f));
  const std::size_t budget = static_cast<std::size_t>(std::max(0, rep.budget));

  auto ri = build_index(idx, fs, cfg.lsh);

  // Roster: primaries then backups. Backup states are tracked as block ids.
  std::vector<const Machine*> roster;
  for (const auto& m : idx.primaries()) roster.push_back(&m);
  for (const auto& b : fs.backups) roster.push_back(&b.machine);
  std::map<std::string, std::size_t> by_name;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    if (!by_name.emplace(roster[i]->name(), i).second)
      throw ValidationError("duplicate machine name '" + roster[i]->name() + "'");
    rep.machines.push_back(roster[i]->name());
  }
  // Machine state -> block of the fusion partition, per backup.
  std::vector<std::vector<std::uint32_t>> block_of_state(f);
  for (std::size_t j = 0; j < f; ++j) {
    const auto& b = fs.backups[j];
    for (StateId s = 0; s < b.machine.num_states(); ++s) {
      auto blk = b.partition.find_label(b.machine.state_name(s));
      block_of_state[j].push_back(blk ? *blk : b.partition.num_blocks);
    }
  }

  EventSequence events = cfg.events;
  std::mt19937_64 rng(cfg.seed);
  if (cfg.random_events) {
    events.clear();
    const auto& sigma = idx.sigma();
    if (!sigma.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, sigma.size() - 1);
      for (std::size_t i = 0; i < *cfg.random_events; ++i) events.push_back(sigma[pick(rng)]);
    }
  }
  rep.events = events.size();

  std::vector<FaultSpec> faults = cfg.faults;
  for (const auto& ft : faults) {
    if (!by_name.count(ft.machine)) throw ValidationError("fault names unknown machine '" + ft.machine + "'");
    if (ft.time > events.size()) throw ValidationError("fault time beyond the end of the event stream");
  }
  std::stable_sort(faults.begin(), faults.end(), [](const auto& a, const auto& b) { return a.time < b.time; });

  std::vector<StateId> truth;
  for (auto* m : roster) truth.push_back(m->initial());
  StateId r = idx.rcp().initial();

  auto true_tuple = [&] {
    auto t = idx.tuple_of(r);
    return Tuple(t.begin(), t.end());
  };
  auto fusion_block = [&](std::size_t j, StateId machine_state) { return block_of_state[j][machine_state]; };

  std::size_t next_fault = 0;
  for (std::size_t time = 0; time <= events.size(); ++time) {
    std::vector<std::size_t> crashed;
    std::vector<std::pair<std::size_t, std::string>> liars;
    for (; next_fault < faults.size() && faults[next_fault].time == time; ++next_fault) {
      const auto& ft = faults[next_fault];
      auto who = by_name.at(ft.machine);
      if (ft.kind == FaultKind::Crash) {
        if (std::find(crashed.begin(), crashed.end(), who) == crashed.end()) crashed.push_back(who);
      } else {
        liars.emplace_back(who, ft.lie_state);
      }
    }

    if (!crashed.empty()) {
      Episode ep;
      ep.kind = EpisodeKind::CrashCorrection;
      ep.time = time;
      for (auto c : crashed) ep.faulty.push_back(roster[c]->name());
      ep.over_budget = crashed.size() > budget;
      ep.acquired = n + f - crashed.size();
      PartialTuple q(n);
      std::vector<FusionReading> avail;
      for (std::size_t i = 0; i < n + f; ++i) {
        if (std::find(crashed.begin(), crashed.end(), i) != crashed.end()) continue;
        if (i < n)
          q[i] = truth[i];
        else
          avail.push_back({i - n, fusion_block(i - n, truth[i])});
      }
      auto expect = true_tuple();
      ep.true_tuple = idx.tuple_label(r);
      try {
        auto got = correct_crash(ri, avail, q, &rep.queries);
        ep.recovered = got == expect;
        auto gs = idx.state_of(got);
        ep.recovered_tuple = gs ? idx.tuple_label(*gs) : "?";
        if (!ep.recovered) ep.note = "recovered the wrong tuple";
      } catch (const RecoveryError& e) {
        ep.note = e.what();
      }
      // Crashed machines restart from their true state either way.
      if (!ep.over_budget && !ep.recovered) rep.sound = false;
      rep.correction_messages += ep.acquired;
      rep.episodes.push_back(std::move(ep));
    }

    bool periodic = cfg.detect_interval > 0 && time > 0 && time % cfg.detect_interval == 0;
    if (!liars.empty() || periodic) {
      // Snapshot: every machine reports, liars replace their state.
      std::vector<StateId> claimed = truth;
      std::vector<std::string> lying;
      for (auto& [who, lie] : liars) {
        const auto* m = roster[who];
        StateId c = truth[who];
        if (!lie.empty()) {
          auto s = m->find_state(lie);
          c = s ? *s : static_cast<StateId>(m->num_states());
        } else if (m->num_states() > 1) {
          std::uniform_int_distribution<StateId> pick(0, static_cast<StateId>(m->num_states() - 2));
          c = pick(rng);
          if (c >= truth[who]) ++c;
        }
        claimed[who] = c;
        if (c != truth[who]) lying.push_back(m->name());
      }
      Tuple rt(claimed.begin(), claimed.begin() + static_cast<std::ptrdiff_t>(n));
      std::vector<StateId> fstates;
      for (std::size_t j = 0; j < f; ++j) {
        StateId c = claimed[n + j];
        fstates.push_back(c < block_of_state[j].size() ? fusion_block(j, c) : static_cast<StateId>(ri.num_states(j)));
      }

      Episode det;
      det.kind = EpisodeKind::ByzDetection;
      det.time = time;
      det.faulty = lying;
      det.acquired = n + f;
      det.over_budget = lying.size() > budget;
      det.detected = detect_byz(ri, fstates, rt);
      det.true_tuple = idx.tuple_label(r);
      if (!det.over_budget && det.detected != !lying.empty()) rep.sound = false;
      rep.detection_messages += det.acquired;
      bool detected = det.detected;
      rep.episodes.push_back(std::move(det));

      if (detected) {
        Episode ep;
        ep.kind = EpisodeKind::ByzCorrection;
        ep.time = time;
        ep.faulty = lying;
        ep.acquired = 0;
        ep.over_budget = lying.size() > budget / 2;
        ep.true_tuple = idx.tuple_label(r);
        try {
          auto res = correct_byz(ri, fstates, rt, &rep.queries);
          ep.votes = res.votes;
          ep.recovered = res.tuple == true_tuple();
          auto gs = idx.state_of(res.tuple);
          ep.recovered_tuple = gs ? idx.tuple_label(*gs) : "?";
          if (!ep.recovered) ep.note = "recovered the wrong tuple";
        } catch (const RecoveryError& e) {
          ep.note = e.what();
        }
        if (!ep.over_budget && !ep.recovered) rep.sound = false;
        rep.episodes.push_back(std::move(ep));
      }
    }

    if (time == events.size()) break;
    Event e = events[time];
    for (std::size_t i = 0; i < roster.size(); ++i) truth[i] = roster[i]->step(truth[i], e);
    r = idx.rcp().step(r, e);
  }

  for (std::size_t i = 0; i < roster.size(); ++i) rep.final_states.push_back(roster[i]->state_name(truth[i]));
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

AuditRecord message_audit(const SimReport& report) {
  AuditRecord a;
  for (const auto& ep : report.episodes) {
    std::size_t expect = 0;
    switch (ep.kind) {
      case EpisodeKind::ByzDetection:
        expect = report.n + report.f;
        a.detection_messages += ep.acquired;
        break;
      case EpisodeKind::CrashCorrection:
        expect = report.n + report.f - ep.faulty.size();
        a.correction_messages += ep.acquired;
        break;
      case EpisodeKind::ByzCorrection:
        expect = 0;
        a.correction_messages += ep.acquired;
        break;
    }
    if (ep.acquired != expect) {
      a.ok = false;
      a.failures.push_back(std::string(to_string(ep.kind)) + " at " + std::to_string(ep.time) + " acquired " +
                           std::to_string(ep.acquired) + ", expected " + std::to_string(expect));
    }
  }
  if (a.detection_messages != report.detection_messages || a.correction_messages != report.correction_messages) {
    a.ok = false;
    a.failures.push_back("message counters disagree with the episode log");
  }
  return a;
}

std::string format_report(const SimReport& rep) {
  std::ostringstream os;
  os << "# n=" << rep.n << " f=" << rep.f << " budget=" << rep.budget << " events=" << rep.events
     << " detection_messages=" << rep.detection_messages << " correction_messages=" << rep.correction_messages
     << " lsh_fallbacks=" << rep.queries.fallbacks << " sound=" << (rep.sound ? "yes" : "no")
     << " wall_ms=" << rep.wall_ms << "\n";
  os << "# machine\tfinal_state\n";
  for (std::size_t i = 0; i < rep.machines.size(); ++i) os << rep.machines[i] << '\t' << rep.final_states[i] << '\n';
  os << "# kind\ttime\tfaulty\tacquired\tover_budget\tdetected\trecovered\tvotes\trecovered_tuple\ttrue_tuple\tnote\n";
  for (const auto& ep : rep.episodes) {
    os << to_string(ep.kind) << '\t' << ep.time << '\t' << (ep.faulty.empty() ? "-" : join(ep.faulty, ',')) << '\t'
       << ep.acquired << '\t' << (ep.over_budget ? "yes" : "no") << '\t' << (ep.detected ? "yes" : "no") << '\t'
       << (ep.recovered ? "yes" : "no") << '\t' << ep.votes << '\t'
       << (ep.recovered_tuple.empty() ? "-" : ep.recovered_tuple) << '\t' << ep.true_tuple << '\t'
       << (ep.note.empty() ? "-" : ep.note) << '\n';
  }
  return os.str();
}

}  // namespace fsmfusion
