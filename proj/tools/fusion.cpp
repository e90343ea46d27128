// Command-line front end for the fsmfusion library.
//
// Exit status: 0 on success, 1 on usage or input errors, 2 when an
// invariant does not hold (unverifiable fusion, ambiguous recovery, ...).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "fsmfusion/bench.hpp"
#include "fsmfusion/error.hpp"
#include "fsmfusion/fault_graph.hpp"
#include "fsmfusion/fusion.hpp"
#include "fsmfusion/partition.hpp"
#include "fsmfusion/recovery.hpp"
#include "fsmfusion/sim.hpp"

namespace fs = std::filesystem;
using namespace fsmfusion;

namespace {

constexpr int kUsage = 1;
constexpr int kInvariant = 2;

struct Invariant : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<Machine> load_all(const std::vector<std::string>& paths, EventTable& symbols) {
  std::vector<Machine> out;
  for (const auto& p : paths) out.push_back(load_machine(p, &symbols));
  return out;
}

std::string join_events(const std::vector<Event>& ev) {
  std::string s;
  for (std::size_t i = 0; i < ev.size(); ++i) s += (i ? "," : "") + std::to_string(ev[i]);
  return s.empty() ? "-" : s;
}

std::string blocks_text(const RcpIndex& idx, const BlockPartition& p) {
  std::string s;
  for (const auto& b : p.blocks()) {
    s += "{";
    for (std::size_t i = 0; i < b.size(); ++i) s += (i ? "," : "") + idx.rcp().state_name(b[i]);
    s += "}";
  }
  return s;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << text;
}

// -- parse ------------------------------------------------------------------

int cmd_parse(const std::string& path, bool check) {
  auto ext = fs::path(path).extension().string();
  if (ext == ".kiss2" || ext == ".kiss") {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    auto res = parse_kiss2(ss.str(), fs::path(path).stem().string());
    if (check) {
      std::cout << res.machine.num_states() << " states, " << res.machine.num_events() << " events";
      if (res.unspecified) std::cout << " (" << res.unspecified << " unspecified transitions left as self-loops)";
      std::cout << "\n";
    } else {
      std::cout << serialize(res.machine);
    }
    return 0;
  }
  auto m = load_machine(path);
  if (check)
    std::cout << m.num_states() << " states, " << m.num_events() << " events\n";
  else
    std::cout << serialize(m);
  return 0;
}

// -- dump-rcp ---------------------------------------------------------------

int cmd_dump_rcp(const std::vector<std::string>& files, bool lattice, std::size_t cap) {
  EventTable sym;
  auto prim = load_all(files, sym);
  auto idx = rcp(prim);
  std::cout << dump_rcp(idx);
  if (lattice) {
    auto all = enumerate_closed_partitions(idx, cap);
    std::cout << "# closed partitions: " << all.size() << "\n";
    std::cout << "# blocks\tevents\tpartition\n";
    for (const auto& p : all)
      std::cout << p.num_blocks << '\t' << join_events(acting_events(idx, p)) << '\t' << blocks_text(idx, p) << '\n';
  }
  return 0;
}

// -- analyze ----------------------------------------------------------------

int cmd_analyze(const std::vector<std::string>& files, const std::vector<std::string>& backups, int f,
                std::size_t max_edges) {
  EventTable sym;
  auto prim = load_all(files, sym);
  auto back = load_all(backups, sym);
  auto idx = rcp(prim);
  auto parts = primary_partitions(idx);
  for (const auto& b : back) parts.push_back(map_states(idx, b));
  auto g = build_fault_graph(idx, parts);
  auto d = dmin(g);
  auto weak = weakest_edges(g);

  std::cout << "# rcp_states\tevents\tmachines\tdmin\tweakest_edges\tcrash_correctable\tbyz_correctable\n";
  std::cout << idx.size() << '\t' << idx.sigma().size() << '\t' << parts.size() << '\t'
            << (d == kInfiniteDistance ? std::string("inf") : std::to_string(d)) << '\t' << weak.size() << '\t';
  if (d == kInfiniteDistance)
    std::cout << "any\tany\n";
  else
    std::cout << (d == 0 ? 0 : d - 1) << '\t' << (d == 0 ? 0 : (d - 1) / 2) << '\n';
  if (f >= 0)
    std::cout << "# f=" << f << " crash=" << (can_correct_crash(g, f) ? "yes" : "no")
              << " byzantine=" << (can_correct_byz(g, f) ? "yes" : "no") << "\n";

  std::cout << "# machine\tstates\tevents\tcovers_weakest\tpartition\n";
  for (const auto& p : parts) {
    std::size_t c = 0;
    for (auto e : weak) c += covers(p, e);
    std::cout << p.machine_name << '\t' << p.num_blocks << '\t' << join_events(acting_events(idx, p)) << '\t' << c
              << '/' << weak.size() << '\t' << blocks_text(idx, p) << '\n';
  }
  std::cout << "# weakest_edge\tu_tuple\tv_tuple\n";
  for (std::size_t i = 0; i < weak.size() && i < max_edges; ++i) {
    auto [u, v] = weak[i];
    std::cout << idx.rcp().state_name(u) << '-' << idx.rcp().state_name(v) << '\t' << idx.tuple_label(u) << '\t'
              << idx.tuple_label(v) << '\n';
  }
  if (weak.size() > max_edges) std::cout << "# ... " << weak.size() - max_edges << " more\n";
  return 0;
}

// -- fuse -------------------------------------------------------------------

int cmd_fuse(const std::vector<std::string>& files, int f, const FusionOptions& opts, bool incremental,
             const std::string& out_dir) {
  EventTable sym;
  auto prim = load_all(files, sym);
  auto idx = rcp(prim, opts.state_limit);
  auto result = incremental ? inc_fusion(prim, f, opts) : gen_fusion(idx, f, opts);
  auto verified = verify_fusion(idx, result);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ostringstream manifest;
    manifest << "# fusion set: f=" << f << " ds=" << opts.delta_states << " de=" << opts.delta_events
             << (incremental ? " incremental" : "") << "\n";
    for (const auto& p : files) manifest << "primary " << fs::absolute(p).string() << "\n";
    for (const auto& b : result.backups) {
      auto name = b.machine.name() + ".fsm";
      write_file(fs::path(out_dir) / name, serialize(b.machine));
      manifest << "backup " << name << "\n";
    }
    write_file(fs::path(out_dir) / "manifest.txt", manifest.str());
  }

  std::cout << "# backup\tstates\tevents\tevent_set\n";
  for (const auto& b : result.backups)
    std::cout << b.machine.name() << '\t' << b.machine.num_states() << '\t' << b.events.size() << '\t'
              << join_events(b.events) << '\n';
  std::cout << "# rcp_states\tprimary_events\tf\tds\tde\tdmin_before\tdmin_after\tverified_dmin\n";
  std::cout << idx.size() << '\t' << idx.sigma().size() << '\t' << f << '\t' << opts.delta_states << '\t'
            << opts.delta_events << '\t' << result.dmin_before << '\t' << result.dmin_after << '\t' << verified
            << '\n';
  if (!result.trace.empty()) {
    std::cout << "# iteration\tdmin_before\tweakest_edges\tstate_rounds\tevent_rounds\tminimality_steps\ttruncated\n";
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
      const auto& t = result.trace[i];
      auto rounds = [](const std::vector<std::size_t>& v, bool early) {
        std::string s;
        for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
        if (early) s += s.empty() ? "stop" : ",stop";
        return s.empty() ? std::string("-") : s;
      };
      std::cout << i + 1 << '\t' << t.dmin_before << '\t' << t.weakest.size() << '\t'
                << rounds(t.state_rounds, t.state_exit_early) << '\t' << rounds(t.event_rounds, t.event_exit_early)
                << '\t' << t.minimality_steps << '\t' << t.truncated << '\n';
    }
  }
  if (!result.rounds.empty()) {
    std::cout << "# round\tinputs\trcp_states\tbackups\n";
    for (std::size_t i = 0; i < result.rounds.size(); ++i) {
      const auto& r = result.rounds[i];
      std::string shapes;
      for (auto [s, e] : r.backup_shapes) shapes += (shapes.empty() ? "" : ",") + std::to_string(s) + "x" + std::to_string(e);
      std::cout << i + 1 << '\t' << r.inputs[0] << "+" << r.inputs[1] << '\t' << r.rcp_states << '\t'
                << (shapes.empty() ? "-" : shapes) << '\n';
    }
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  if (f > 0 && verified <= static_cast<std::uint32_t>(f)) throw Invariant("fusion does not verify: dmin " + std::to_string(verified));
  return 0;
}

// -- recover ----------------------------------------------------------------

int cmd_recover(const std::string& dir, const std::string& snapshot, const std::string& mode, const LshOptions& lsh) {
  auto manifest = fs::path(dir) / "manifest.txt";
  auto cfg = load_scenario(manifest.string());
  auto idx = rcp(cfg.primaries);
  FusionSet fset;
  for (const auto& b : cfg.backups) fset.backups.push_back({b, map_states(idx, b), b.events()});
  fset.f = static_cast<int>(fset.backups.size());
  auto ri = build_index(idx, fset, lsh);

  // Snapshot: one "<machine> <state|MISSING>" line per machine.
  std::map<std::string, std::string> snap;
  {
    std::ifstream in(snapshot);
    if (!in) throw Error("cannot open '" + snapshot + "'");
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
      std::istringstream ls(line);
      std::string name, state, extra;
      if (!(ls >> name)) continue;
      if (!(ls >> state) || (ls >> extra)) throw ParseError("expected '<machine> <state|MISSING>'", no);
      if (!snap.emplace(name, state).second) throw ParseError("machine '" + name + "' listed twice", no);
    }
  }
  auto lookup = [&](const Machine& m) -> std::optional<StateId> {
    auto it = snap.find(m.name());
    if (it == snap.end()) throw Error("snapshot has no line for '" + m.name() + "'");
    if (it->second == "MISSING") return std::nullopt;
    return m.state_id(it->second);
  };

  const std::size_t n = idx.arity();
  PartialTuple q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = lookup(idx.primaries()[i]);
  std::vector<std::optional<StateId>> fstate;
  for (std::size_t j = 0; j < fset.backups.size(); ++j) {
    const auto& b = fset.backups[j];
    auto s = lookup(b.machine);
    if (s) s = b.partition.find_label(b.machine.state_name(*s)).value();
    fstate.push_back(s);
  }

  QueryStats stats;
  auto print_tuple = [&](const Tuple& t) {
    auto r = idx.state_of(t);
    std::cout << "tuple\t" << (r ? idx.tuple_label(*r) : "?") << "\n";
    for (std::size_t i = 0; i < n; ++i) std::cout << idx.primaries()[i].name() << '\t' << idx.primaries()[i].state_name(t[i]) << '\n';
    if (r)
      for (const auto& b : fset.backups) std::cout << b.machine.name() << '\t' << b.partition.label(b.partition.block_of[*r]) << '\n';
  };

  int rc = 0;
  if (mode == "crash") {
    std::vector<FusionReading> avail;
    for (std::size_t j = 0; j < fstate.size(); ++j)
      if (fstate[j]) avail.push_back({j, *fstate[j]});
    auto t = correct_crash(ri, avail, q, &stats);
    std::cout << "acquired\t" << n - missing_count(q) + avail.size() << "\n";
    print_tuple(t);
  } else if (mode == "byz-detect" || mode == "byz-correct") {
    if (missing_count(q) > 0) throw Error("Byzantine modes need every primary's state");
    std::vector<StateId> fs_ids;
    for (auto& s : fstate) {
      if (!s) throw Error("Byzantine modes need every fusion's state");
      fs_ids.push_back(*s);
    }
    Tuple r;
    for (auto& s : q) r.push_back(*s);
    bool liar = detect_byz(ri, fs_ids, r);
    std::cout << "acquired\t" << n + fs_ids.size() << "\n";
    std::cout << "detected\t" << (liar ? "yes" : "no") << "\n";
    if (mode == "byz-correct") {
      auto res = correct_byz(ri, fs_ids, r, &stats);
      std::cout << "votes\t" << res.votes << "/" << res.threshold << "\n";
      print_tuple(res.tuple);
    }
  } else {
    throw CLI::ValidationError("--mode", "expected crash, byz-detect or byz-correct");
  }
  std::cout << "# k=" << ri.k() << " L=" << ri.L() << " gamma=" << ri.gamma() << " queries=" << stats.queries
            << " tables_probed=" << stats.tables_probed << " tables_skipped=" << stats.tables_skipped
            << " lsh_candidates=" << stats.lsh_candidates << " fallbacks=" << stats.fallbacks
            << " stored_points=" << ri.stored_points() << "\n";
  return rc;
}

// -- simulate ---------------------------------------------------------------

int cmd_simulate(const std::string& scenario, std::optional<std::uint64_t> seed) {
  auto cfg = load_scenario(scenario);
  if (seed) cfg.seed = *seed;
  auto rep = run_scenario(cfg);
  std::cout << format_report(rep);
  auto audit = message_audit(rep);
  for (const auto& f : audit.failures) std::cerr << "audit: " << f << "\n";
  if (!rep.sound || !audit.ok) throw Invariant("simulation found an in-budget episode that did not recover");
  return 0;
}

// -- bench ------------------------------------------------------------------

int cmd_bench(const std::string& dir, const std::string& triples_path, std::size_t generate, std::uint64_t seed,
              const BenchOptions& opts) {
  std::vector<Triple> triples;
  if (!triples_path.empty()) {
    std::ifstream in(triples_path);
    if (!in) throw Error("cannot open '" + triples_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    triples = parse_triples(ss.str());
  }
  if (generate > 0) {
    std::vector<std::string> names;
    for (const auto& m : benchmark_machines()) names.push_back(m.name);
    auto more = generate_triples(names, generate, seed);
    triples.insert(triples.end(), more.begin(), more.end());
  }
  if (triples.empty())
    for (const auto& r : reference_rows()) triples.push_back(r.machines);
  auto rows = bench(dir, triples, opts);
  std::cout << format_bench(rows);
  for (const auto& r : rows)
    if (r.status == "FAIL") throw Invariant("row " + r.machines + " failed verification");
  return 0;
}

// -- decompose --------------------------------------------------------------

int cmd_decompose(const std::string& path, int e, const std::string& out_dir) {
  auto m = load_machine(path);
  auto d = event_decompose(m, e);
  std::cout << "# machine\tstates\tevents\tevent_set\n";
  for (const auto& p : d.parts)
    std::cout << p.machine.name() << '\t' << p.machine.num_states() << '\t' << p.events.size() << '\t'
              << join_events(p.events) << '\n';
  std::cout << "# frontier=" << d.frontier << " exists=" << (d.exists ? "yes" : "no") << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    for (const auto& p : d.parts) write_file(fs::path(out_dir) / (p.machine.name() + ".fsm"), serialize(p.machine));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fused backup state machines: synthesis, analysis and recovery"};
  app.require_subcommand(1);

  std::string file, dir, out, mode = "crash", snapshot, scenario, triples;
  std::vector<std::string> files, backups;
  bool check = false, lattice = false, incremental = false, direct_only = false;
  std::size_t lattice_cap = 12, max_edges = 50, generate = 0;
  int f = 1, e = 1, analyze_f = -1;
  FusionOptions fo;
  LshOptions lsh;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> sim_seed;
  BenchOptions bo;

  auto* parse = app.add_subcommand("parse", "Parse a machine file (native or KISS2)");
  parse->add_option("file", file, "Machine file")->required()->check(CLI::ExistingFile);
  parse->add_flag("--check", check, "Print a one-line summary instead of the machine");

  auto* dump = app.add_subcommand("dump-rcp", "Print the reachable cross product of the primaries");
  dump->add_option("files", files, "Primary machine files")->required()->check(CLI::ExistingFile);
  dump->add_flag("--dump-lattice", lattice, "Also list every closed partition");
  dump->add_option("--lattice-cap", lattice_cap, "Largest product for --dump-lattice");

  auto* analyze = app.add_subcommand("analyze", "Fault-graph report: dmin, weakest edges, coverage");
  analyze->add_option("files", files, "Primary machine files")->required()->check(CLI::ExistingFile);
  analyze->add_option("--backup", backups, "Backup machine files")->check(CLI::ExistingFile);
  analyze->add_option("--f", analyze_f, "Also report whether f faults are correctable");
  analyze->add_option("--max-edges", max_edges, "Weakest edges to list");

  auto* fuse = app.add_subcommand("fuse", "Synthesize f fused backups");
  fuse->add_option("files", files, "Primary machine files")->required()->check(CLI::ExistingFile);
  fuse->add_option("--f", f, "Crash faults to tolerate")->check(CLI::NonNegativeNumber);
  fuse->add_option("--ds", fo.delta_states, "State-reduction rounds")->check(CLI::NonNegativeNumber);
  fuse->add_option("--de", fo.delta_events, "Event-reduction rounds")->check(CLI::NonNegativeNumber);
  fuse->add_option("--frontier-cap", fo.frontier_cap, "Candidate frontier limit (0 = none)");
  fuse->add_option("--state-limit", fo.state_limit, "Largest product to build");
  fuse->add_flag("--incremental", incremental, "Fuse one primary at a time");
  fuse->add_option("--out", out, "Directory for backup files and manifest.txt");

  auto* recover = app.add_subcommand("recover", "Detect or correct faults from a state snapshot");
  recover->add_option("dir", dir, "Directory written by 'fuse --out'")->required()->check(CLI::ExistingDirectory);
  recover->add_option("--snapshot", snapshot, "Lines of '<machine> <state|MISSING>'")->required()->check(CLI::ExistingFile);
  recover->add_option("--mode", mode, "crash, byz-detect or byz-correct")
      ->check(CLI::IsMember({"crash", "byz-detect", "byz-correct"}));
  recover->add_option("--k", lsh.k, "Coordinates per LSH function (0 = ceil(n/2))");
  recover->add_option("--L", lsh.L, "LSH tables (0 = derive from delta)");
  recover->add_option("--delta", lsh.delta, "Target LSH miss probability");
  recover->add_option("--seed", lsh.seed, "Seed for coordinate sampling");

  auto* simulate = app.add_subcommand("simulate", "Run a fault-injection scenario");
  simulate->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim_seed, "Override the scenario seed");

  auto* benchc = app.add_subcommand("bench", "Fusion vs replication on KISS2 benchmark triples");
  benchc->add_option("--dir", dir, "Directory of <name>.kiss2 files")->required();
  benchc->add_option("--triples", triples, "File with one triple per line")->check(CLI::ExistingFile);
  benchc->add_option("--generate", generate, "Add this many random triples of the listed machines");
  benchc->add_option("--seed", seed, "Seed for --generate");
  benchc->add_option("--f", bo.f, "Crash faults")->check(CLI::NonNegativeNumber);
  benchc->add_option("--ds", bo.delta_states, "State-reduction rounds")->check(CLI::NonNegativeNumber);
  benchc->add_option("--de", bo.delta_events, "Event-reduction rounds")->check(CLI::NonNegativeNumber);
  benchc->add_option("--frontier-cap", bo.frontier_cap, "Candidate frontier limit (0 = none)");
  benchc->add_flag("--incremental", incremental, "Report incremental synthesis only");
  benchc->add_flag("--direct", direct_only, "Report direct synthesis only");

  auto* decompose = app.add_subcommand("decompose", "Event-based decomposition of one machine");
  decompose->add_option("file", file, "Machine file")->required()->check(CLI::ExistingFile);
  decompose->add_option("--e", e, "Events to drop per part")->check(CLI::NonNegativeNumber);
  decompose->add_option("--out", out, "Directory for the parts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int rc = app.exit(err);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*parse) return cmd_parse(file, check);
    if (*dump) return cmd_dump_rcp(files, lattice, lattice_cap);
    if (*analyze) return cmd_analyze(files, backups, analyze_f, max_edges);
    if (*fuse) return cmd_fuse(files, f, fo, incremental, out);
    if (*recover) return cmd_recover(dir, snapshot, mode, lsh);
    if (*simulate) return cmd_simulate(scenario, sim_seed);
    if (*benchc) {
      if (incremental && direct_only) throw CLI::ValidationError("--incremental", "conflicts with --direct");
      bo.incremental = !direct_only;
      bo.direct = !incremental;
      return cmd_bench(dir, triples, generate, seed, bo);
    }
    if (*decompose) return cmd_decompose(file, e, out);
  } catch (const CLI::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const Invariant& err) {
    std::cerr << "invariant violated: " << err.what() << "\n";
    return kInvariant;
  } catch (const RecoveryError& err) {
    std::cerr << "recovery failed: " << err.what() << "\n";
    return kInvariant;
  } catch (const InconsistencyError& err) {
    std::cerr << "inconsistent: " << err.what() << "\n";
    return kInvariant;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
