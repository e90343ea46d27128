#include "fsmfusion/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "fsmfusion/error.hpp"
#include "text_util.hpp"

namespace fsmfusion {

namespace {

const ReferenceRow kRows[] = {
    {{"dk15", "bbara", "mc"}, 25600, 19600, 23.44, 16, 10, 37.5},
    {{"lion", "bbtas", "mc"}, 9216, 8464, 8.16, 8, 7, 12.5},
    {{"lion", "tav", "modulo12"}, 36864, 9216, 75, 16, 16, 0},
    {{"lion", "bbara", "mc"}, 25600, 25600, 0, 16, 9, 43.75},
    {{"tav", "beecount", "lion"}, 12544, 10816, 13.78, 16, 16, 0},
    {{"mc", "bbtas", "shiftreg"}, 36864, 26896, 27.04, 8, 7, 12.5},
    {{"tav", "bbara", "mc"}, 25600, 25600, 0, 16, 16, 0},
    {{"dk15", "modulo12", "mc"}, 36864, 28224, 23.44, 8, 8, 0},
    {{"modulo12", "lion", "mc"}, 36864, 36864, 0, 8, 7, 12.5},
};

const BenchmarkMachine kMachines[] = {
    {"dk15", 4, 8},  {"bbara", 10, 16},    {"mc", 4, 8},      {"lion", 4, 4},     {"bbtas", 6, 4},
    {"tav", 4, 16},  {"modulo12", 12, 2}, {"beecount", 7, 8}, {"shiftreg", 8, 2},
};

double ms_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
}

std::uint64_t fusion_space(const FusionSet& fs) {
  std::uint64_t p = 1;
  for (const auto& b : fs.backups) p *= b.machine.num_states();
  return p;
}

bool near(double got, double want, double tol) {
  if (want == 0) return got == 0;
  return std::fabs(got - want) <= tol * std::fabs(want);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

}  // namespace

std::span<const ReferenceRow> reference_rows() { return kRows; }
std::span<const BenchmarkMachine> benchmark_machines() { return kMachines; }

const ReferenceRow* find_reference(const Triple& t) {
  for (const auto& r : kRows)
    if (r.machines == t) return &r;
  return nullptr;
}

void fill_columns(BenchRow& row, std::span<const Machine> primaries, const RcpIndex& idx, const FusionSet& fs) {
  std::uint64_t prod = 1;
  for (const auto& m : primaries) prod *= m.num_states();
  row.replication_state_space = 1;
  for (int i = 0; i < fs.f; ++i) row.replication_state_space *= prod;
  row.fusion_state_space = fusion_space(fs);
  row.rcp_states = idx.size();
  row.primary_events = idx.sigma().size();
  double states = 0, events = 0;
  for (const auto& b : fs.backups) {
    states += static_cast<double>(b.machine.num_states());
    events += static_cast<double>(b.events.size());
  }
  const double m = static_cast<double>(std::max<std::size_t>(1, fs.backups.size()));
  row.avg_fusion_events = fs.backups.empty() ? 0 : events / m;
  const double rep = static_cast<double>(row.replication_state_space);
  row.savings_pct = rep > 0 ? (rep - static_cast<double>(row.fusion_state_space)) * 100.0 / rep : 0;
  const double sig = static_cast<double>(row.primary_events);
  row.event_reduction_pct = sig > 0 && !fs.backups.empty() ? (sig - row.avg_fusion_events) * 100.0 / sig : 0;
  row.rho = states > 0 ? static_cast<double>(idx.size()) / (states / m) : 0;
  row.beta = row.avg_fusion_events > 0 ? sig / row.avg_fusion_events : 0;
}

BenchRow bench_row(std::span<const Machine> primaries, const BenchOptions& opts) {
  BenchRow row;
  for (std::size_t i = 0; i < primaries.size(); ++i) row.machines += (i ? "," : "") + primaries[i].name();

  FusionOptions fo;
  fo.delta_states = opts.delta_states;
  fo.delta_events = opts.delta_events;
  fo.frontier_cap = opts.frontier_cap;
  fo.state_limit = opts.state_limit;

  auto idx = rcp(primaries, opts.state_limit);
  std::optional<FusionSet> direct, inc;
  if (opts.direct) {
    auto t = std::chrono::steady_clock::now();
    direct = gen_fusion(idx, opts.f, fo);
    row.direct_ms = ms_since(t);
    row.direct_fusion_state_space = fusion_space(*direct);
  }
  if (opts.incremental) {
    auto t = std::chrono::steady_clock::now();
    inc = inc_fusion(primaries, opts.f, fo);
    row.incremental_ms = ms_since(t);
    row.incremental_fusion_state_space = fusion_space(*inc);
  }
  const FusionSet* shown = inc ? &*inc : direct ? &*direct : nullptr;
  if (!shown) {
    row.status = "SKIP";
    row.note = "neither direct nor incremental synthesis requested";
    return row;
  }
  row.source = inc ? "incremental" : "direct";
  fill_columns(row, primaries, idx, *shown);

  // Both outputs must verify on the full product; rows never carry unverified backups.
  row.verified = true;
  row.dmin = kInfiniteDistance;
  for (const auto* fs : {direct ? &*direct : nullptr, inc ? &*inc : nullptr}) {
    if (!fs) continue;
    auto d = verify_fusion(idx, *fs);
    row.dmin = std::min(row.dmin, d);
    if (opts.f > 0 && d <= static_cast<std::uint32_t>(opts.f)) row.verified = false;
  }
  for (const auto* fs : {direct ? &*direct : nullptr, inc ? &*inc : nullptr})
    if (fs)
      for (const auto& w : fs->warnings) row.note += (row.note.empty() ? "" : "; ") + w;
  return row;
}

std::vector<BenchRow> bench(const std::string& dir, std::span<const Triple> triples, const BenchOptions& opts) {
  std::vector<BenchRow> rows;
  for (const auto& t : triples) {
    BenchRow row;
    row.machines = t[0] + "," + t[1] + "," + t[2];
    std::vector<Machine> prim;
    try {
      std::set<std::string> seen;
      for (const auto& name : t) {
        std::filesystem::path p = std::filesystem::path(dir) / (name + ".kiss2");
        if (!std::filesystem::exists(p)) p = std::filesystem::path(dir) / (name + ".kiss");
        if (!std::filesystem::exists(p)) throw Error("missing " + (std::filesystem::path(dir) / (name + ".kiss2")).string());
        auto m = load_machine(p.string());
        std::string unique = name;
        for (int k = 2; !seen.insert(unique).second; ++k) unique = name + "#" + std::to_string(k);
        prim.push_back(m.renamed(unique));
      }
      row = bench_row(prim, opts);
    } catch (const Error& e) {
      row.status = "SKIP";
      row.note = e.what();
      rows.push_back(std::move(row));
      continue;
    }
    if (const auto* ref = find_reference(t)) {
      row.reference = std::to_string(ref->replication_state_space) + "/" + std::to_string(ref->fusion_state_space) +
                      "/" + fmt(ref->avg_fusion_events);
      bool exact = row.replication_state_space == ref->replication_state_space &&
                   row.fusion_state_space == ref->fusion_state_space &&
                   row.primary_events == ref->primary_events && row.avg_fusion_events == ref->avg_fusion_events;
      bool close = near(static_cast<double>(row.fusion_state_space), static_cast<double>(ref->fusion_state_space),
                        opts.near_tolerance) &&
                   near(row.avg_fusion_events, ref->avg_fusion_events, opts.near_tolerance);
      row.status = exact ? "PASS" : close ? "NEAR" : "DIFF";
    } else {
      row.status = "NOREF";
    }
    if (!row.verified) row.status = "FAIL";
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Triple> parse_triples(std::string_view text) {
  std::vector<Triple> out;
  std::string buf(text);
  std::replace(buf.begin(), buf.end(), ',', ' ');
  detail::for_each_line(buf, [&](int line, const std::vector<std::string_view>& t) {
    if (t.size() != 3) throw ParseError("expected three machine names", line);
    out.push_back({std::string(t[0]), std::string(t[1]), std::string(t[2])});
  });
  return out;
}

std::vector<Triple> generate_triples(std::span<const std::string> names, std::size_t count, std::uint64_t seed) {
  const std::size_t n = names.size();
  if (n < 3) return {};
  std::vector<Triple> all;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c) all.push_back({names[a], names[b], names[c]});
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  if (all.size() > count) all.resize(count);
  return all;
}

std::string format_bench(std::span<const BenchRow> rows) {
  std::ostringstream os;
  os << "# machines\trcp_states\treplication_state_space\tfusion_state_space\tsavings_pct\tprimary_events"
        "\tavg_fusion_events\tevent_reduction_pct\trho\tbeta\tdmin\tverified\tdirect_ms\tincremental_ms"
        "\tdirect_fusion_state_space\tincremental_fusion_state_space\tsource\tstatus\treference\tnote\n";
  for (const auto& r : rows) {
    os << r.machines << '\t' << r.rcp_states << '\t' << r.replication_state_space << '\t' << r.fusion_state_space
       << '\t' << fmt(r.savings_pct) << '\t' << r.primary_events << '\t' << fmt(r.avg_fusion_events) << '\t'
       << fmt(r.event_reduction_pct) << '\t' << fmt(r.rho) << '\t' << fmt(r.beta) << '\t'
       << (r.dmin == kInfiniteDistance ? std::string("inf") : std::to_string(r.dmin)) << '\t'
       << (r.verified ? "yes" : "no") << '\t' << fmt(r.direct_ms) << '\t' << fmt(r.incremental_ms) << '\t'
       << r.direct_fusion_state_space << '\t' << r.incremental_fusion_state_space << '\t'
       << (r.source.empty() ? "-" : r.source) << '\t' << r.status << '\t'
       << (r.reference.empty() ? "-" : r.reference) << '\t' << (r.note.empty() ? "-" : r.note) << '\n';
  }
  return os.str();
}

}  // namespace fsmfusion
