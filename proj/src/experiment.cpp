#include "uavsched/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "uavsched/scenario.hpp"
#include "uavsched/trace.hpp"
#include "uavsched/verify.hpp"

namespace uavsched {

ScenarioConfig resolve_config(const RunSpec& spec) {
  ScenarioConfig c = spec.scenario ? load_scenario(*spec.scenario) : default_scenario(spec.scheme.value_or(Scheme::OneCycle));
  if (spec.scheme && *spec.scheme != c.scheme) {
    // A different scheme needs its own loops: keep the rest of the file.
    c.scheme = *spec.scheme;
    c.layout = default_layout(c.scheme);
    const SchemeShape shape = scheme_shape(c.scheme);
    c.fleet.agvs = shape.loops * shape.agvs_per_loop;
  }
  if (spec.n_uavs) c.fleet.uavs = *spec.n_uavs;
  if (spec.duration_s) c.duration_s = *spec.duration_s;
  if (spec.seed) c.seed = *spec.seed;
  if (spec.order_rate) c.orders.rate_per_s = *spec.order_rate;
  if (spec.better_offset_s) c.orders.better_offset_s = *spec.better_offset_s;
  if (spec.timeout_offset_s) c.orders.timeout_offset_s = *spec.timeout_offset_s;
  validate(c);
  return c;
}

std::vector<Order> resolve_orders(const RunSpec& spec, const ScenarioConfig& config) {
  if (!spec.orders_file) return default_orders(config);
  std::vector<Order> orders;
  try {
    orders = load_orders(*spec.orders_file);
  } catch (const std::runtime_error& e) {
    throw ScenarioError(e.what());
  }
  for (const auto& o : orders)
    if (!config.layout.has_station(o.station))
      throw ScenarioError("order " + std::to_string(o.id.value) + " names unknown station " +
                          std::to_string(o.station.value));
  return orders;
}

std::string trace_name(Scheme scheme, int n_uavs, std::uint64_t seed) {
  return std::string(to_string(scheme)) + "_n" + std::to_string(n_uavs) + "_s" + std::to_string(seed) + ".jsonl";
}

RunOutcome cmd_run(const RunSpec& spec, std::ostream& out) {
  const ScenarioConfig config = resolve_config(spec);
  const std::vector<Order> orders = resolve_orders(spec, config);

  std::filesystem::create_directories(spec.out_dir);
  RunOutcome r;
  r.trace_path = spec.out_dir / trace_name(config.scheme, config.fleet.uavs, config.seed);
  r.csv_path = spec.out_dir / "metrics.csv";
  {
    std::ofstream trace(r.trace_path);
    if (!trace) throw std::runtime_error("cannot write " + r.trace_path.string());
    EngineOptions opts;
    opts.mode = spec.mode;
    opts.realtime = spec.realtime;
    opts.trace_out = &trace;
    const RunResult res = run(config, orders, opts);
    r.metrics = res.metrics;
    r.summary = res.summary;
  }
  const bool fresh = !std::filesystem::exists(r.csv_path);
  std::ofstream csv(r.csv_path, std::ios::app);
  if (fresh) csv << csv_header() << "\n";
  csv << csv_row(r.metrics) << "\n";

  out << r.summary.dump() << "\n" << csv_header() << "\n" << csv_row(r.metrics) << "\n";
  return r;
}

std::size_t SweepResult::failures() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const SweepCell& c) { return !c.metrics.has_value(); }));
}

const MeanReport* SweepResult::mean(Scheme scheme, int n_uavs) const {
  const std::string name(to_string(scheme));
  for (const auto& m : means)
    if (m.scheme == name && m.n_uavs == n_uavs) return &m;
  return nullptr;
}

namespace {

void run_cell(const SweepSpec& spec, SweepCell& cell) {
  RunSpec rs = spec.base;
  rs.scheme = cell.scheme;
  rs.n_uavs = cell.n_uavs;
  rs.seed = cell.seed;
  const ScenarioConfig config = resolve_config(rs);
  const std::vector<Order> orders = resolve_orders(rs, config);

  EngineOptions opts;
  opts.mode = rs.mode;
  std::ostringstream mem;
  std::ofstream file;
  if (spec.write_traces) {
    cell.trace_path = rs.out_dir / trace_name(cell.scheme, cell.n_uavs, cell.seed);
    file.open(cell.trace_path);
    if (!file) throw std::runtime_error("cannot write " + cell.trace_path.string());
    opts.trace_out = &file;
  } else if (spec.verify) {
    opts.trace_out = &mem;
  }
  cell.metrics = run(config, orders, opts).metrics;
  if (!spec.verify) return;

  VerifyReport v;
  if (spec.write_traces) {
    file.close();
    v = verify_trace_file(cell.trace_path.string());
  } else {
    std::istringstream in(mem.str());
    v = verify_trace(in);
  }
  cell.violations = static_cast<std::int64_t>(v.violations.size());
  for (const auto& x : v.violations)
    if (std::find(cell.violation_kinds.begin(), cell.violation_kinds.end(), x.kind) == cell.violation_kinds.end())
      cell.violation_kinds.push_back(x.kind);
}

}  // namespace

SweepResult cmd_sweep(const SweepSpec& spec) {
  SweepResult r;
  for (Scheme s : spec.schemes)
    for (int n : spec.uav_counts)
      for (std::uint64_t seed : spec.seeds) r.cells.push_back({s, n, seed, std::nullopt, {}, 0, {}, {}});
  if (spec.write_traces) std::filesystem::create_directories(spec.base.out_dir);

  unsigned jobs = spec.jobs ? spec.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, r.cells.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < r.cells.size(); i = next++) {
      try {
        run_cell(spec, r.cells[i]);
      } catch (const std::exception& e) {
        r.cells[i].metrics.reset();
        r.cells[i].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < jobs; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (Scheme s : spec.schemes)
    for (int n : spec.uav_counts) {
      std::vector<MetricsReport> ok;
      for (const auto& c : r.cells)
        if (c.scheme == s && c.n_uavs == n && c.metrics) ok.push_back(*c.metrics);
      if (!ok.empty()) r.means.push_back(mean_of(ok));
    }
  return r;
}

std::string sweep_csv(const SweepResult& r) {
  std::string out = csv_header() + "\n";
  for (const auto& c : r.cells)
    if (c.metrics) out += csv_row(*c.metrics) + "\n";
  for (const auto& m : r.means) out += csv_mean_row(m) + "\n";
  return out;
}

int cmd_verify(const std::filesystem::path& trace, std::ostream& out) {
  try {
    const VerifyReport r = verify_trace_file(trace.string());
    out << format_report(r);
    return r.ok() ? 0 : 3;
  } catch (const TraceParseError& e) {
    out << "malformed trace: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace uavsched
