#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "uavsched/domain.hpp"
#include "uavsched/engine.hpp"
#include "uavsched/metrics.hpp"
#include "uavsched/orders.hpp"

namespace uavsched {

/// Everything a single run needs. Unset fields fall back to the scenario
/// file, then to the scheme's bundled defaults.
struct RunSpec {
  std::optional<std::filesystem::path> scenario;
  std::optional<Scheme> scheme;
  std::optional<int> n_uavs;
  std::optional<double> duration_s;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> orders_file;
  std::optional<double> order_rate;
  std::optional<double> better_offset_s;
  std::optional<double> timeout_offset_s;
  std::filesystem::path out_dir = "out";
  bool realtime = false;
  ExecMode mode = ExecMode::Deterministic;
};

/// Resolved and validated configuration. Throws ScenarioError.
ScenarioConfig resolve_config(const RunSpec& spec);
/// Orders from the order file if given, else generated from the config.
std::vector<Order> resolve_orders(const RunSpec& spec, const ScenarioConfig& config);

/// Trace file name for a cell, e.g. "two-cycle_n8_s7.jsonl".
std::string trace_name(Scheme scheme, int n_uavs, std::uint64_t seed);

struct RunOutcome {
  MetricsReport metrics;
  nlohmann::json summary;
  std::filesystem::path trace_path;
  std::filesystem::path csv_path;
};

/// Runs one experiment: writes the trace into out_dir, appends the metrics
/// row to out_dir/metrics.csv (header on creation) and prints the summary
/// record and the CSV row to `out`.
RunOutcome cmd_run(const RunSpec& spec, std::ostream& out);

struct SweepSpec {
  RunSpec base;
  std::vector<Scheme> schemes;
  std::vector<int> uav_counts;
  std::vector<std::uint64_t> seeds;
  /// Worker threads; 0 = hardware concurrency.
  unsigned jobs = 0;
  /// Keep one trace file per cell under out_dir.
  bool write_traces = false;
  /// Run the trace verifier on every cell.
  bool verify = false;
};

struct SweepCell {
  Scheme scheme = Scheme::OneCycle;
  int n_uavs = 0;
  std::uint64_t seed = 0;
  std::optional<MetricsReport> metrics;
  std::string error;  // set when the cell failed
  /// Verifier violations (verify only).
  std::int64_t violations = 0;
  std::vector<std::string> violation_kinds;
  std::filesystem::path trace_path;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // scheme, count, seed order
  std::vector<MeanReport> means;  // scheme, count order; successful cells only
  std::size_t failures() const;
  const MeanReport* mean(Scheme scheme, int n_uavs) const;
};

/// Runs every (scheme, count, seed) cell, in parallel. A failing cell is
/// recorded and the sweep continues.
SweepResult cmd_sweep(const SweepSpec& spec);
/// Header, one row per successful cell, then one mean row per (scheme, count).
std::string sweep_csv(const SweepResult& r);

/// Exit status of the verify command: 0 clean, 3 violations found, 1 when
/// the trace is malformed or unreadable. Writes the report to `out`.
int cmd_verify(const std::filesystem::path& trace, std::ostream& out);

}  // namespace uavsched
