#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace uavsched {

/// One experiment cell.
struct MetricsReport {
  std::string scheme;
  int n_uavs = 0;
  std::uint64_t seed = 0;
  std::int64_t orders_issued = 0;
  std::int64_t delivered = 0;
  std::int64_t undelivered = 0;
  double score_sum = 0.0;
  double score_mean = 0.0;  // over delivered orders only
  double agv_busy = 0.0;
  double staff_busy = 0.0;
  std::int64_t deferrals = 0;
  std::int64_t anomalies = 0;
  std::int64_t violations = 0;
};

/// Per-(scheme, fleet size) mean over seeds.
struct MeanReport {
  std::string scheme;
  int n_uavs = 0;
  int cells = 0;
  double delivered = 0.0;
  double score_sum = 0.0;
  double score_mean = 0.0;
  double agv_busy = 0.0;
  double staff_busy = 0.0;
  double deferrals = 0.0;
  double anomalies = 0.0;
};

/// Field-wise mean of reports sharing scheme and fleet size.
MeanReport mean_of(const std::vector<MetricsReport>& cells);

/// scheme,n_uavs,delivered,score_sum,score_mean,agv_busy,staff_busy,deferrals,anomalies,seed
std::string csv_header();
std::string csv_row(const MetricsReport& m);
/// Same columns with the seed column set to "mean".
std::string csv_mean_row(const MeanReport& m);

struct BusyRatios {
  double agv = 0.0;
  double staff = 0.0;
  std::int64_t agv_busy_ticks = 0;
  std::int64_t agv_ticks = 0;
  std::int64_t staff_busy_ticks = 0;
  std::int64_t staff_ticks = 0;
};

/// Busy ratios recomputed from a trace file. An AGV tick is busy when the
/// AGV moved (appears in that tick's pose frame) or a load/swap service was
/// running on it; a staff tick is busy while that staff member serves.
BusyRatios busy_ratios(std::istream& trace);

/// Full metrics recomputed from a trace file (scheme, fleet and seed from
/// the meta record; deliveries and scores from order_done records).
MetricsReport metrics_from_trace(std::istream& trace);

}  // namespace uavsched
