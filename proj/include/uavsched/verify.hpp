#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace uavsched {

struct TraceViolation {
  std::string kind;  // arrival_gap, landing_agv, landing_unreserved, node_occupancy, ...
  std::int64_t tick = 0;
  std::string detail;
};

struct VerifyReport {
  std::vector<TraceViolation> violations;
  std::int64_t lines = 0;
  std::int64_t arrivals = 0;
  std::int64_t landings = 0;
  std::int64_t transitions = 0;
  std::int64_t pose_frames = 0;
  double min_arrival_gap_s = 0.0;  // +inf when no station saw two arrivals
  double min_uav_distance_m = 0.0;
  double min_agv_distance_m = 0.0;

  bool ok() const { return violations.empty(); }
  std::size_t count(const std::string& kind) const;
};

/// Re-checks a trace without re-running the simulation: per-station arrival
/// gaps, AGV presence and reservation at every landing, one AGV per node,
/// UAV and AGV separation, per-tick motion bounds, FSM edge legality and
/// state continuity, and summary counts. Throws TraceParseError on malformed
/// or truncated input.
VerifyReport verify_trace(std::istream& in);
VerifyReport verify_trace_file(const std::string& path);

/// Human-readable report: one line per violation, then a totals line.
std::string format_report(const VerifyReport& r);

}  // namespace uavsched
