#pragma once

#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "uavsched/domain.hpp"

namespace uavsched {

class UnknownStation : public std::out_of_range {
 public:
  explicit UnknownStation(StationId id) : std::out_of_range("unknown station " + std::to_string(id.value)) {}
};

struct TakeoffRequest {
  UavId uav;
  StationId station;
  double request_s = 0.0;  // T_go_req
};

struct ReturnRequest {
  UavId uav;
  StationId station;
  double request_s = 0.0;  // T_back_req
};

struct ArrivalEntry {
  UavId uav;
  double arrival_s = 0.0;
};

/// Predicted arrivals of UAVs en route, per station, sorted by arrival time.
class ArrivalBook {
 public:
  void book(StationId station, UavId uav, double arrival_s);
  /// Removes and returns the entry, if the UAV was booked at the station.
  std::optional<ArrivalEntry> remove(StationId station, UavId uav);
  const std::vector<ArrivalEntry>& entries(StationId station) const;
  std::size_t size() const;

 private:
  std::map<StationId, std::vector<ArrivalEntry>> by_station_;
};

struct LandingEntry {
  UavId uav;
  AgvId agv;
  LoopId loop;
  double uav_land_s = 0.0;  // T_n_land
  double agv_land_s = 0.0;  // T_m_land at reservation time
};

/// Landing reservations per landing point.
class LandingBook {
 public:
  void book(NodeId landing, const LandingEntry& entry);
  std::optional<LandingEntry> remove(UavId uav);
  /// Hands a UAV's reservation to another AGV. Returns false if not booked.
  bool reassign(UavId uav, AgvId agv);
  const std::vector<LandingEntry>& entries(NodeId landing) const;
  std::size_t reservations(NodeId landing) const { return entries(landing).size(); }
  /// Landing point and entry reserved for an AGV, if any.
  std::optional<std::pair<NodeId, LandingEntry>> for_agv(AgvId agv) const;
  std::optional<std::pair<NodeId, LandingEntry>> for_uav(UavId uav) const;
  std::size_t size() const;

 private:
  std::map<NodeId, std::vector<LandingEntry>> by_point_;
};

/// Earliest AGV arrival estimate at one landing point (one candidate AGV).
struct AgvEta {
  NodeId landing;
  LoopId loop;
  AgvId agv;
  double eta_s = 0.0;
  /// The UAV must land before this time: a reserved AGV queued behind the
  /// candidate lands its UAV here.
  double latest_s = std::numeric_limits<double>::infinity();
};

struct AirParams {
  double uav_speed_mps = 10.0;
  double overhead_s = 10.0;
  double go_gap_s = 30.0;
  double land_gap_s = 15.0;
  /// Minimum time between two return departures from one station.
  double station_departure_spacing_s = 6.0;
};

struct TakeoffDecision {
  bool approved = false;
  double arrival_s = 0.0;  // T_arri = T_go_req + t_go
  double flight_s = 0.0;   // t_go
  /// Booked arrival that blocked the request.
  std::optional<ArrivalEntry> conflict;
  std::optional<Route> route;
};

struct ReturnDecision {
  bool approved = false;
  double flight_s = 0.0;  // t_back for the chosen landing point
  double uav_land_s = 0.0;
  std::optional<NodeId> landing;
  std::optional<AgvId> agv;
  std::optional<LoopId> loop;
  double agv_land_s = 0.0;
  std::optional<Route> route;
  /// Why each landing point was not feasible (for the trace).
  std::vector<std::string> reasons;
};

/// Trace record for a touchdown at a station.
struct ArrivalReport {
  bool booked = false;
  double predicted_s = 0.0;
  double actual_s = 0.0;
  double error_s = 0.0;
};

/// Takeoff and return admission.
///
/// Takeoff: a UAV bound for station k is approved only if its predicted
/// arrival differs from every booked arrival at k by strictly more than
/// go_gap_s. Return: approved only if some landing point has a candidate AGV
/// whose estimated arrival at the point is strictly earlier than the UAV's
/// predicted landing; among feasible points the one with the fewest
/// reservations wins, ties to the lowest loop id.
class AirScheduler {
 public:
  AirScheduler(const AirportLayout& layout, AirParams params);

  TakeoffDecision request_takeoff(const TakeoffRequest& req, NodeId takeoff);
  ReturnDecision request_return(const ReturnRequest& req, const std::vector<AgvEta>& agv_etas);

  ArrivalReport on_arrival(UavId uav, StationId station, double actual_s);
  std::optional<LandingEntry> on_landed(UavId uav) { return landings_.remove(uav); }
  bool reassign_landing(UavId uav, AgvId agv) { return landings_.reassign(uav, agv); }

  const ArrivalBook& arrivals() const { return arrivals_; }
  const LandingBook& landings() const { return landings_; }
  const AirParams& params() const { return params_; }

 private:
  const AirportLayout* layout_;
  AirParams params_;
  ArrivalBook arrivals_;
  LandingBook landings_;
  std::map<StationId, double> last_return_departure_;
};

}  // namespace uavsched
