#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <variant>

#include "json.hpp"
#include "uavsched/domain.hpp"
#include "uavsched/fsm.hpp"

namespace uavsched {

enum class ServiceKind { None, Load, Swap };
std::string_view to_string(ServiceKind k);

/// Status published by the UAV management node for one UAV.
struct UavStatus {
  UavId id;
  std::int64_t tick = 0;
  fsm::UavState state = fsm::UavState::Ready;
  Vec3 pose;
  bool cargo = false;
  std::optional<OrderId> order;
  std::optional<StationId> station;  // current destination / location
  std::optional<AgvId> on_agv;
  std::optional<NodeId> workbench;   // loading point while Ready on the bench
  bool landed = true;
  bool parked = false;               // waiting at a station parking spot
  std::optional<std::int64_t> touchdown_tick;  // last station touchdown
  int flights_since_swap = 0;
  bool swap_due = false;
  /// AGV the UAV is cleared to land on (final approach of a return flight).
  std::optional<AgvId> landing_agv;
};

/// Status published by the AGV management node for one AGV.
struct AgvStatus {
  AgvId id;
  std::int64_t tick = 0;
  fsm::AgvState state = fsm::AgvState::Waitting_Pickup;
  Vec3 pose;
  std::optional<UavId> carrying;
  LoopId loop;
  std::optional<NodeId> at_node;  // stopped at a node
  NodeId last_node;               // node most recently left or reached
  NodeId target;                  // commanded destination node
  double loop_pos_m = 0.0;        // arc position along the loop from its loading point
  ServiceKind service = ServiceKind::None;
  std::int64_t service_remaining_ticks = 0;
  std::optional<int> staff;
};

using StatusMsg = std::variant<UavStatus, AgvStatus>;

/// Newest fresh status per vehicle, as seen by the master at one tick.
struct Snapshot {
  std::int64_t tick = 0;
  double now_s = 0.0;
  std::map<UavId, UavStatus> uavs;
  std::map<AgvId, AgvStatus> agvs;
};

struct MoveTo {
  NodeId node;
  friend bool operator==(const MoveTo&, const MoveTo&) = default;
};

/// Command for a UAV. Delivery carries the route; return deliveries also
/// name the landing point and the reserved AGV.
struct UavCommandMsg {
  UavId target;
  std::int64_t issued_tick = 0;
  fsm::UavCommand cmd = fsm::UavCommand::Delivery;
  std::optional<Route> route;
  std::optional<NodeId> landing;
  std::optional<AgvId> agv;
  std::optional<OrderId> order;
  std::optional<StationId> station;
};

/// Command for an AGV: an FSM command or a movement target.
struct AgvCommandMsg {
  AgvId target;
  std::int64_t issued_tick = 0;
  std::variant<fsm::AgvCommand, MoveTo> action;
  std::optional<UavId> uav;  // UAV_Receive: which workbench UAV
  std::optional<int> staff;  // UAV_Charge / UAV_Get_Cargo: serving staff
};

using CommandMsg = std::variant<UavCommandMsg, AgvCommandMsg>;

nlohmann::json to_json(const UavStatus& s);
nlohmann::json to_json(const AgvStatus& s);
nlohmann::json to_json(const StatusMsg& s);
nlohmann::json to_json(const UavCommandMsg& c);
nlohmann::json to_json(const AgvCommandMsg& c);
nlohmann::json to_json(const CommandMsg& c);

std::string command_name(const CommandMsg& c);
/// "uav:3" / "agv:2"
std::string target_name(const CommandMsg& c);

}  // namespace uavsched
