#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "uavsched/air_scheduler.hpp"
#include "uavsched/domain.hpp"
#include "uavsched/ground_scheduler.hpp"
#include "uavsched/messages.hpp"
#include "uavsched/orders.hpp"
#include "uavsched/trace.hpp"

namespace uavsched {

/// Node cadences in base ticks.
struct NodeClock {
  int master_period = 5;
  int mgmt_period = 1;
  int fsm_period = 1;
};

enum class FlightPhase { None, Climb, Cruise, Hover, Descend, Taxi };

/// Driver-side state of one UAV. Owned by the engine; the UAV management
/// node reads it to publish status.
struct UavRecord {
  UavId id;
  fsm::UavState state = fsm::UavState::Ready;
  Vec3 pose;
  bool cargo = false;
  std::optional<OrderId> order;
  std::optional<StationId> station;
  std::optional<AgvId> on_agv;
  std::optional<NodeId> workbench;

  FlightPhase phase = FlightPhase::None;
  std::optional<Route> route;
  std::size_t segment = 0;      // cruise segment index
  double hold_short_m = 0.0;    // remaining route length at which to check clearance
  bool cleared = false;         // clearance to finish the approach was granted
  bool hover_logged = false;
  Vec3 vertical_from;
  Vec3 vertical_to;
  std::int64_t phase_ticks = 0;  // ticks done in climb / descend / taxi
  std::int64_t phase_total = 0;
  std::optional<NodeId> landing;       // return flight: landing point
  std::optional<AgvId> reserved_agv;   // return flight: reserved AGV

  bool on_pad = false;
  std::int64_t unload_remaining = 0;
  bool unload_done = false;
  bool parked = false;
  std::optional<std::int64_t> touchdown_tick;
  int visits_since_swap = 0;
  bool swap_due = false;
};

/// Driver-side state of one AGV.
struct AgvRecord {
  AgvId id;
  LoopId loop;
  fsm::AgvState state = fsm::AgvState::Waitting_Pickup;
  Vec2 pos;
  double loop_pos_m = 0.0;
  NodeId last_node;
  std::optional<NodeId> at_node;
  std::optional<NodeId> trailing_claim;  // node just left, released at 3.2 m
  NodeId target;
  std::optional<UavId> carrying;
  bool cargo_loaded = false;
  ServiceKind service = ServiceKind::None;
  std::int64_t service_remaining = 0;
  std::optional<int> staff;
};

UavStatus status_of(const UavRecord& r, std::int64_t tick);
AgvStatus status_of(const AgvRecord& r, std::int64_t tick);

/// Bounded FIFO; push fails when full.
template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}
  bool push(T v) {
    if (items_.size() >= capacity_) {
      ++dropped_;
      return false;
    }
    items_.push_back(std::move(v));
    return true;
  }
  std::vector<T> drain() {
    std::vector<T> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
    items_.clear();
    return out;
  }
  std::size_t size() const { return items_.size(); }
  std::size_t dropped() const { return dropped_; }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
  std::size_t dropped_ = 0;
};

/// In-process publish/subscribe bus with one bounded queue per topic.
class MessageBus {
 public:
  explicit MessageBus(std::size_t capacity = 4096) : uav_cmd_(capacity), agv_cmd_(capacity), status_(capacity) {}

  bool publish(CommandMsg c);
  bool publish(StatusMsg s) { return status_.push(std::move(s)); }

  std::vector<UavCommandMsg> take_uav_commands() { return uav_cmd_.drain(); }
  std::vector<AgvCommandMsg> take_agv_commands() { return agv_cmd_.drain(); }
  std::vector<StatusMsg> take_statuses() { return status_.drain(); }
  std::size_t dropped() const { return uav_cmd_.dropped() + agv_cmd_.dropped() + status_.dropped(); }

 private:
  BoundedQueue<UavCommandMsg> uav_cmd_;
  BoundedQueue<AgvCommandMsg> agv_cmd_;
  BoundedQueue<StatusMsg> status_;
};

/// Relays master commands into one pending slot per UAV (newest wins) and
/// publishes one status per live UAV every tick.
class UavManagementNode {
 public:
  void add_vehicle(UavId id);
  bool has(UavId id) const { return slots_.count(id) > 0; }
  void halt(UavId id);
  bool halted(UavId id) const;

  void deliver(std::int64_t tick, const std::vector<UavCommandMsg>& inbox, EventTrace& trace);
  /// Issues Release_Cargo to UAVs whose unload finished.
  void auto_release(std::int64_t tick, const std::vector<UavRecord>& uavs, EventTrace& trace);
  std::vector<StatusMsg> publish(std::int64_t tick, const std::vector<UavRecord>& uavs) const;

  std::vector<StatusMsg> mgmt_tick(std::int64_t tick, const std::vector<UavCommandMsg>& inbox,
                                   const std::vector<UavRecord>& uavs, EventTrace& trace);

  std::optional<UavCommandMsg>& pending(UavId id) { return slots_.at(id).pending; }
  const std::optional<UavCommandMsg>& pending(UavId id) const { return slots_.at(id).pending; }

 private:
  struct Slot {
    std::optional<UavCommandMsg> pending;
    bool halted = false;
  };
  std::map<UavId, Slot> slots_;
};

/// Same contract for AGVs. Movement targets are applied to the driver on
/// delivery; FSM commands wait in the pending slot.
class AgvManagementNode {
 public:
  void add_vehicle(AgvId id);
  bool has(AgvId id) const { return slots_.count(id) > 0; }
  void halt(AgvId id);
  bool halted(AgvId id) const;

  void deliver(std::int64_t tick, const std::vector<AgvCommandMsg>& inbox, std::vector<AgvRecord>& agvs,
               const CycleScheme& scheme, EventTrace& trace);
  std::vector<StatusMsg> publish(std::int64_t tick, const std::vector<AgvRecord>& agvs) const;

  std::vector<StatusMsg> mgmt_tick(std::int64_t tick, const std::vector<AgvCommandMsg>& inbox,
                                   std::vector<AgvRecord>& agvs, const CycleScheme& scheme, EventTrace& trace);

  std::optional<AgvCommandMsg>& pending(AgvId id) { return slots_.at(id).pending; }
  const std::optional<AgvCommandMsg>& pending(AgvId id) const { return slots_.at(id).pending; }

 private:
  struct Slot {
    std::optional<AgvCommandMsg> pending;
    bool halted = false;
  };
  std::map<AgvId, Slot> slots_;
};

/// Scheduler-facing node. Keeps the newest status per vehicle, and every
/// master period runs the air scheduler (arrival bookkeeping, takeoff and
/// return admission) and then the ground scheduler on a snapshot of fresh
/// statuses.
class MasterNode {
 public:
  MasterNode(std::shared_ptr<const ScenarioConfig> config, std::vector<Order> orders, NodeClock clock = {});

  void ingest(const StatusMsg& status);
  /// Statuses no older than mgmt_period + master_period ticks.
  Snapshot snapshot(std::int64_t tick) const;
  std::vector<CommandMsg> master_tick(std::int64_t tick, EventTrace& trace);

  void add_agv(AgvId id, LoopId loop);
  /// Traces deferrals not yet written (end of run).
  void flush_deferrals(std::int64_t tick, EventTrace& trace);

  const AirScheduler& air() const { return air_; }
  const GroundScheduler& ground() const { return ground_; }
  const OrderQueue& orders() const { return orders_; }
  const NodeClock& clock() const { return clock_; }
  std::int64_t deferrals() const { return deferrals_; }

 private:
  void close_bookings(const Snapshot& snap, EventTrace& trace);
  void admit_takeoffs(const Snapshot& snap, std::vector<CommandMsg>& out, EventTrace& trace);
  void admit_returns(const Snapshot& snap, std::vector<CommandMsg>& out, EventTrace& trace);
  void sync_landings(const Snapshot& snap, EventTrace& trace);
  /// Counts a deferral; traces at most one per UAV every few seconds, each
  /// record carrying the number of decisions it stands for.
  void defer(std::int64_t tick, UavId id, nlohmann::json info, EventTrace& trace);
  /// Moves untraced deferrals of a UAV onto its approval record.
  void fold_deferrals(UavId id, nlohmann::json& approval);

  static constexpr double kDeferralTraceEveryS = 10.0;
  struct Deferred {
    std::int64_t pending = 0;
    std::optional<std::int64_t> last_emit;
  };
  std::map<UavId, Deferred> deferred_;
  bool uav_in_flight(UavId id, const Snapshot& snap) const;

  std::shared_ptr<const ScenarioConfig> config_;
  NodeClock clock_;
  AirScheduler air_;
  GroundScheduler ground_;
  OrderQueue orders_;
  std::map<UavId, UavStatus> uav_latest_;
  std::map<AgvId, AgvStatus> agv_latest_;
  std::map<UavId, std::int64_t> uav_inflight_;
  std::map<UavId, std::int64_t> closed_touchdown_;
  std::map<StationId, std::int64_t> last_arrival_tick_;
  std::int64_t deferrals_ = 0;
};

}  // namespace uavsched
