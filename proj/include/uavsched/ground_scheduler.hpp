#pragma once

#include <map>
#include <optional>
#include <vector>

#include "uavsched/air_scheduler.hpp"
#include "uavsched/domain.hpp"
#include "uavsched/messages.hpp"
#include "uavsched/orders.hpp"

namespace uavsched {

/// Arc-length parametrisation of one AGV loop. Position 0 is the loading
/// point; positions increase in travel direction and wrap at length().
class LoopGeometry {
 public:
  LoopGeometry(const AirportLayout& layout, const LoopDef& def);

  LoopId id() const { return id_; }
  const std::vector<NodeId>& nodes() const { return nodes_; }
  double length() const { return length_; }

  bool contains(NodeId n) const;
  std::size_t index(NodeId n) const;
  double offset(NodeId n) const { return offsets_[index(n)]; }
  Vec2 position(NodeId n) const { return pos_[index(n)]; }
  NodeId next(NodeId n) const;
  double edge_length(NodeId from) const;

  /// Forward travel distance from one arc position to another.
  double arc(double from_pos, double to_pos) const;
  double arc_to(double from_pos, NodeId n) const { return arc(from_pos, offset(n)); }
  Vec2 point_at(double pos) const;

  NodeId loading() const { return loading_; }
  NodeId takeoff() const { return takeoff_; }
  NodeId landing() const { return landing_; }
  /// True from the landing point (inclusive) round to the loading point
  /// (inclusive): the leg an AGV travels on its way to the GW area.
  bool in_return_leg(double pos) const;

 private:
  LoopId id_;
  std::vector<NodeId> nodes_;
  std::vector<Vec2> pos_;
  std::vector<double> offsets_;
  double length_ = 0.0;
  NodeId loading_, takeoff_, landing_;
};

/// AGV loop layout of one scheme with the fixed AGV-to-loop partition.
struct CycleScheme {
  Scheme scheme = Scheme::OneCycle;
  std::vector<LoopGeometry> loops;
  std::map<AgvId, LoopId> agv_assignment;

  /// Checks the scheme cardinalities against the layout; throws ScenarioError.
  static CycleScheme build(const AirportLayout& layout, Scheme scheme, int n_agvs);

  const LoopGeometry& loop(LoopId id) const;
  const LoopGeometry& loop_of(AgvId agv) const { return loop(agv_assignment.at(agv)); }
  /// Starting nodes for the AGVs of a loop: the loading point, then the
  /// nodes behind it.
  std::vector<NodeId> initial_nodes(LoopId id, int count) const;
};

enum class GroundAction { Idle, Move, Wait, Service };
std::string_view to_string(GroundAction a);

struct AgvPlan {
  AgvId agv;
  LoopId loop;
  NodeId current_node;  // node at, or most recently left
  NodeId next_node;     // equals current_node when stopped
  double progress_m = 0.0;
  double edge_length_m = 0.0;
  Vec2 pos;
  NodeId target;
  GroundAction action = GroundAction::Idle;
};

/// Plan view of an AGV status. Action is Service, Idle (at target) or Move.
AgvPlan plan_from_status(const AgvStatus& s, const LoopGeometry& loop);

/// Estimated arrival at a landing point: now + remaining path / speed +
/// remaining service time.
double eta_to_landing(const AgvPlan& agv, const LoopGeometry& loop, NodeId landing, double now_s,
                      double pending_service_s, double agv_speed_mps);

struct OccupancyViolation {
  AgvId a;
  AgvId b;
  std::optional<NodeId> node;  // set for co-occupied nodes
  double distance_m = 0.0;
};

/// AGV pairs closer than min_dist_m or stopped at the same node.
std::vector<OccupancyViolation> occupancy_check(const std::vector<AgvPlan>& plans, double min_dist_m);

struct GroundParams {
  double agv_speed_mps = 1.5;
  double dt_s = 0.1;
  int swap_every = 1;
  int n_staff = 2;
  /// Ticks between the master issuing a command and the FSM consuming it.
  int command_latency_ticks = 2;
  /// Re-send period for movement targets not yet reflected in status.
  int resend_ticks = 10;
  double load_s = 10.0;
  double swap_s = 10.0;
};

struct OrderAssignment {
  OrderId order;
  UavId uav;
  StationId station;
};

struct GroundResult {
  std::vector<CommandMsg> commands;
  std::vector<AgvPlan> plans;
  std::vector<OrderAssignment> assignments;
};

struct Reassignment {
  UavId uav;
  AgvId from;
  AgvId to;
};

/// Assembly-line dispatcher over the scheme's loops.
///
/// Per AGV, by FSM state: Go_GW heads for its loading point; Working at the
/// loading point gets a battery swap when due and then cargo loading with the
/// oldest pending order; Go_AW heads for its takeoff point; an empty AGV
/// heads for its reserved landing point, or fetches a Ready UAV waiting on
/// its workbench, and otherwise waits at its landing point. Node claims in the engine keep one AGV per node.
class GroundScheduler {
 public:
  GroundScheduler(const AirportLayout& layout, CycleScheme scheme, GroundParams params);

  GroundResult plan_ground(const Snapshot& snap, const LandingBook& landings, OrderQueue& orders);

  /// Claims Ready workbench UAVs for idle, unreserved empty AGVs of the same
  /// loop. Runs before return admission so workbench UAVs are not starved.
  void claim_fetches(const Snapshot& snap, const LandingBook& landings);

  /// Per landing point, the front-most unreserved AGV in lane order and its
  /// eta. A loaded AGV's eta includes the services and travel still ahead of
  /// it; any candidate queues behind reserved AGVs ahead of it.
  std::vector<AgvEta> return_candidates(const Snapshot& snap, const LandingBook& landings) const;

  /// Moves landing reservations forward in lane order when an idle empty AGV
  /// is ahead of reserved ones and can still make the earliest landing. The
  /// rear-most reserved AGV is released.
  std::vector<Reassignment> rebalance(const Snapshot& snap, const LandingBook& landings) const;

  /// Staff members busy at the snapshot (including jobs still in flight).
  int staff_busy(const Snapshot& snap) const;

  const CycleScheme& scheme() const { return scheme_; }
  const std::map<AgvId, UavId>& fetches() const { return fetch_; }
  /// Registers an AGV added mid-run on an existing loop.
  void add_agv(AgvId id, LoopId loop);

 private:
  struct StaffJob {
    AgvId agv;
    std::int64_t issued = 0;
  };
  struct Sent {
    NodeId target;
    std::int64_t tick = 0;
  };

  bool staff_job_active(const StaffJob& job, const Snapshot& snap) const;
  std::optional<int> free_staff(const Snapshot& snap) const;
  bool in_flight(AgvId agv, const Snapshot& snap) const;
  void prune_fetches(const Snapshot& snap);
  std::optional<UavId> unclaimed_bench_uav(const LoopGeometry& loop, const Snapshot& snap) const;
  /// Service time still ahead of a loaded AGV before it can take off.
  double pending_service_s(const AgvStatus& s, const Snapshot& snap) const;
  /// Forward travel distance to the loop's landing point.
  double lane_distance(const AgvStatus& s, const LoopGeometry& loop) const;
  bool reserved_behind(const AgvStatus& s, const LoopGeometry& loop, const Snapshot& snap,
                       const LandingBook& landings) const;
  NodeId choose_target(const AgvStatus& s, const LoopGeometry& loop, const Snapshot& snap,
                       const LandingBook& landings);

  const AirportLayout* layout_;
  CycleScheme scheme_;
  GroundParams params_;
  std::map<AgvId, UavId> fetch_;
  std::vector<std::optional<StaffJob>> staff_;
  std::map<AgvId, std::int64_t> inflight_;
  std::map<AgvId, Sent> sent_;
};

}  // namespace uavsched
