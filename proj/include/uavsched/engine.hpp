#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <vector>

#include "uavsched/domain.hpp"
#include "uavsched/ground_scheduler.hpp"
#include "uavsched/metrics.hpp"
#include "uavsched/nodes.hpp"
#include "uavsched/orders.hpp"
#include "uavsched/trace.hpp"

namespace uavsched {

enum class ExecMode {
  Deterministic,  // single-threaded stepping
  Concurrent,     // UAV and AGV driver work on separate threads each tick
};

struct EngineOptions {
  ExecMode mode = ExecMode::Deterministic;
  /// Sleep to wall-clock dt between ticks.
  bool realtime = false;
  std::ostream* trace_out = nullptr;
  /// Full vehicle-state dump every snapshot_every ticks (0 = off).
  std::ostream* snapshot_out = nullptr;
  std::int64_t snapshot_every = 0;
};

/// Online counters kept by the engine while stepping.
struct OnlineCounters {
  std::int64_t agv_busy_ticks = 0;
  std::int64_t agv_ticks = 0;
  std::int64_t staff_busy_ticks = 0;
  std::int64_t staff_ticks = 0;
  std::int64_t delivered = 0;
  double score_sum = 0.0;
  std::int64_t uav_violations = 0;
  std::int64_t agv_violations = 0;
  std::int64_t anomalies = 0;
};

class Worker;

/// The virtual world. Single writer of all vehicle state; sub-step order per
/// tick is motion, services, conditions and FSMs (AGVs, then UAVs), management
/// nodes, and the master every master period.
class Engine {
 public:
  Engine(const ScenarioConfig& config, std::vector<Order> orders, EngineOptions options = {});
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  void step();
  /// Steps until the clock reaches the configured duration, then finishes.
  void run();
  void run_until(std::int64_t tick);
  /// Emits the summary record. Further steps are an error.
  void finish();

  std::int64_t tick() const { return tick_; }
  SimTime time() const { return {tick_, config_->dt_s}; }
  std::int64_t total_ticks() const;

  const ScenarioConfig& config() const { return *config_; }
  const std::vector<UavRecord>& uavs() const { return uavs_; }
  const std::vector<AgvRecord>& agvs() const { return agvs_; }
  const UavRecord& uav(UavId id) const;
  const AgvRecord& agv(AgvId id) const;
  const MasterNode& master() const { return *master_; }
  const EventTrace& trace() const { return trace_; }
  const OnlineCounters& counters() const { return counters_; }
  const std::map<OrderId, Order>& orders() const { return orders_; }

  /// Stops a vehicle driver: no motion, no FSM steps, no status.
  void halt_uav(UavId id);
  void halt_agv(AgvId id);
  /// Registers a new UAV on a workbench; throws std::invalid_argument on a
  /// duplicate id.
  void add_uav(UavId id);
  /// Registers a new AGV stopped at a free node of an existing loop.
  void add_agv(AgvId id, LoopId loop, NodeId node);

  /// Separation check over the current world: airborne UAV pairs closer than
  /// the UAV minimum and AGV pairs closer than the AGV minimum (or sharing a
  /// node). Returns violation payloads; does not emit.
  std::vector<nlohmann::json> distance_monitor() const;

  MetricsReport metrics() const;

 private:
  UavRecord& uav_mut(UavId id);
  AgvRecord& agv_mut(AgvId id);
  const LoopGeometry& loop_of(const AgvRecord& a) const;

  void emit_meta();
  void motion();
  void move_agv(AgvRecord& a);
  void move_uav(UavRecord& u);
  void cruise(UavRecord& u);
  bool clearance(UavRecord& u);
  void touchdown(UavRecord& u);
  bool uav_move_allowed(const UavRecord& u, const Vec3& to) const;
  void services();
  void finish_service(AgvRecord& a);
  void fsm_phase();
  void apply_agv_effects(AgvRecord& a, const std::vector<fsm::Effect>& effects, const AgvCommandMsg* cmd);
  void apply_uav_effects(UavRecord& u, const std::vector<fsm::Effect>& effects, const UavCommandMsg* cmd);
  void mgmt_phase();
  void master_phase();
  void write_snapshot();

  fsm::UavCondition uav_condition(const UavRecord& u) const;
  fsm::AgvCondition agv_condition(const AgvRecord& a) const;

  std::shared_ptr<const ScenarioConfig> config_;
  EngineOptions options_;
  CycleScheme scheme_;
  NodeClock clock_;
  std::int64_t tick_ = 0;
  bool finished_ = false;

  std::vector<UavRecord> uavs_;
  std::vector<AgvRecord> agvs_;
  std::map<NodeId, AgvId> claims_;
  std::map<StationId, UavId> pad_;
  std::map<OrderId, Order> orders_;

  MessageBus bus_;
  UavManagementNode uav_mgmt_;
  AgvManagementNode agv_mgmt_;
  std::unique_ptr<MasterNode> master_;
  EventTrace trace_;
  OnlineCounters counters_;

  std::int64_t climb_ticks_ = 0;
  std::int64_t descend_ticks_ = 0;
  std::int64_t load_ticks_ = 0;
  std::int64_t swap_ticks_ = 0;
  std::int64_t unload_ticks_ = 0;

  std::unique_ptr<Worker> worker_;
  std::int64_t wall_start_ns_ = 0;
};

struct RunResult {
  MetricsReport metrics;
  nlohmann::json summary;
  std::int64_t violations = 0;
};

/// Builds an engine, runs it for the configured duration and returns metrics.
RunResult run(const ScenarioConfig& config, const std::vector<Order>& orders, EngineOptions options = {});

/// Orders for a config from its order model and seed.
std::vector<Order> default_orders(const ScenarioConfig& config);

}  // namespace uavsched
