#include "uavsched/engine.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <ostream>
#include <thread>

namespace uavsched {

using nlohmann::json;

/// One persistent helper thread; the caller runs the other half of the work.
class Worker {
 public:
  Worker() : thread_([this] { loop(); }) {}
  ~Worker() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
  }
  void submit(std::function<void()> job) {
    {
      std::lock_guard lock(mutex_);
      job_ = std::move(job);
      done_ = false;
    }
    cv_.notify_all();
  }
  void wait() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return done_; });
  }

 private:
  void loop() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return stop_ || job_; });
        if (!job_) return;
        job = std::move(job_);
        job_ = nullptr;
      }
      job();
      {
        std::lock_guard lock(mutex_);
        done_ = true;
      }
      cv_.notify_all();
    }
  }

  std::mutex mutex_;
  std::condition_variable cv_;
  std::function<void()> job_;
  bool done_ = true;
  bool stop_ = false;
  std::thread thread_;
};

namespace {

constexpr double kGroundEps = 1e-9;
constexpr double kReleaseDistM = 3.2;
constexpr double kAgvBrakeMarginM = 0.05;
constexpr double kUavBrakeMarginM = 0.25;

Vec3 lerp(const Vec3& a, const Vec3& b, double f) {
  return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f, a.z + (b.z - a.z) * f};
}

json xyz(const Vec3& p) { return json::array({p.x, p.y, p.z}); }

std::string_view phase_name(FlightPhase p) {
  switch (p) {
    case FlightPhase::None: return "none";
    case FlightPhase::Climb: return "climb";
    case FlightPhase::Cruise: return "cruise";
    case FlightPhase::Hover: return "hover";
    case FlightPhase::Descend: return "descend";
    case FlightPhase::Taxi: return "taxi";
  }
  return "?";
}

bool airborne(const UavRecord& u) {
  return u.phase != FlightPhase::None && u.phase != FlightPhase::Taxi && u.pose.z > kGroundEps;
}

double remaining_route(const UavRecord& u) {
  const auto& w = u.route->waypoints;
  if (u.segment + 1 >= w.size()) return 0.0;
  double d = distance(u.pose, w[u.segment + 1]);
  for (std::size_t i = u.segment + 1; i + 1 < w.size(); ++i) d += distance(w[i], w[i + 1]);
  return d;
}

}  // namespace

Engine::Engine(const ScenarioConfig& config, std::vector<Order> orders, EngineOptions options)
    : config_(std::make_shared<ScenarioConfig>(config)), options_(options) {
  validate(*config_);
  scheme_ = CycleScheme::build(config_->layout, config_->scheme, config_->fleet.agvs);
  const double dt = config_->dt_s;
  climb_ticks_ = std::max<std::int64_t>(1, to_ticks(config_->flight.overhead_s / 2, dt));
  descend_ticks_ = climb_ticks_;
  load_ticks_ = to_ticks(config_->service_times.load_s, dt);
  swap_ticks_ = to_ticks(config_->service_times.battery_swap_s, dt);
  unload_ticks_ = to_ticks(config_->service_times.unload_s, dt);

  for (const auto& o : orders) orders_.emplace(o.id, o);

  std::map<LoopId, std::vector<AgvId>> per_loop;
  for (const auto& [agv, loop] : scheme_.agv_assignment) per_loop[loop].push_back(agv);
  for (const auto& [loop_id, ids] : per_loop) {
    const auto& loop = scheme_.loop(loop_id);
    const auto nodes = scheme_.initial_nodes(loop_id, static_cast<int>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      AgvRecord a;
      a.id = ids[i];
      a.loop = loop_id;
      a.pos = loop.position(nodes[i]);
      a.loop_pos_m = loop.offset(nodes[i]);
      a.last_node = a.target = nodes[i];
      a.at_node = nodes[i];
      claims_[nodes[i]] = a.id;
      agvs_.push_back(a);
    }
  }
  std::sort(agvs_.begin(), agvs_.end(), [](const AgvRecord& a, const AgvRecord& b) { return a.id < b.id; });

  for (int i = 1; i <= config_->fleet.uavs; ++i) {
    UavRecord u;
    u.id = UavId{i};
    const auto& loop = scheme_.loops[static_cast<std::size_t>(i - 1) % scheme_.loops.size()];
    u.workbench = loop.loading();
    u.pose = lift(loop.position(loop.loading()));
    uavs_.push_back(u);
  }

  for (const auto& u : uavs_) uav_mgmt_.add_vehicle(u.id);
  for (const auto& a : agvs_) agv_mgmt_.add_vehicle(a.id);
  master_ = std::make_unique<MasterNode>(config_, std::move(orders), clock_);
  trace_.set_stream(options_.trace_out);
  if (options_.mode == ExecMode::Concurrent) worker_ = std::make_unique<Worker>();
  wall_start_ns_ = std::chrono::duration_cast<std::chrono::nanoseconds>(
                       std::chrono::steady_clock::now().time_since_epoch())
                       .count();
  emit_meta();
}

Engine::~Engine() = default;

std::int64_t Engine::total_ticks() const { return to_ticks(config_->duration_s, config_->dt_s); }

const UavRecord& Engine::uav(UavId id) const {
  for (const auto& u : uavs_)
    if (u.id == id) return u;
  throw std::out_of_range("unknown UAV " + std::to_string(id.value));
}
const AgvRecord& Engine::agv(AgvId id) const {
  for (const auto& a : agvs_)
    if (a.id == id) return a;
  throw std::out_of_range("unknown AGV " + std::to_string(id.value));
}
UavRecord& Engine::uav_mut(UavId id) { return const_cast<UavRecord&>(uav(id)); }
AgvRecord& Engine::agv_mut(AgvId id) { return const_cast<AgvRecord&>(agv(id)); }
const LoopGeometry& Engine::loop_of(const AgvRecord& a) const { return scheme_.loop(a.loop); }

void Engine::emit_meta() {
  const auto& c = *config_;
  json nodes = json::array();
  for (const auto& n : c.layout.nodes) {
    static constexpr const char* kKinds[] = {"loading", "takeoff", "hold", "landing", "waypoint"};
    nodes.push_back({{"id", n.id.value}, {"kind", kKinds[static_cast<int>(n.kind)]}, {"pos_m", {n.pos.x, n.pos.y}}});
  }
  json loops = json::array();
  for (const auto& l : c.layout.loops) {
    json ids = json::array();
    for (NodeId n : l.nodes) ids.push_back(n.value);
    loops.push_back({{"id", l.id.value}, {"nodes", ids}});
  }
  json stations = json::array();
  for (const auto& s : c.layout.stations) stations.push_back(s.id.value);
  json uavs = json::array();
  for (const auto& u : uavs_)
    uavs.push_back({{"id", u.id.value}, {"state", fsm::to_string(u.state)}, {"pos_m", xyz(u.pose)}});
  json agvs = json::array();
  for (const auto& a : agvs_)
    agvs.push_back({{"id", a.id.value},
                    {"state", fsm::to_string(a.state)},
                    {"loop", a.loop.value},
                    {"node", a.at_node->value},
                    {"pos_m", xyz(lift(a.pos))}});
  trace_.emit(0, EventKind::Meta,
              {{"scheme", to_string(c.scheme)},
               {"n_uavs", c.fleet.uavs},
               {"n_agvs", c.fleet.agvs},
               {"n_staff", c.fleet.staff},
               {"dt_s", c.dt_s},
               {"duration_s", c.duration_s},
               {"ticks", total_ticks()},
               {"seed", c.seed},
               {"go_gap_s", c.go_gap_s},
               {"land_gap_s", c.flight.land_gap_s},
               {"overhead_s", c.flight.overhead_s},
               {"uav_max_mps", c.speeds.uav_max_mps},
               {"agv_max_mps", c.speeds.agv_max_mps},
               {"min_dist_uav_m", c.min_dist.uav_m},
               {"min_dist_agv_m", c.min_dist.agv_m},
               {"master_period", clock_.master_period},
               {"orders", orders_.size()},
               {"nodes", nodes},
               {"loops", loops},
               {"stations", stations},
               {"uavs", uavs},
               {"agvs", agvs}});
  for (const auto& a : agvs_) trace_.emit(0, EventKind::AgvArrive, {{"agv", a.id.value}, {"node", a.at_node->value}});
  std::vector<PoseRecord> poses;
  for (const auto& u : uavs_) poses.push_back({true, u.id.value, u.pose});
  for (const auto& a : agvs_) poses.push_back({false, a.id.value, lift(a.pos)});
  trace_.emit_poses(0, poses);
}

// -- stepping ---------------------------------------------------------------

void Engine::step() {
  if (finished_) throw std::logic_error("engine already finished");
  ++tick_;
  motion();
  services();
  fsm_phase();
  mgmt_phase();
  if (tick_ % clock_.master_period == 0) master_phase();
  counters_.agv_ticks += static_cast<std::int64_t>(agvs_.size());
  counters_.staff_ticks += config_->fleet.staff;
  if (options_.snapshot_out && options_.snapshot_every > 0 && tick_ % options_.snapshot_every == 0) write_snapshot();
  if (options_.realtime) {
    const auto due = std::chrono::steady_clock::time_point(std::chrono::nanoseconds(wall_start_ns_)) +
                     std::chrono::nanoseconds(static_cast<std::int64_t>(static_cast<double>(tick_) * config_->dt_s * 1e9));
    std::this_thread::sleep_until(due);
  }
}

void Engine::run_until(std::int64_t tick) {
  while (tick_ < tick) step();
}

void Engine::run() {
  run_until(total_ticks());
  finish();
}

void Engine::motion() {
  std::vector<Vec3> before_u;
  std::vector<Vec2> before_a;
  for (const auto& u : uavs_) before_u.push_back(u.pose);
  for (const auto& a : agvs_) before_a.push_back(a.pos);

  for (auto& a : agvs_)
    if (!agv_mgmt_.halted(a.id)) move_agv(a);
  for (auto& u : uavs_)
    if (u.on_agv) u.pose = lift(agv(*u.on_agv).pos);
  for (auto& u : uavs_)
    if (!uav_mgmt_.halted(u.id)) move_uav(u);

  std::vector<PoseRecord> moved;
  for (std::size_t i = 0; i < uavs_.size(); ++i)
    if (!(uavs_[i].pose == before_u[i])) moved.push_back({true, uavs_[i].id.value, uavs_[i].pose});
  for (std::size_t i = 0; i < agvs_.size(); ++i) {
    if (!(agvs_[i].pos == before_a[i])) {
      moved.push_back({false, agvs_[i].id.value, lift(agvs_[i].pos)});
      ++counters_.agv_busy_ticks;
    }
  }
  trace_.emit_poses(tick_, moved);

  for (auto& v : distance_monitor()) {
    if (v["type"] == "uav_distance")
      ++counters_.uav_violations;
    else
      ++counters_.agv_violations;
    trace_.emit(tick_, EventKind::Violation, std::move(v));
  }
}

void Engine::move_agv(AgvRecord& a) {
  if (a.service != ServiceKind::None) return;
  const LoopGeometry& loop = loop_of(a);
  const double step_len = config_->speeds.agv_max_mps * config_->dt_s;

  auto brake = [&](const Vec2& to) {
    for (const auto& b : agvs_) {
      if (b.id == a.id) continue;
      const double d = distance(to, b.pos);
      if (d < config_->min_dist.agv_m + kAgvBrakeMarginM && d < distance(a.pos, b.pos)) return true;
    }
    return false;
  };

  NodeId from = a.last_node;
  double progress = 0.0;
  if (a.at_node) {
    if (*a.at_node == a.target) return;
    // Interlock: stay put while a cleared UAV is on final approach onto it.
    for (const auto& u : uavs_)
      if (u.cleared && u.landing && u.reserved_agv == a.id) return;
    from = *a.at_node;
    const NodeId next = loop.next(from);
    auto c = claims_.find(next);
    if (c != claims_.end() && c->second != a.id) return;
    const Vec2 p0 = loop.position(from);
    const Vec2 p1 = loop.position(next);
    const double len = distance(p0, p1);
    const double s = std::min(step_len, len);
    const Vec2 to{p0.x + (p1.x - p0.x) * s / len, p0.y + (p1.y - p0.y) * s / len};
    if (brake(to)) return;
    claims_[next] = a.id;
    a.trailing_claim = from;
    a.at_node.reset();
    a.last_node = from;
    trace_.emit(tick_, EventKind::AgvDepart, {{"agv", a.id.value}, {"node", from.value}});
  } else {
    progress = loop.arc(loop.offset(from), a.loop_pos_m);
  }

  const NodeId next = loop.next(from);
  const Vec2 p0 = loop.position(from);
  const Vec2 p1 = loop.position(next);
  const double len = distance(p0, p1);
  const double s = std::min(step_len, len - progress);
  const double np = progress + s;
  const bool arrive = np >= len - kGroundEps;
  const Vec2 to = arrive ? p1 : Vec2{p0.x + (p1.x - p0.x) * np / len, p0.y + (p1.y - p0.y) * np / len};
  if (!a.at_node && brake(to)) return;

  a.pos = to;
  if (arrive) {
    a.at_node = next;
    a.last_node = next;
    a.loop_pos_m = loop.offset(next);
    trace_.emit(tick_, EventKind::AgvArrive, {{"agv", a.id.value}, {"node", next.value}});
  } else {
    a.loop_pos_m = std::fmod(loop.offset(from) + np, loop.length());
  }
  if (a.trailing_claim && (arrive || distance(a.pos, loop.position(*a.trailing_claim)) >= kReleaseDistM)) {
    auto c = claims_.find(*a.trailing_claim);
    if (c != claims_.end() && c->second == a.id) claims_.erase(c);
    a.trailing_claim.reset();
  }
}

bool Engine::uav_move_allowed(const UavRecord& u, const Vec3& to) const {
  for (const auto& o : uavs_) {
    if (o.id == u.id || !airborne(o)) continue;
    const double d = distance(to, o.pose);
    if (d < config_->min_dist.uav_m + kUavBrakeMarginM && d < distance(u.pose, o.pose)) return false;
  }
  return true;
}

bool Engine::clearance(UavRecord& u) {
  if (u.route->direction == Direction::Outbound) {
    auto it = pad_.find(*u.station);
    if (it != pad_.end() && it->second != u.id) return false;
    pad_[*u.station] = u.id;
    return true;
  }
  // Any empty AGV at the landing point that no other returning UAV holds;
  // the ground side may have moved the reservation forward in the lane.
  auto c = claims_.find(*u.landing);
  if (c == claims_.end()) return false;
  const AgvRecord& a = agv(c->second);
  if (a.at_node != u.landing || a.carrying || a.service != ServiceKind::None) return false;
  if (a.id != *u.reserved_agv) {
    for (const auto& o : uavs_)
      if (o.id != u.id && o.reserved_agv == a.id) return false;
    u.reserved_agv = a.id;
  }
  return true;
}

void Engine::cruise(UavRecord& u) {
  const auto& w = u.route->waypoints;
  const double remaining = remaining_route(u);
  double step_len = config_->speeds.uav_max_mps * config_->dt_s;
  if (!u.cleared && remaining - step_len <= u.hold_short_m + kGroundEps) {
    if (clearance(u)) {
      u.cleared = true;
      u.phase = FlightPhase::Cruise;
    } else {
      step_len = std::max(0.0, remaining - u.hold_short_m);
      if (step_len <= kGroundEps) {
        u.phase = FlightPhase::Hover;
        if (!u.hover_logged) {
          u.hover_logged = true;
          ++counters_.anomalies;
          json d{{"type", "hover"}, {"uav", u.id.value}, {"pos_m", xyz(u.pose)}};
          if (u.route->direction == Direction::Outbound) {
            d["reason"] = "station pad occupied";
            d["station"] = u.station->value;
          } else {
            d["reason"] = "reserved AGV not at landing point";
            d["agv"] = u.reserved_agv->value;
            d["landing"] = u.landing->value;
          }
          trace_.emit(tick_, EventKind::Anomaly, std::move(d));
        }
        return;
      }
    }
  }

  Vec3 p = u.pose;
  std::size_t seg = u.segment;
  double left = step_len;
  while (left > kGroundEps && seg + 1 < w.size()) {
    const double d = distance(p, w[seg + 1]);
    if (d <= left + kGroundEps) {
      p = w[seg + 1];
      left -= d;
      ++seg;
    } else {
      p = lerp(p, w[seg + 1], left / d);
      left = 0.0;
    }
  }
  if (!uav_move_allowed(u, p)) return;
  u.pose = p;
  u.segment = seg;
  if (seg + 1 >= w.size()) {
    u.phase = FlightPhase::Descend;
    u.phase_ticks = 0;
    u.phase_total = descend_ticks_;
    u.vertical_from = u.pose;
    u.vertical_to = {u.pose.x, u.pose.y, 0.0};
  }
}

void Engine::move_uav(UavRecord& u) {
  switch (u.phase) {
    case FlightPhase::None: return;
    case FlightPhase::Cruise:
    case FlightPhase::Hover: cruise(u); return;
    case FlightPhase::Climb:
    case FlightPhase::Descend:
    case FlightPhase::Taxi: break;
  }
  ++u.phase_ticks;
  u.pose = lerp(u.vertical_from, u.vertical_to, static_cast<double>(u.phase_ticks) / static_cast<double>(u.phase_total));
  if (u.phase_ticks < u.phase_total) return;
  u.pose = u.vertical_to;
  if (u.phase == FlightPhase::Climb) {
    u.phase = FlightPhase::Cruise;
    u.segment = 0;
  } else if (u.phase == FlightPhase::Descend) {
    touchdown(u);
  } else {
    u.phase = FlightPhase::None;
    u.parked = true;
    u.on_pad = false;
    auto it = pad_.find(*u.station);
    if (it != pad_.end() && it->second == u.id) pad_.erase(it);
  }
}

void Engine::touchdown(UavRecord& u) {
  u.phase = FlightPhase::None;
  u.pose.z = 0.0;
  u.hover_logged = false;
  if (u.route->direction == Direction::Outbound) {
    u.on_pad = true;
    u.touchdown_tick = tick_;
    u.unload_remaining = unload_ticks_;
    u.unload_done = false;
    json d{{"uav", u.id.value}, {"station", u.station->value}};
    if (u.order) d["order"] = u.order->value;
    trace_.emit(tick_, EventKind::Arrival, d);
    d["kind"] = "unload";
    trace_.emit(tick_, EventKind::ServiceStart, std::move(d));
    u.route.reset();
    return;
  }
  AgvRecord& a = agv_mut(*u.reserved_agv);
  if (a.at_node == u.landing && !a.carrying) {
    u.on_agv = a.id;
    a.carrying = u.id;
    ++u.visits_since_swap;
    u.swap_due = u.visits_since_swap >= config_->policy.swap_every;
    trace_.emit(tick_, EventKind::Landing,
                {{"uav", u.id.value}, {"agv", a.id.value}, {"node", u.landing->value}});
  } else {
    ++counters_.anomalies;
    trace_.emit(tick_, EventKind::Anomaly,
                {{"type", "landing_without_agv"}, {"uav", u.id.value}, {"agv", a.id.value}, {"node", u.landing->value}});
  }
  u.station.reset();
  u.route.reset();
  u.landing.reset();
  u.reserved_agv.reset();
}

void Engine::services() {
  for (auto& a : agvs_) {
    if (a.service == ServiceKind::None || agv_mgmt_.halted(a.id)) continue;
    ++counters_.agv_busy_ticks;
    ++counters_.staff_busy_ticks;
    if (--a.service_remaining <= 0) finish_service(a);
  }
  for (auto& u : uavs_) {
    if (!u.on_pad || u.unload_remaining <= 0 || uav_mgmt_.halted(u.id)) continue;
    if (--u.unload_remaining == 0) {
      u.unload_done = true;
      trace_.emit(tick_, EventKind::ServiceEnd, {{"kind", "unload"}, {"uav", u.id.value}, {"station", u.station->value}});
    }
  }
}

void Engine::finish_service(AgvRecord& a) {
  json d{{"kind", to_string(a.service)}, {"agv", a.id.value}};
  if (a.staff) d["staff"] = *a.staff;
  if (a.carrying) {
    UavRecord& u = uav_mut(*a.carrying);
    d["uav"] = u.id.value;
    if (a.service == ServiceKind::Load) {
      u.cargo = true;
      a.cargo_loaded = true;
      if (!u.order) {
        ++counters_.anomalies;
        trace_.emit(tick_, EventKind::Anomaly, {{"type", "cargo_without_order"}, {"uav", u.id.value}});
      }
    } else {
      u.visits_since_swap = 0;
      u.swap_due = false;
    }
  }
  a.service = ServiceKind::None;
  a.service_remaining = 0;
  a.staff.reset();
  trace_.emit(tick_, EventKind::ServiceEnd, std::move(d));
}

fsm::UavCondition Engine::uav_condition(const UavRecord& u) const {
  fsm::UavCondition c;
  c.landed = u.phase == FlightPhase::None || u.phase == FlightPhase::Taxi;
  c.on_car = u.on_agv.has_value();
  c.get_cargo = u.cargo;
  c.retrieved = u.workbench.has_value();
  return c;
}

fsm::AgvCondition Engine::agv_condition(const AgvRecord& a) const {
  fsm::AgvCondition c;
  c.have_uav = a.carrying.has_value();
  if (a.at_node) {
    c.in_gw = config_->layout.node(*a.at_node).kind == NodeKind::Loading;
    c.in_aw = !c.in_gw && config_->layout.aw_region.contains(a.pos);
  }
  c.cargo_loaded = a.cargo_loaded;
  return c;
}

void Engine::fsm_phase() {
  auto parallel_for = [this](std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (worker_ && n > 1) {
      const std::size_t mid = n / 2;
      worker_->submit([&fn, mid] {
        for (std::size_t i = 0; i < mid; ++i) fn(i);
      });
      for (std::size_t i = mid; i < n; ++i) fn(i);
      worker_->wait();
    } else {
      for (std::size_t i = 0; i < n; ++i) fn(i);
    }
  };

  struct AgvOut {
    bool active = false;
    fsm::StepResult<fsm::AgvState> result{};
  };
  std::vector<AgvOut> agv_out(agvs_.size());
  parallel_for(agvs_.size(), [&](std::size_t i) {
    const AgvRecord& a = agvs_[i];
    if (std::as_const(agv_mgmt_).halted(a.id)) return;
    const auto& pending = std::as_const(agv_mgmt_).pending(a.id);
    std::optional<fsm::AgvCommand> cmd;
    if (pending) cmd = std::get<fsm::AgvCommand>(pending->action);
    agv_out[i] = {true, fsm::agv_step(a.state, cmd, agv_condition(a))};
  });
  for (std::size_t i = 0; i < agvs_.size(); ++i) {
    if (!agv_out[i].active) continue;
    AgvRecord& a = agvs_[i];
    const auto& r = agv_out[i].result;
    std::optional<AgvCommandMsg> cmd;
    if (r.consumed) {
      cmd = agv_mgmt_.pending(a.id);
      agv_mgmt_.pending(a.id).reset();
    }
    if (r.state != a.state) {
      trace_.emit(tick_, EventKind::Transition,
                  {{"m", "agv"},
                   {"id", a.id.value},
                   {"from", fsm::to_string(a.state)},
                   {"to", fsm::to_string(r.state)},
                   {"cause", cmd ? "cmd:" + command_name(*cmd) : std::string("cond")}});
      a.state = r.state;
    }
    apply_agv_effects(a, r.effects, cmd ? &*cmd : nullptr);
  }

  struct UavOut {
    bool active = false;
    fsm::StepResult<fsm::UavState> result{};
  };
  std::vector<UavOut> uav_out(uavs_.size());
  parallel_for(uavs_.size(), [&](std::size_t i) {
    const UavRecord& u = uavs_[i];
    if (std::as_const(uav_mgmt_).halted(u.id)) return;
    const auto& pending = std::as_const(uav_mgmt_).pending(u.id);
    std::optional<fsm::UavCommand> cmd;
    if (pending) cmd = pending->cmd;
    uav_out[i] = {true, fsm::uav_step(u.state, cmd, uav_condition(u))};
  });
  for (std::size_t i = 0; i < uavs_.size(); ++i) {
    if (!uav_out[i].active) continue;
    UavRecord& u = uavs_[i];
    const auto& r = uav_out[i].result;
    std::optional<UavCommandMsg> cmd;
    if (r.consumed) {
      cmd = uav_mgmt_.pending(u.id);
      uav_mgmt_.pending(u.id).reset();
    }
    if (r.state != u.state) {
      trace_.emit(tick_, EventKind::Transition,
                  {{"m", "uav"},
                   {"id", u.id.value},
                   {"from", fsm::to_string(u.state)},
                   {"to", fsm::to_string(r.state)},
                   {"cause", cmd ? "cmd:" + command_name(*cmd) : std::string("cond")}});
      u.state = r.state;
    }
    apply_uav_effects(u, r.effects, cmd ? &*cmd : nullptr);
  }
}

void Engine::apply_agv_effects(AgvRecord& a, const std::vector<fsm::Effect>& effects, const AgvCommandMsg* cmd) {
  using fsm::Effect;
  for (Effect e : effects) {
    switch (e) {
      case Effect::MountUav: {
        bool ok = false;
        if (cmd && cmd->uav && a.at_node) {
          UavRecord& u = uav_mut(*cmd->uav);
          if (u.state == fsm::UavState::Ready && u.workbench == a.at_node && !u.on_agv) {
            u.on_agv = a.id;
            u.workbench.reset();
            u.pose = lift(a.pos);
            a.carrying = u.id;
            ok = true;
            trace_.emit(tick_, EventKind::ServiceStart,
                        {{"kind", "mount"}, {"agv", a.id.value}, {"uav", u.id.value}, {"node", a.at_node->value}});
          }
        }
        if (!ok) {
          ++counters_.anomalies;
          trace_.emit(tick_, EventKind::Anomaly, {{"type", "mount_failed"}, {"agv", a.id.value}});
        }
        break;
      }
      case Effect::UnmountUav: {
        if (a.carrying && a.at_node) {
          UavRecord& u = uav_mut(*a.carrying);
          u.on_agv.reset();
          u.workbench = a.at_node;
          u.pose = lift(a.pos);
          trace_.emit(tick_, EventKind::ServiceEnd,
                      {{"kind", "mount"}, {"agv", a.id.value}, {"uav", u.id.value}, {"node", a.at_node->value}});
        }
        a.carrying.reset();
        a.cargo_loaded = false;
        break;
      }
      case Effect::BeginLoad:
      case Effect::BeginSwap: {
        const bool load = e == Effect::BeginLoad;
        a.service = load ? ServiceKind::Load : ServiceKind::Swap;
        a.service_remaining = load ? load_ticks_ : swap_ticks_;
        a.staff = cmd ? cmd->staff : std::nullopt;
        json d{{"kind", to_string(a.service)}, {"agv", a.id.value}};
        if (a.carrying) d["uav"] = a.carrying->value;
        if (a.staff) d["staff"] = *a.staff;
        trace_.emit(tick_, EventKind::ServiceStart, std::move(d));
        if (a.service_remaining <= 0) finish_service(a);
        break;
      }
      case Effect::Reject: {
        ++counters_.anomalies;
        json d{{"m", "agv"}, {"id", a.id.value}, {"state", fsm::to_string(a.state)}};
        if (cmd) d["cmd"] = command_name(*cmd);
        trace_.emit(tick_, EventKind::Rejected, std::move(d));
        break;
      }
      default: break;
    }
  }
}

void Engine::apply_uav_effects(UavRecord& u, const std::vector<fsm::Effect>& effects, const UavCommandMsg* cmd) {
  using fsm::Effect;
  for (Effect e : effects) {
    switch (e) {
      case Effect::StartFlight: {
        if (!cmd || !cmd->route || cmd->route->waypoints.size() < 2) {
          ++counters_.anomalies;
          trace_.emit(tick_, EventKind::Anomaly, {{"type", "delivery_without_route"}, {"uav", u.id.value}});
          break;
        }
        if (u.on_agv) {
          AgvRecord& a = agv_mut(*u.on_agv);
          a.carrying.reset();
          a.cargo_loaded = false;
          u.on_agv.reset();
        }
        u.route = cmd->route;
        u.station = cmd->route->station;
        u.landing = cmd->landing;
        u.reserved_agv = cmd->agv;
        u.parked = false;
        u.cleared = false;
        u.hover_logged = false;
        u.segment = 0;
        u.hold_short_m = std::min(10.0, u.route->length());
        u.phase = FlightPhase::Climb;
        u.phase_ticks = 0;
        u.phase_total = climb_ticks_;
        u.vertical_from = u.pose;
        u.vertical_to = u.route->waypoints.front();
        break;
      }
      case Effect::DropCargo: {
        u.cargo = false;
        u.unload_done = false;
        if (u.order) {
          auto it = orders_.find(*u.order);
          if (it != orders_.end() && !it->second.finish_t) {
            Order& o = it->second;
            o.finish_t = time().seconds();
            const double s = score(o);
            ++counters_.delivered;
            counters_.score_sum += s;
            trace_.emit(tick_, EventKind::OrderDone,
                        {{"order", o.id.value},
                         {"uav", u.id.value},
                         {"station", o.station.value},
                         {"order_t", o.order_t},
                         {"better_t", o.better_t},
                         {"timeout_t", o.timeout_t},
                         {"finish_t", *o.finish_t},
                         {"score", s}});
          }
        }
        u.order.reset();
        const Station& st = config_->layout.station(*u.station);
        u.phase = FlightPhase::Taxi;
        u.phase_ticks = 0;
        u.vertical_from = u.pose;
        u.vertical_to = lift(st.parking);
        const double per_tick = config_->speeds.uav_max_mps * config_->dt_s;
        u.phase_total = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::ceil(distance(u.vertical_from, u.vertical_to) / per_tick - 1e-9)));
        break;
      }
      case Effect::TakeCargo: {
        if (cmd) {
          u.order = cmd->order;
          u.station = cmd->station;
        }
        break;
      }
      case Effect::Reject: {
        ++counters_.anomalies;
        json d{{"m", "uav"}, {"id", u.id.value}, {"state", fsm::to_string(u.state)}};
        if (cmd) d["cmd"] = fsm::to_string(cmd->cmd);
        trace_.emit(tick_, EventKind::Rejected, std::move(d));
        break;
      }
      default: break;
    }
  }
}

void Engine::mgmt_phase() {
  const auto uav_cmds = bus_.take_uav_commands();
  const auto agv_cmds = bus_.take_agv_commands();
  uav_mgmt_.deliver(tick_, uav_cmds, trace_);
  uav_mgmt_.auto_release(tick_, uavs_, trace_);
  agv_mgmt_.deliver(tick_, agv_cmds, agvs_, scheme_, trace_);

  std::vector<StatusMsg> su;
  std::vector<StatusMsg> sa;
  if (worker_) {
    worker_->submit([&] { su = uav_mgmt_.publish(tick_, uavs_); });
    sa = agv_mgmt_.publish(tick_, agvs_);
    worker_->wait();
  } else {
    su = uav_mgmt_.publish(tick_, uavs_);
    sa = agv_mgmt_.publish(tick_, agvs_);
  }
  bool overflow = false;
  for (auto& s : su) overflow |= !bus_.publish(std::move(s));
  for (auto& s : sa) overflow |= !bus_.publish(std::move(s));
  if (overflow) {
    ++counters_.anomalies;
    trace_.emit(tick_, EventKind::Anomaly, {{"type", "bus_overflow"}, {"topic", "status"}});
  }
}

void Engine::master_phase() {
  for (const auto& s : bus_.take_statuses()) master_->ingest(s);
  for (auto& c : master_->master_tick(tick_, trace_)) {
    if (!bus_.publish(std::move(c))) {
      ++counters_.anomalies;
      trace_.emit(tick_, EventKind::Anomaly, {{"type", "bus_overflow"}, {"topic", "command"}});
    }
  }
}

void Engine::write_snapshot() {
  json u = json::array();
  for (const auto& r : uavs_) {
    json j = to_json(status_of(r, tick_));
    j["phase"] = phase_name(r.phase);
    u.push_back(std::move(j));
  }
  json a = json::array();
  for (const auto& r : agvs_) a.push_back(to_json(status_of(r, tick_)));
  *options_.snapshot_out << json{{"t", tick_}, {"uavs", u}, {"agvs", a}}.dump() << '\n';
}

std::vector<json> Engine::distance_monitor() const {
  std::vector<json> out;
  for (std::size_t i = 0; i < uavs_.size(); ++i) {
    if (!airborne(uavs_[i])) continue;
    for (std::size_t j = i + 1; j < uavs_.size(); ++j) {
      if (!airborne(uavs_[j])) continue;
      const double d = distance(uavs_[i].pose, uavs_[j].pose);
      if (d < config_->min_dist.uav_m)
        out.push_back({{"type", "uav_distance"}, {"a", uavs_[i].id.value}, {"b", uavs_[j].id.value}, {"d_m", d}});
    }
  }
  std::vector<AgvPlan> plans;
  for (const auto& a : agvs_) plans.push_back(plan_from_status(status_of(a, tick_), loop_of(a)));
  for (const auto& v : occupancy_check(plans, config_->min_dist.agv_m)) {
    json d{{"type", v.node ? "agv_node" : "agv_distance"}, {"a", v.a.value}, {"b", v.b.value}, {"d_m", v.distance_m}};
    if (v.node) d["node"] = v.node->value;
    out.push_back(std::move(d));
  }
  return out;
}

// -- fleet changes ----------------------------------------------------------

void Engine::halt_uav(UavId id) {
  uav(id);
  uav_mgmt_.halt(id);
  trace_.emit(tick_, EventKind::Halt, {{"kind", "uav"}, {"id", id.value}});
}

void Engine::halt_agv(AgvId id) {
  agv(id);
  agv_mgmt_.halt(id);
  trace_.emit(tick_, EventKind::Halt, {{"kind", "agv"}, {"id", id.value}});
}

void Engine::add_uav(UavId id) {
  if (uav_mgmt_.has(id)) throw std::invalid_argument("duplicate UAV id " + std::to_string(id.value));
  UavRecord u;
  u.id = id;
  const auto& loop = scheme_.loops[static_cast<std::size_t>(id.value - 1) % scheme_.loops.size()];
  u.workbench = loop.loading();
  u.pose = lift(loop.position(loop.loading()));
  uav_mgmt_.add_vehicle(id);
  uavs_.push_back(u);
  std::sort(uavs_.begin(), uavs_.end(), [](const UavRecord& a, const UavRecord& b) { return a.id < b.id; });
  trace_.emit(tick_, EventKind::VehicleAdded,
              {{"kind", "uav"}, {"id", id.value}, {"state", fsm::to_string(u.state)}, {"pos_m", xyz(u.pose)}});
}

void Engine::add_agv(AgvId id, LoopId loop_id, NodeId node) {
  if (agv_mgmt_.has(id)) throw std::invalid_argument("duplicate AGV id " + std::to_string(id.value));
  const LoopGeometry& loop = scheme_.loop(loop_id);
  if (!loop.contains(node)) throw std::invalid_argument("node not on loop");
  if (claims_.count(node)) throw std::invalid_argument("node " + std::to_string(node.value) + " is occupied");
  AgvRecord a;
  a.id = id;
  a.loop = loop_id;
  a.pos = loop.position(node);
  a.loop_pos_m = loop.offset(node);
  a.last_node = a.target = node;
  a.at_node = node;
  claims_[node] = id;
  agv_mgmt_.add_vehicle(id);
  master_->add_agv(id, loop_id);
  scheme_.agv_assignment[id] = loop_id;
  agvs_.push_back(a);
  std::sort(agvs_.begin(), agvs_.end(), [](const AgvRecord& x, const AgvRecord& y) { return x.id < y.id; });
  trace_.emit(tick_, EventKind::VehicleAdded,
              {{"kind", "agv"},
               {"id", id.value},
               {"state", fsm::to_string(a.state)},
               {"loop", loop_id.value},
               {"node", node.value},
               {"pos_m", xyz(lift(a.pos))}});
  trace_.emit(tick_, EventKind::AgvArrive, {{"agv", id.value}, {"node", node.value}});
}

// -- results ----------------------------------------------------------------

MetricsReport Engine::metrics() const {
  MetricsReport m;
  m.scheme = std::string(to_string(config_->scheme));
  m.n_uavs = static_cast<int>(uavs_.size());
  m.seed = config_->seed;
  const double now = time().seconds();
  for (const auto& [_, o] : orders_)
    if (o.order_t <= now) ++m.orders_issued;
  m.delivered = counters_.delivered;
  m.undelivered = m.orders_issued - m.delivered;
  m.score_sum = counters_.score_sum;
  m.score_mean = m.delivered > 0 ? m.score_sum / static_cast<double>(m.delivered) : 0.0;
  m.agv_busy = counters_.agv_ticks > 0
                   ? static_cast<double>(counters_.agv_busy_ticks) / static_cast<double>(counters_.agv_ticks)
                   : 0.0;
  m.staff_busy = counters_.staff_ticks > 0
                     ? static_cast<double>(counters_.staff_busy_ticks) / static_cast<double>(counters_.staff_ticks)
                     : 0.0;
  m.deferrals = master_->deferrals();
  m.anomalies = static_cast<std::int64_t>(trace_.count(EventKind::Anomaly));
  m.violations = counters_.uav_violations + counters_.agv_violations;
  return m;
}

void Engine::finish() {
  if (finished_) return;
  master_->flush_deferrals(tick_, trace_);
  const MetricsReport m = metrics();
  json final_uav = json::object();
  for (const auto& u : uavs_) final_uav[std::to_string(u.id.value)] = fsm::to_string(u.state);
  json final_agv = json::object();
  for (const auto& a : agvs_) final_agv[std::to_string(a.id.value)] = fsm::to_string(a.state);
  trace_.emit(tick_, EventKind::Summary,
              {{"ticks", tick_},
               {"orders_issued", m.orders_issued},
               {"delivered", m.delivered},
               {"undelivered", m.undelivered},
               {"score_sum", m.score_sum},
               {"score_mean", m.score_mean},
               {"agv_busy_ticks", counters_.agv_busy_ticks},
               {"agv_ticks", counters_.agv_ticks},
               {"staff_busy_ticks", counters_.staff_busy_ticks},
               {"staff_ticks", counters_.staff_ticks},
               {"agv_busy", m.agv_busy},
               {"staff_busy", m.staff_busy},
               {"deferrals", m.deferrals},
               {"anomalies", m.anomalies},
               {"uav_violations", counters_.uav_violations},
               {"agv_violations", counters_.agv_violations},
               {"final_uav", final_uav},
               {"final_agv", final_agv}});
  finished_ = true;
}

std::vector<Order> default_orders(const ScenarioConfig& config) {
  return generate_orders(config.orders.rate_per_s, config.duration_s, static_cast<int>(config.layout.stations.size()),
                         config.orders.better_offset_s, config.orders.timeout_offset_s, config.seed);
}

RunResult run(const ScenarioConfig& config, const std::vector<Order>& orders, EngineOptions options) {
  Engine e(config, orders, options);
  e.run();
  RunResult r;
  r.metrics = e.metrics();
  r.summary = e.trace().events().back().data;
  r.violations = r.metrics.violations;
  return r;
}

}  // namespace uavsched
