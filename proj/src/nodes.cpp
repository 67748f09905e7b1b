#include "uavsched/nodes.hpp"

#include <cmath>
#include <stdexcept>

namespace uavsched {

using nlohmann::json;

UavStatus status_of(const UavRecord& r, std::int64_t tick) {
  UavStatus s;
  s.id = r.id;
  s.tick = tick;
  s.state = r.state;
  s.pose = r.pose;
  s.cargo = r.cargo;
  s.order = r.order;
  s.station = r.station;
  s.on_agv = r.on_agv;
  s.workbench = r.workbench;
  s.landed = r.phase == FlightPhase::None || r.phase == FlightPhase::Taxi;
  s.parked = r.parked;
  s.touchdown_tick = r.touchdown_tick;
  s.flights_since_swap = r.visits_since_swap;
  s.swap_due = r.swap_due;
  if (r.cleared && r.landing) s.landing_agv = r.reserved_agv;
  return s;
}

AgvStatus status_of(const AgvRecord& r, std::int64_t tick) {
  AgvStatus s;
  s.id = r.id;
  s.tick = tick;
  s.state = r.state;
  s.pose = lift(r.pos);
  s.carrying = r.carrying;
  s.loop = r.loop;
  s.at_node = r.at_node;
  s.last_node = r.last_node;
  s.target = r.target;
  s.loop_pos_m = r.loop_pos_m;
  s.service = r.service;
  s.service_remaining_ticks = r.service_remaining;
  s.staff = r.staff;
  return s;
}

bool MessageBus::publish(CommandMsg c) {
  if (auto* u = std::get_if<UavCommandMsg>(&c)) return uav_cmd_.push(std::move(*u));
  return agv_cmd_.push(std::move(std::get<AgvCommandMsg>(c)));
}

// -- UAV management ---------------------------------------------------------

void UavManagementNode::add_vehicle(UavId id) {
  if (!slots_.emplace(id, Slot{}).second) throw std::invalid_argument("duplicate UAV id " + std::to_string(id.value));
}

void UavManagementNode::halt(UavId id) { slots_.at(id).halted = true; }
bool UavManagementNode::halted(UavId id) const {
  auto it = slots_.find(id);
  return it != slots_.end() && it->second.halted;
}

void UavManagementNode::deliver(std::int64_t tick, const std::vector<UavCommandMsg>& inbox, EventTrace& trace) {
  for (const auto& cmd : inbox) {
    auto it = slots_.find(cmd.target);
    if (it == slots_.end() || it->second.halted) {
      json d = to_json(cmd);
      d["reason"] = it == slots_.end() ? "unknown target" : "driver halted";
      trace.emit(tick, EventKind::DeadLetter, std::move(d));
      continue;
    }
    if (it->second.pending) {
      trace.emit(tick, EventKind::Replaced,
                 {{"target", "uav:" + std::to_string(cmd.target.value)},
                  {"old", to_json(*it->second.pending)},
                  {"new", to_json(cmd)}});
    }
    it->second.pending = cmd;
    trace.emit(tick, EventKind::Command, to_json(cmd));
  }
}

void UavManagementNode::auto_release(std::int64_t tick, const std::vector<UavRecord>& uavs, EventTrace& trace) {
  for (const auto& r : uavs) {
    auto& slot = slots_.at(r.id);
    if (slot.halted || !r.unload_done || r.state != fsm::UavState::Flying_Go) continue;
    if (slot.pending && slot.pending->cmd == fsm::UavCommand::Release_Cargo) continue;
    UavCommandMsg cmd{r.id, tick, fsm::UavCommand::Release_Cargo, std::nullopt, std::nullopt, std::nullopt, r.order,
                      r.station};
    if (slot.pending)
      trace.emit(tick, EventKind::Replaced,
                 {{"target", "uav:" + std::to_string(r.id.value)}, {"old", to_json(*slot.pending)}, {"new", to_json(cmd)}});
    json d = to_json(cmd);
    d["source"] = "uav_mgmt";
    slot.pending = cmd;
    trace.emit(tick, EventKind::Command, std::move(d));
  }
}

std::vector<StatusMsg> UavManagementNode::publish(std::int64_t tick, const std::vector<UavRecord>& uavs) const {
  std::vector<StatusMsg> out;
  out.reserve(uavs.size());
  for (const auto& r : uavs)
    if (!halted(r.id)) out.emplace_back(status_of(r, tick));
  return out;
}

std::vector<StatusMsg> UavManagementNode::mgmt_tick(std::int64_t tick, const std::vector<UavCommandMsg>& inbox,
                                                    const std::vector<UavRecord>& uavs, EventTrace& trace) {
  deliver(tick, inbox, trace);
  auto_release(tick, uavs, trace);
  return publish(tick, uavs);
}

// -- AGV management ---------------------------------------------------------

void AgvManagementNode::add_vehicle(AgvId id) {
  if (!slots_.emplace(id, Slot{}).second) throw std::invalid_argument("duplicate AGV id " + std::to_string(id.value));
}

void AgvManagementNode::halt(AgvId id) { slots_.at(id).halted = true; }
bool AgvManagementNode::halted(AgvId id) const {
  auto it = slots_.find(id);
  return it != slots_.end() && it->second.halted;
}

void AgvManagementNode::deliver(std::int64_t tick, const std::vector<AgvCommandMsg>& inbox,
                                std::vector<AgvRecord>& agvs, const CycleScheme& scheme, EventTrace& trace) {
  for (const auto& cmd : inbox) {
    auto it = slots_.find(cmd.target);
    if (it == slots_.end() || it->second.halted) {
      json d = to_json(cmd);
      d["reason"] = it == slots_.end() ? "unknown target" : "driver halted";
      trace.emit(tick, EventKind::DeadLetter, std::move(d));
      continue;
    }
    if (const auto* move = std::get_if<MoveTo>(&cmd.action)) {
      AgvRecord* rec = nullptr;
      for (auto& a : agvs)
        if (a.id == cmd.target) rec = &a;
      if (!rec || !scheme.loop(rec->loop).contains(move->node)) {
        json d = to_json(cmd);
        d["reason"] = "target node not on the AGV's loop";
        trace.emit(tick, EventKind::Rejected, std::move(d));
        continue;
      }
      rec->target = move->node;
      trace.emit(tick, EventKind::Command, to_json(cmd));
      continue;
    }
    if (it->second.pending) {
      trace.emit(tick, EventKind::Replaced,
                 {{"target", "agv:" + std::to_string(cmd.target.value)},
                  {"old", to_json(*it->second.pending)},
                  {"new", to_json(cmd)}});
    }
    it->second.pending = cmd;
    trace.emit(tick, EventKind::Command, to_json(cmd));
  }
}

std::vector<StatusMsg> AgvManagementNode::publish(std::int64_t tick, const std::vector<AgvRecord>& agvs) const {
  std::vector<StatusMsg> out;
  out.reserve(agvs.size());
  for (const auto& r : agvs)
    if (!halted(r.id)) out.emplace_back(status_of(r, tick));
  return out;
}

std::vector<StatusMsg> AgvManagementNode::mgmt_tick(std::int64_t tick, const std::vector<AgvCommandMsg>& inbox,
                                                    std::vector<AgvRecord>& agvs, const CycleScheme& scheme,
                                                    EventTrace& trace) {
  deliver(tick, inbox, agvs, scheme, trace);
  return publish(tick, agvs);
}

// -- Master -----------------------------------------------------------------

namespace {

AirParams air_params(const ScenarioConfig& c) {
  AirParams p;
  p.uav_speed_mps = c.speeds.uav_max_mps;
  p.overhead_s = c.flight.overhead_s;
  p.go_gap_s = c.go_gap_s;
  p.land_gap_s = c.flight.land_gap_s;
  p.station_departure_spacing_s = c.flight.overhead_s / 2 + 1.0;
  return p;
}

GroundParams ground_params(const ScenarioConfig& c, const NodeClock& clock) {
  GroundParams p;
  p.agv_speed_mps = c.speeds.agv_max_mps;
  p.dt_s = c.dt_s;
  p.swap_every = c.policy.swap_every;
  p.n_staff = c.fleet.staff;
  p.command_latency_ticks = clock.mgmt_period + clock.fsm_period;
  p.load_s = c.service_times.load_s;
  p.swap_s = c.service_times.battery_swap_s;
  return p;
}

json arrivals_json(const std::vector<ArrivalEntry>& v) {
  json a = json::array();
  for (const auto& e : v) a.push_back({{"uav", e.uav.value}, {"arrival_s", e.arrival_s}});
  return a;
}

}  // namespace

MasterNode::MasterNode(std::shared_ptr<const ScenarioConfig> config, std::vector<Order> orders, NodeClock clock)
    : config_(std::move(config)),
      clock_(clock),
      air_(config_->layout, air_params(*config_)),
      ground_(config_->layout, CycleScheme::build(config_->layout, config_->scheme, config_->fleet.agvs),
              ground_params(*config_, clock_)),
      orders_(std::move(orders)) {}

void MasterNode::ingest(const StatusMsg& status) {
  std::visit(
      [this](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UavStatus>) {
          auto& slot = uav_latest_[s.id];
          if (s.tick >= slot.tick) slot = s;
        } else {
          auto& slot = agv_latest_[s.id];
          if (s.tick >= slot.tick) slot = s;
        }
      },
      status);
}

Snapshot MasterNode::snapshot(std::int64_t tick) const {
  Snapshot snap;
  snap.tick = tick;
  snap.now_s = SimTime(tick, config_->dt_s).seconds();
  const std::int64_t max_age = clock_.mgmt_period + clock_.master_period;
  for (const auto& [id, s] : uav_latest_)
    if (tick - s.tick <= max_age) snap.uavs.emplace(id, s);
  for (const auto& [id, s] : agv_latest_)
    if (tick - s.tick <= max_age) snap.agvs.emplace(id, s);
  return snap;
}

bool MasterNode::uav_in_flight(UavId id, const Snapshot& snap) const {
  auto it = uav_inflight_.find(id);
  if (it == uav_inflight_.end()) return false;
  auto st = snap.uavs.find(id);
  return st != snap.uavs.end() && st->second.tick < it->second + clock_.mgmt_period + clock_.fsm_period;
}

void MasterNode::close_bookings(const Snapshot& snap, EventTrace& trace) {
  const double dt = config_->dt_s;
  for (const auto& [id, u] : snap.uavs) {
    if (u.touchdown_tick && u.station) {
      auto& closed = closed_touchdown_[id];
      if (closed != *u.touchdown_tick) {
        closed = *u.touchdown_tick;
        const ArrivalReport r = air_.on_arrival(id, *u.station, SimTime(*u.touchdown_tick, dt).seconds());
        if (r.booked) {
          trace.emit(snap.tick, EventKind::BookingClosed,
                     {{"uav", id.value},
                      {"station", u.station->value},
                      {"predicted_s", r.predicted_s},
                      {"actual_s", r.actual_s},
                      {"error_s", r.error_s}});
        } else {
          trace.emit(snap.tick, EventKind::Anomaly,
                     {{"type", "unbooked_arrival"}, {"uav", id.value}, {"station", u.station->value}});
        }
        auto last = last_arrival_tick_.find(*u.station);
        if (last != last_arrival_tick_.end() &&
            !(SimTime(*u.touchdown_tick - last->second, dt).seconds() > config_->go_gap_s - 2 * dt)) {
          trace.emit(snap.tick, EventKind::Anomaly,
                     {{"type", "arrival_gap"},
                      {"uav", id.value},
                      {"station", u.station->value},
                      {"gap_s", SimTime(*u.touchdown_tick - last->second, dt).seconds()}});
        }
        last_arrival_tick_[*u.station] = *u.touchdown_tick;
      }
    }
    if (u.on_agv && air_.landings().for_uav(id)) air_.on_landed(id);
  }
}

void MasterNode::admit_takeoffs(const Snapshot& snap, std::vector<CommandMsg>& out, EventTrace& trace) {
  for (const auto& [id, u] : snap.uavs) {
    if (u.state != fsm::UavState::Waitting_Go || !u.on_agv || !u.station || uav_in_flight(id, snap)) continue;
    auto a = snap.agvs.find(*u.on_agv);
    if (a == snap.agvs.end() || a->second.state != fsm::AgvState::Waitting_Go_AW) continue;
    const NodeId takeoff = ground_.scheme().loop_of(a->first).takeoff();
    if (a->second.at_node != takeoff) continue;

    const auto booked = arrivals_json(air_.arrivals().entries(*u.station));
    const TakeoffDecision d = air_.request_takeoff({id, *u.station, snap.now_s}, takeoff);
    json info{{"uav", id.value},   {"dir", "go"},        {"station", u.station->value}, {"takeoff", takeoff.value},
              {"request_s", snap.now_s}, {"flight_s", d.flight_s}, {"arrival_s", d.arrival_s},
              {"go_gap_s", config_->go_gap_s}, {"booked", booked}};
    if (d.approved) {
      out.push_back(UavCommandMsg{id, snap.tick, fsm::UavCommand::Delivery, d.route, std::nullopt, std::nullopt,
                                  u.order, u.station});
      uav_inflight_[id] = snap.tick;
      fold_deferrals(id, info);
      trace.emit(snap.tick, EventKind::Approval, std::move(info));
    } else {
      info["conflict_uav"] = d.conflict->uav.value;
      info["conflict_arrival_s"] = d.conflict->arrival_s;
      defer(snap.tick, id, std::move(info), trace);
    }
  }
}

void MasterNode::admit_returns(const Snapshot& snap, std::vector<CommandMsg>& out, EventTrace& trace) {
  for (const auto& [id, u] : snap.uavs) {
    if (u.state != fsm::UavState::Waitting_Back || !u.parked || !u.station || uav_in_flight(id, snap)) continue;
    if (air_.landings().for_uav(id)) continue;
    const auto candidates = ground_.return_candidates(snap, air_.landings());
    const ReturnDecision d = air_.request_return({id, *u.station, snap.now_s}, candidates);
    json cands = json::array();
    for (const auto& c : candidates)
      cands.push_back({{"landing", c.landing.value}, {"loop", c.loop.value}, {"agv", c.agv.value}, {"eta_s", c.eta_s}});
    json info{{"uav", id.value}, {"dir", "back"}, {"station", u.station->value}, {"request_s", snap.now_s},
              {"candidates", cands}};
    if (d.approved) {
      info["landing"] = d.landing->value;
      info["agv"] = d.agv->value;
      info["loop"] = d.loop->value;
      info["flight_s"] = d.flight_s;
      info["uav_land_s"] = d.uav_land_s;
      info["agv_land_s"] = d.agv_land_s;
      info["reservations"] = air_.landings().reservations(*d.landing) - 1;
      out.push_back(UavCommandMsg{id, snap.tick, fsm::UavCommand::Delivery, d.route, d.landing, d.agv, std::nullopt,
                                  u.station});
      uav_inflight_[id] = snap.tick;
      fold_deferrals(id, info);
      trace.emit(snap.tick, EventKind::Approval, std::move(info));
    } else {
      info["reasons"] = d.reasons;
      defer(snap.tick, id, std::move(info), trace);
    }
  }
}

std::vector<CommandMsg> MasterNode::master_tick(std::int64_t tick, EventTrace& trace) {
  const Snapshot snap = snapshot(tick);
  orders_.release_until(snap.now_s);
  std::vector<CommandMsg> out;
  close_bookings(snap, trace);
  admit_takeoffs(snap, out, trace);
  sync_landings(snap, trace);
  ground_.claim_fetches(snap, air_.landings());
  for (const auto& r : ground_.rebalance(snap, air_.landings())) {
    air_.reassign_landing(r.uav, r.to);
    trace.emit(tick, EventKind::Approval,
               {{"dir", "reassign"}, {"uav", r.uav.value}, {"from", r.from.value}, {"to", r.to.value}});
  }
  admit_returns(snap, out, trace);
  GroundResult g = ground_.plan_ground(snap, air_.landings(), orders_);
  for (auto& c : g.commands) out.push_back(std::move(c));
  return out;
}

void MasterNode::defer(std::int64_t tick, UavId id, json info, EventTrace& trace) {
  ++deferrals_;
  Deferred& d = deferred_[id];
  ++d.pending;
  const std::int64_t every = static_cast<std::int64_t>(std::llround(kDeferralTraceEveryS / config_->dt_s));
  if (d.last_emit && tick - *d.last_emit < every) return;
  info["decisions"] = d.pending;
  d.pending = 0;
  d.last_emit = tick;
  trace.emit(tick, EventKind::Deferral, std::move(info));
}

void MasterNode::fold_deferrals(UavId id, json& approval) {
  auto it = deferred_.find(id);
  if (it == deferred_.end()) return;
  if (it->second.pending > 0) approval["deferrals_folded"] = it->second.pending;
  deferred_.erase(it);
}

void MasterNode::flush_deferrals(std::int64_t tick, EventTrace& trace) {
  for (auto& [id, d] : deferred_) {
    if (d.pending == 0) continue;
    trace.emit(tick, EventKind::Deferral, {{"uav", id.value}, {"decisions", d.pending}, {"final", true}});
    d.pending = 0;
  }
}

void MasterNode::sync_landings(const Snapshot& snap, EventTrace& trace) {
  // A cleared UAV lands on the AGV actually waiting at the point; follow it.
  for (const auto& [id, u] : snap.uavs) {
    if (!u.landing_agv) continue;
    auto booked = air_.landings().for_uav(id);
    if (!booked || booked->second.agv == *u.landing_agv) continue;
    const AgvId was = booked->second.agv;
    if (auto other = air_.landings().for_agv(*u.landing_agv)) air_.reassign_landing(other->second.uav, was);
    air_.reassign_landing(id, *u.landing_agv);
    trace.emit(snap.tick, EventKind::Approval,
               {{"dir", "reassign"}, {"uav", id.value}, {"from", was.value}, {"to", u.landing_agv->value}});
  }
}

void MasterNode::add_agv(AgvId id, LoopId loop) { ground_.add_agv(id, loop); }

}  // namespace uavsched
