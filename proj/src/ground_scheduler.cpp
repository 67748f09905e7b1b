#include "uavsched/ground_scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace uavsched {

namespace {
constexpr double kEps = 1e-9;
}

LoopGeometry::LoopGeometry(const AirportLayout& layout, const LoopDef& def) : id_(def.id), nodes_(def.nodes) {
  for (NodeId n : nodes_) pos_.push_back(layout.node(n).pos);
  double s = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    offsets_.push_back(s);
    s += distance(pos_[i], pos_[(i + 1) % pos_.size()]);
  }
  length_ = s;
  for (NodeId n : nodes_) {
    switch (layout.node(n).kind) {
      case NodeKind::Loading: loading_ = n; break;
      case NodeKind::Takeoff: takeoff_ = n; break;
      case NodeKind::Landing: landing_ = n; break;
      default: break;
    }
  }
}

bool LoopGeometry::contains(NodeId n) const { return std::find(nodes_.begin(), nodes_.end(), n) != nodes_.end(); }

std::size_t LoopGeometry::index(NodeId n) const {
  auto it = std::find(nodes_.begin(), nodes_.end(), n);
  if (it == nodes_.end())
    throw std::out_of_range("node " + std::to_string(n.value) + " not on loop " + std::to_string(id_.value));
  return static_cast<std::size_t>(it - nodes_.begin());
}

NodeId LoopGeometry::next(NodeId n) const { return nodes_[(index(n) + 1) % nodes_.size()]; }

double LoopGeometry::edge_length(NodeId from) const {
  const std::size_t i = index(from);
  return distance(pos_[i], pos_[(i + 1) % pos_.size()]);
}

double LoopGeometry::arc(double from_pos, double to_pos) const {
  double d = to_pos - from_pos;
  if (d < -kEps) d += length_;
  return std::max(d, 0.0);
}

Vec2 LoopGeometry::point_at(double pos) const {
  pos = std::fmod(pos, length_);
  if (pos < 0) pos += length_;
  std::size_t i = static_cast<std::size_t>(std::upper_bound(offsets_.begin(), offsets_.end(), pos) - offsets_.begin());
  i = i == 0 ? 0 : i - 1;
  const Vec2& a = pos_[i];
  const Vec2& b = pos_[(i + 1) % pos_.size()];
  const double len = distance(a, b);
  const double f = len > 0 ? (pos - offsets_[i]) / len : 0.0;
  return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f};
}

bool LoopGeometry::in_return_leg(double pos) const {
  return pos >= offset(landing_) - kEps || pos <= kEps || pos >= length_ - kEps;
}

CycleScheme CycleScheme::build(const AirportLayout& layout, Scheme scheme, int n_agvs) {
  const SchemeShape shape = scheme_shape(scheme);
  const std::string name(to_string(scheme));
  if (static_cast<int>(layout.loops.size()) != shape.loops)
    throw ScenarioError(name + " requires " + std::to_string(shape.loops) + " loops");
  if (n_agvs != shape.loops * shape.agvs_per_loop)
    throw ScenarioError(name + " requires " + std::to_string(shape.loops * shape.agvs_per_loop) + " AGVs (" +
                        std::to_string(shape.agvs_per_loop) + " per loop), got " + std::to_string(n_agvs));
  std::set<NodeId> takeoffs;
  std::set<NodeId> landings;
  CycleScheme cs;
  cs.scheme = scheme;
  for (const auto& def : layout.loops) {
    cs.loops.emplace_back(layout, def);
    takeoffs.insert(cs.loops.back().takeoff());
    landings.insert(cs.loops.back().landing());
  }
  if (static_cast<int>(takeoffs.size()) != shape.takeoff_points)
    throw ScenarioError(name + " requires " + std::to_string(shape.takeoff_points) + " takeoff points");
  if (static_cast<int>(landings.size()) != shape.landing_points)
    throw ScenarioError(name + " requires " + std::to_string(shape.landing_points) + " landing points");
  for (int i = 0; i < n_agvs; ++i)
    cs.agv_assignment[AgvId{i + 1}] = cs.loops[static_cast<std::size_t>(i / shape.agvs_per_loop)].id();
  return cs;
}

const LoopGeometry& CycleScheme::loop(LoopId id) const {
  for (const auto& l : loops)
    if (l.id() == id) return l;
  throw std::out_of_range("unknown loop " + std::to_string(id.value));
}

std::vector<NodeId> CycleScheme::initial_nodes(LoopId id, int count) const {
  const auto& nodes = loop(id).nodes();
  if (count > static_cast<int>(nodes.size())) throw ScenarioError("more AGVs than nodes on a loop");
  std::vector<NodeId> out{nodes.front()};
  for (int i = 1; i < count; ++i) out.push_back(nodes[nodes.size() - static_cast<std::size_t>(i)]);
  return out;
}

std::string_view to_string(GroundAction a) {
  switch (a) {
    case GroundAction::Idle: return "idle";
    case GroundAction::Move: return "move";
    case GroundAction::Wait: return "wait";
    case GroundAction::Service: return "service";
  }
  return "?";
}

AgvPlan plan_from_status(const AgvStatus& s, const LoopGeometry& loop) {
  AgvPlan p;
  p.agv = s.id;
  p.loop = loop.id();
  p.pos = flatten(s.pose);
  p.target = s.target;
  if (s.at_node) {
    p.current_node = p.next_node = *s.at_node;
    p.edge_length_m = loop.edge_length(*s.at_node);
  } else {
    p.current_node = s.last_node;
    p.next_node = loop.next(s.last_node);
    p.edge_length_m = loop.edge_length(s.last_node);
    p.progress_m = std::clamp(loop.arc(loop.offset(s.last_node), s.loop_pos_m), 0.0, p.edge_length_m);
  }
  if (s.service != ServiceKind::None)
    p.action = GroundAction::Service;
  else if (s.at_node && *s.at_node == s.target)
    p.action = GroundAction::Idle;
  else
    p.action = GroundAction::Move;
  return p;
}

double eta_to_landing(const AgvPlan& agv, const LoopGeometry& loop, NodeId landing, double now_s,
                      double pending_service_s, double agv_speed_mps) {
  double remaining = 0.0;
  if (agv.next_node == agv.current_node)
    remaining = loop.arc(loop.offset(agv.current_node), loop.offset(landing));
  else
    remaining = (agv.edge_length_m - agv.progress_m) + loop.arc(loop.offset(agv.next_node), loop.offset(landing));
  return now_s + remaining / agv_speed_mps + pending_service_s;
}

std::vector<OccupancyViolation> occupancy_check(const std::vector<AgvPlan>& plans, double min_dist_m) {
  std::vector<OccupancyViolation> out;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    for (std::size_t j = i + 1; j < plans.size(); ++j) {
      const auto& a = plans[i];
      const auto& b = plans[j];
      const double d = distance(a.pos, b.pos);
      const bool a_stopped = a.next_node == a.current_node;
      const bool b_stopped = b.next_node == b.current_node;
      if (a_stopped && b_stopped && a.current_node == b.current_node)
        out.push_back({a.agv, b.agv, a.current_node, d});
      else if (d < min_dist_m)
        out.push_back({a.agv, b.agv, std::nullopt, d});
    }
  }
  return out;
}

GroundScheduler::GroundScheduler(const AirportLayout& layout, CycleScheme scheme, GroundParams params)
    : layout_(&layout), scheme_(std::move(scheme)), params_(params), staff_(static_cast<std::size_t>(params.n_staff)) {}

void GroundScheduler::add_agv(AgvId id, LoopId loop) {
  scheme_.loop(loop);
  if (!scheme_.agv_assignment.emplace(id, loop).second)
    throw std::invalid_argument("duplicate AGV id " + std::to_string(id.value));
}

bool GroundScheduler::staff_job_active(const StaffJob& job, const Snapshot& snap) const {
  auto it = snap.agvs.find(job.agv);
  if (it == snap.agvs.end()) return false;
  if (it->second.tick < job.issued + params_.command_latency_ticks) return true;
  return it->second.service != ServiceKind::None;
}

std::optional<int> GroundScheduler::free_staff(const Snapshot& snap) const {
  for (std::size_t i = 0; i < staff_.size(); ++i)
    if (!staff_[i] || !staff_job_active(*staff_[i], snap)) return static_cast<int>(i) + 1;
  return std::nullopt;
}

int GroundScheduler::staff_busy(const Snapshot& snap) const {
  int n = 0;
  for (const auto& job : staff_)
    if (job && staff_job_active(*job, snap)) ++n;
  return n;
}

bool GroundScheduler::in_flight(AgvId agv, const Snapshot& snap) const {
  auto it = inflight_.find(agv);
  if (it == inflight_.end()) return false;
  auto st = snap.agvs.find(agv);
  return st != snap.agvs.end() && st->second.tick < it->second + params_.command_latency_ticks;
}

std::optional<UavId> GroundScheduler::unclaimed_bench_uav(const LoopGeometry& loop, const Snapshot& snap) const {
  std::set<UavId> claimed;
  for (const auto& [_, u] : fetch_) claimed.insert(u);
  for (const auto& [uid, u] : snap.uavs)
    if (u.state == fsm::UavState::Ready && u.workbench == loop.loading() && !claimed.count(uid)) return uid;
  return std::nullopt;
}

NodeId GroundScheduler::choose_target(const AgvStatus& s, const LoopGeometry& loop, const Snapshot& snap,
                                      const LandingBook& landings) {
  using fsm::AgvState;
  switch (s.state) {
    case AgvState::Waitting_Go_GW:
    case AgvState::Waitting_Working: return loop.loading();
    case AgvState::Waitting_Go_AW: return loop.takeoff();
    case AgvState::Waitting_Pickup: break;
  }
  if (fetch_.count(s.id)) return loop.loading();
  if (auto r = landings.for_agv(s.id)) return r->first;
  // Waiting at the landing point would block a reserved AGV behind; go round.
  if (!s.carrying && reserved_behind(s, loop, snap, landings)) {
    return loop.next(loop.next(s.at_node ? *s.at_node : s.last_node));
  }
  return loop.landing();
}

void GroundScheduler::prune_fetches(const Snapshot& snap) {
  for (auto it = fetch_.begin(); it != fetch_.end();) {
    auto a = snap.agvs.find(it->first);
    auto u = snap.uavs.find(it->second);
    const bool keep = a != snap.agvs.end() && u != snap.uavs.end() &&
                      a->second.state == fsm::AgvState::Waitting_Pickup && !a->second.carrying &&
                      u->second.state == fsm::UavState::Ready &&
                      u->second.workbench == scheme_.loop_of(it->first).loading();
    it = keep ? std::next(it) : fetch_.erase(it);
  }
}

void GroundScheduler::claim_fetches(const Snapshot& snap, const LandingBook& landings) {
  prune_fetches(snap);
  for (const auto& [id, s] : snap.agvs) {
    if (s.state != fsm::AgvState::Waitting_Pickup || s.carrying || s.service != ServiceKind::None) continue;
    if (fetch_.count(id) || landings.for_agv(id)) continue;
    if (auto uid = unclaimed_bench_uav(scheme_.loop_of(id), snap)) fetch_[id] = *uid;
  }
}

GroundResult GroundScheduler::plan_ground(const Snapshot& snap, const LandingBook& landings, OrderQueue& orders) {
  using fsm::AgvCommand;
  using fsm::AgvState;
  GroundResult out;

  prune_fetches(snap);
  for (auto& job : staff_)
    if (job && !staff_job_active(*job, snap)) job.reset();

  std::set<NodeId> occupied;
  for (const auto& [_, a] : snap.agvs) {
    if (a.at_node) occupied.insert(*a.at_node);
    else occupied.insert(scheme_.loop_of(a.id).next(a.last_node));
  }

  for (const auto& [id, s] : snap.agvs) {
    const LoopGeometry& loop = scheme_.loop_of(id);
    AgvPlan plan = plan_from_status(s, loop);
    if (s.service != ServiceKind::None || in_flight(id, snap)) {
      if (s.service != ServiceKind::None) plan.action = GroundAction::Service;
      out.plans.push_back(plan);
      continue;
    }

    const NodeId target = choose_target(s, loop, snap, landings);
    plan.target = target;
    const bool at_target = s.at_node && *s.at_node == target;

    if (at_target && target == loop.loading()) {
      if (s.state == AgvState::Waitting_Working && s.carrying) {
        auto u = snap.uavs.find(*s.carrying);
        if (u != snap.uavs.end()) {
          const UavStatus& us = u->second;
          std::optional<int> staff = free_staff(snap);
          if (us.swap_due && staff) {
            out.commands.push_back(AgvCommandMsg{id, snap.tick, AgvCommand::UAV_Charge, us.id, staff});
            staff_[static_cast<std::size_t>(*staff - 1)] = StaffJob{id, snap.tick};
            inflight_[id] = snap.tick;
            plan.action = GroundAction::Service;
          } else if (!us.swap_due && !us.cargo && staff) {
            bool go = us.order.has_value();
            if (!go && orders.pending() > 0) {
              const StationId station = orders.pending_orders().front().station;
              const OrderId order = assign_orders(orders, {us.id}).front().first;
              out.commands.push_back(UavCommandMsg{us.id, snap.tick, fsm::UavCommand::Load_Cargo, std::nullopt,
                                                   std::nullopt, std::nullopt, order, station});
              out.assignments.push_back({order, us.id, station});
              go = true;
            }
            if (go) {
              out.commands.push_back(AgvCommandMsg{id, snap.tick, AgvCommand::UAV_Get_Cargo, us.id, staff});
              staff_[static_cast<std::size_t>(*staff - 1)] = StaffJob{id, snap.tick};
              inflight_[id] = snap.tick;
              plan.action = GroundAction::Service;
            } else {
              plan.action = GroundAction::Idle;
            }
          } else {
            plan.action = GroundAction::Wait;
          }
        }
      } else if (s.state == AgvState::Waitting_Pickup && fetch_.count(id)) {
        out.commands.push_back(AgvCommandMsg{id, snap.tick, AgvCommand::UAV_Receive, fetch_.at(id), std::nullopt});
        inflight_[id] = snap.tick;
        plan.action = GroundAction::Service;
      }
    } else if (!at_target) {
      auto& sent = sent_[id];
      if (s.target != target && (sent.target != target || snap.tick - sent.tick >= params_.resend_ticks)) {
        out.commands.push_back(AgvCommandMsg{id, snap.tick, MoveTo{target}, std::nullopt, std::nullopt});
        sent = Sent{target, snap.tick};
      }
      const NodeId next = s.at_node ? loop.next(*s.at_node) : plan.next_node;
      plan.action = (s.at_node && occupied.count(next)) ? GroundAction::Wait : GroundAction::Move;
    } else {
      plan.action = GroundAction::Idle;
    }
    out.plans.push_back(plan);
  }
  return out;
}

double GroundScheduler::pending_service_s(const AgvStatus& s, const Snapshot& snap) const {
  using fsm::AgvState;
  if (!s.carrying) return 0.0;
  const double stage_s = (params_.command_latency_ticks + 5) * params_.dt_s;
  bool swap_due = false;
  bool cargo = false;
  if (auto u = snap.uavs.find(*s.carrying); u != snap.uavs.end()) {
    swap_due = u->second.swap_due;
    cargo = u->second.cargo;
  }
  const double remaining = static_cast<double>(s.service_remaining_ticks) * params_.dt_s;
  switch (s.state) {
    case AgvState::Waitting_Go_AW: return stage_s;
    case AgvState::Waitting_Working:
      if (s.service == ServiceKind::Load) return remaining + 2 * stage_s;
      if (s.service == ServiceKind::Swap) return remaining + params_.load_s + 3 * stage_s;
      break;
    default: break;
  }
  return (swap_due ? params_.swap_s + stage_s : 0.0) + (cargo ? 0.0 : params_.load_s + stage_s) + 2 * stage_s;
}

double GroundScheduler::lane_distance(const AgvStatus& s, const LoopGeometry& loop) const {
  return loop.arc(s.loop_pos_m, loop.offset(loop.landing()));
}

std::vector<AgvEta> GroundScheduler::return_candidates(const Snapshot& snap, const LandingBook& landings) const {
  constexpr double kReleaseDistM = 3.2;
  const double handoff_s = params_.command_latency_ticks * params_.dt_s + 5 * params_.dt_s + 0.3;
  std::vector<AgvEta> out;
  for (const auto& loop : scheme_.loops) {
    const NodeId landing = loop.landing();
    // Reservations are handed out in lane order: the front-most free AGV.
    const AgvStatus* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, s] : snap.agvs) {
      if (scheme_.agv_assignment.at(id) != loop.id()) continue;
      if (fetch_.count(id) || landings.for_agv(id)) continue;
      const double d = lane_distance(s, loop);
      if (d < best_d) {
        best_d = d;
        best = &s;
      }
    }
    if (!best) continue;
    double pending = pending_service_s(*best, snap);
    // Loaded AGVs ahead of it on the way to the loading point are served first.
    if (best->carrying && (best->state == fsm::AgvState::Waitting_Go_GW ||
                           best->state == fsm::AgvState::Waitting_Pickup)) {
      const double to_gw = loop.arc(best->loop_pos_m, 0.0);
      for (const auto& [id, s] : snap.agvs) {
        if (id == best->id || scheme_.agv_assignment.at(id) != loop.id() || !s.carrying) continue;
        if (s.state != fsm::AgvState::Waitting_Go_GW && s.state != fsm::AgvState::Waitting_Working) continue;
        if (s.state == fsm::AgvState::Waitting_Go_GW && loop.arc(s.loop_pos_m, 0.0) >= to_gw) continue;
        pending += pending_service_s(s, snap);
      }
    }
    double eta = eta_to_landing(plan_from_status(*best, loop), loop, landing, snap.now_s, pending,
                                params_.agv_speed_mps);
    const double approach_m = std::min(best_d, loop.edge_length(loop.nodes()[(loop.index(landing) +
                                                                              loop.nodes().size() - 1) %
                                                                             loop.nodes().size()]));
    double latest = std::numeric_limits<double>::infinity();
    for (const auto& e : landings.entries(landing)) {
      auto r = snap.agvs.find(e.agv);
      if (r != snap.agvs.end() && lane_distance(r->second, loop) > best_d) {
        latest = std::min(latest, e.uav_land_s);
        continue;
      }
      eta = std::max(eta, e.uav_land_s + handoff_s + (kReleaseDistM + approach_m) / params_.agv_speed_mps);
    }
    out.push_back({landing, loop.id(), best->id, eta, latest});
  }
  std::sort(out.begin(), out.end(), [](const AgvEta& a, const AgvEta& b) { return a.landing < b.landing; });
  return out;
}

std::vector<Reassignment> GroundScheduler::rebalance(const Snapshot& snap, const LandingBook& landings) const {
  constexpr double kReleaseDistM = 3.2;
  const double handoff_s = params_.command_latency_ticks * params_.dt_s + 5 * params_.dt_s + 0.3;
  std::vector<Reassignment> out;
  for (const auto& loop : scheme_.loops) {
    const NodeId landing = loop.landing();
    const AgvStatus* front = nullptr;
    double front_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, s] : snap.agvs) {
      if (scheme_.agv_assignment.at(id) != loop.id() || fetch_.count(id) || landings.for_agv(id)) continue;
      const double d = lane_distance(s, loop);
      if (d < front_d) {
        front_d = d;
        front = &s;
      }
    }
    if (!front || front->carrying || front->service != ServiceKind::None ||
        front->state != fsm::AgvState::Waitting_Pickup)
      continue;

    std::vector<std::pair<double, AgvId>> behind;  // lane distance, agv
    std::vector<LandingEntry> entries;
    double eta = eta_to_landing(plan_from_status(*front, loop), loop, landing, snap.now_s, 0.0,
                                params_.agv_speed_mps);
    for (const auto& e : landings.entries(landing)) {
      auto r = snap.agvs.find(e.agv);
      const double d = r == snap.agvs.end() ? std::numeric_limits<double>::infinity() : lane_distance(r->second, loop);
      if (d > front_d) {
        behind.emplace_back(d, e.agv);
        entries.push_back(e);
      } else {
        eta = std::max(eta, e.uav_land_s + handoff_s + kReleaseDistM / params_.agv_speed_mps);
      }
    }
    if (entries.empty()) continue;
    std::sort(behind.begin(), behind.end());
    std::sort(entries.begin(), entries.end(),
              [](const LandingEntry& a, const LandingEntry& b) { return a.uav_land_s < b.uav_land_s; });
    if (!(eta < entries.front().uav_land_s)) continue;
    // Front AGV takes the earliest landing; each reserved AGV behind takes the next one.
    std::vector<AgvId> lane{front->id};
    for (std::size_t i = 0; i + 1 < behind.size(); ++i) lane.push_back(behind[i].second);
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].agv != lane[i]) out.push_back({entries[i].uav, entries[i].agv, lane[i]});
  }
  return out;
}

bool GroundScheduler::reserved_behind(const AgvStatus& s, const LoopGeometry& loop, const Snapshot& snap,
                                      const LandingBook& landings) const {
  const double d = lane_distance(s, loop);
  for (const auto& e : landings.entries(loop.landing())) {
    auto r = snap.agvs.find(e.agv);
    if (r != snap.agvs.end() && r->first != s.id && lane_distance(r->second, loop) > d) return true;
  }
  return false;
}

}  // namespace uavsched
