#include "uavsched/domain.hpp"

#include <algorithm>
#include <set>

namespace uavsched {

std::int64_t to_ticks(double seconds, double dt) {
  return static_cast<std::int64_t>(std::llround(seconds / dt));
}

double route_length(const Route& route) {
  double total = 0.0;
  for (std::size_t i = 1; i < route.waypoints.size(); ++i) {
    total += distance(route.waypoints[i - 1], route.waypoints[i]);
  }
  return total;
}

double Route::length() const { return route_length(*this); }

double nominal_flight_time(const Route& route, double speed_mps, double overhead_s) {
  if (!(speed_mps > 0.0)) throw std::invalid_argument("nominal_flight_time: speed must be positive");
  return route_length(route) / speed_mps + overhead_s;
}

bool Polygon::contains(const Vec2& p) const {
  const auto n = vertices.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[j];
    // boundary
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (std::abs(cross) < 1e-9 && p.x >= std::min(a.x, b.x) - 1e-9 && p.x <= std::max(a.x, b.x) + 1e-9 &&
        p.y >= std::min(a.y, b.y) - 1e-9 && p.y <= std::max(a.y, b.y) + 1e-9) {
      return true;
    }
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

const LayoutNode& AirportLayout::node(NodeId id) const {
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const LayoutNode& n) { return n.id == id; });
  if (it == nodes.end()) throw std::out_of_range("unknown node " + std::to_string(id.value));
  return *it;
}

const LoopDef& AirportLayout::loop(LoopId id) const {
  auto it = std::find_if(loops.begin(), loops.end(), [&](const LoopDef& l) { return l.id == id; });
  if (it == loops.end()) throw std::out_of_range("unknown loop " + std::to_string(id.value));
  return *it;
}

const Station& AirportLayout::station(StationId id) const {
  auto it = std::find_if(stations.begin(), stations.end(), [&](const Station& s) { return s.id == id; });
  if (it == stations.end()) throw std::out_of_range("unknown station " + std::to_string(id.value));
  return *it;
}

bool AirportLayout::has_station(StationId id) const {
  return std::any_of(stations.begin(), stations.end(), [&](const Station& s) { return s.id == id; });
}

std::vector<Vec2> AirportLayout::workbenches() const {
  std::vector<Vec2> out;
  for (const auto& n : nodes)
    if (n.kind == NodeKind::Loading) out.push_back(n.pos);
  return out;
}

std::vector<NodeId> AirportLayout::nodes_of_kind(NodeKind kind) const {
  std::vector<NodeId> out;
  for (const auto& n : nodes)
    if (n.kind == kind) out.push_back(n.id);
  return out;
}

std::vector<LoopId> AirportLayout::loops_through(NodeId id) const {
  std::vector<LoopId> out;
  for (const auto& l : loops)
    if (std::find(l.nodes.begin(), l.nodes.end(), id) != l.nodes.end()) out.push_back(l.id);
  return out;
}

std::vector<LoopEdge> AirportLayout::loop_edges() const {
  std::vector<LoopEdge> out;
  for (const auto& l : loops) {
    for (std::size_t i = 0; i < l.nodes.size(); ++i) {
      const NodeId from = l.nodes[i];
      const NodeId to = l.nodes[(i + 1) % l.nodes.size()];
      out.push_back({l.id, from, to, distance(node(from).pos, node(to).pos)});
    }
  }
  return out;
}

NodeId AirportLayout::loop_node(LoopId loop_id, NodeKind kind) const {
  for (NodeId id : loop(loop_id).nodes)
    if (node(id).kind == kind) return id;
  throw std::out_of_range("loop has no node of requested kind");
}

const Route& AirportLayout::outbound_route(StationId sid, NodeId takeoff) const {
  const auto& st = station(sid);
  for (const auto& r : st.outbound)
    if (r.airport_node == takeoff) return r;
  throw std::out_of_range("no outbound route for station " + std::to_string(sid.value));
}

const Route& AirportLayout::return_route(StationId sid, NodeId landing) const {
  const auto& st = station(sid);
  for (const auto& r : st.inbound)
    if (r.airport_node == landing) return r;
  throw std::out_of_range("no return route for station " + std::to_string(sid.value));
}

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::OneCycle: return "one-cycle";
    case Scheme::TwoCycle: return "two-cycle";
    case Scheme::ThreeCycle: return "three-cycle";
  }
  return "?";
}

std::optional<Scheme> parse_scheme(std::string_view s) {
  if (s == "one-cycle") return Scheme::OneCycle;
  if (s == "two-cycle") return Scheme::TwoCycle;
  if (s == "three-cycle") return Scheme::ThreeCycle;
  return std::nullopt;
}

SchemeShape scheme_shape(Scheme s) {
  switch (s) {
    case Scheme::OneCycle: return {1, 6, 1, 1, 4};
    case Scheme::TwoCycle: return {2, 3, 1, 2, 2};
    case Scheme::ThreeCycle: return {3, 2, 3, 3, 1};
  }
  throw std::invalid_argument("scheme");
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ScenarioError("invariant violated: " + what);
}

bool same_xy(const Vec3& a, const Vec2& b) { return std::abs(a.x - b.x) < 1e-6 && std::abs(a.y - b.y) < 1e-6; }

void validate_route(const AirportLayout& layout, const Station& st, const Route& r, Direction dir) {
  const std::string tag = "station " + std::to_string(st.id.value) + " route";
  require(r.direction == dir, tag + " direction");
  require(r.station == st.id, tag + " station id");
  require(r.waypoints.size() >= 2, tag + " has >= 2 waypoints");
  const auto& anchor = layout.node(r.airport_node);
  if (dir == Direction::Outbound) {
    require(anchor.kind == NodeKind::Takeoff, tag + " outbound starts at a takeoff point");
    require(same_xy(r.waypoints.front(), anchor.pos), tag + " outbound starts above its takeoff point");
    require(same_xy(r.waypoints.back(), st.pad), tag + " outbound ends above the station pad");
  } else {
    require(anchor.kind == NodeKind::Landing, tag + " return ends at a landing point");
    require(same_xy(r.waypoints.front(), st.parking), tag + " return starts above the station parking spot");
    require(same_xy(r.waypoints.back(), anchor.pos), tag + " return ends above its landing point");
  }
  for (const auto& w : r.waypoints) require(w.z > 0.0, tag + " cruise altitude > 0");
}

}  // namespace

void validate(const ScenarioConfig& c) {
  require(c.dt_s > 0.0, "dt > 0");
  require(c.speeds.uav_max_mps > 0.0 && c.speeds.agv_max_mps > 0.0, "speeds > 0");
  require(c.service_times.load_s > 0.0 && c.service_times.battery_swap_s > 0.0 && c.service_times.unload_s > 0.0,
          "service durations > 0");
  require(c.go_gap_s > 0.0, "go_gap_s > 0");
  require(c.duration_s > 0.0, "duration_s > 0");
  require(c.flight.overhead_s >= 0.0, "overhead_s >= 0");
  require(c.flight.land_gap_s >= 0.0, "land_gap_s >= 0");
  require(c.min_dist.uav_m > 0.0 && c.min_dist.agv_m > 0.0, "min distances > 0");
  require(c.fleet.uavs >= 1, "fleet.uavs >= 1");
  require(c.fleet.staff >= 1, "fleet.staff >= 1");
  require(c.policy.swap_every >= 1, "policy.swap_every >= 1");
  require(c.orders.rate_per_s > 0.0, "orders.rate_per_s > 0");
  require(c.orders.better_offset_s >= 0.0 && c.orders.timeout_offset_s > c.orders.better_offset_s,
          "0 <= better_offset_s < timeout_offset_s");

  const auto& L = c.layout;
  const SchemeShape shape = scheme_shape(c.scheme);
  require(c.fleet.agvs == shape.loops * shape.agvs_per_loop,
          std::string(to_string(c.scheme)) + " requires " + std::to_string(shape.loops * shape.agvs_per_loop) +
              " AGVs (" + std::to_string(shape.loops) + " loops x " + std::to_string(shape.agvs_per_loop) + ")");
  require(static_cast<int>(L.loops.size()) == shape.loops, "loop count matches scheme");
  require(static_cast<int>(L.nodes_of_kind(NodeKind::Takeoff).size()) == shape.takeoff_points,
          "takeoff point count matches scheme");
  require(static_cast<int>(L.nodes_of_kind(NodeKind::Landing).size()) == shape.landing_points,
          "landing point count matches scheme");
  require(static_cast<int>(L.nodes_of_kind(NodeKind::Loading).size()) == shape.loops,
          "one loading point per loop");

  std::set<int> ids;
  for (const auto& n : L.nodes) {
    require(ids.insert(n.id.value).second, "node ids unique");
    switch (n.kind) {
      case NodeKind::Loading: require(L.gw_region.contains(n.pos), "loading points lie in the GW region"); break;
      case NodeKind::Takeoff:
      case NodeKind::Hold:
      case NodeKind::Landing:
        require(L.aw_region.contains(n.pos), "takeoff/landing/hold points lie in the AW region");
        break;
      case NodeKind::Waypoint: break;
    }
  }

  for (const auto& loop : L.loops) {
    const std::string tag = "loop " + std::to_string(loop.id.value);
    require(loop.nodes.size() >= 4, tag + " has >= 4 nodes");
    std::set<int> seen;
    std::vector<NodeKind> kinds;
    for (NodeId id : loop.nodes) {
      require(seen.insert(id.value).second, tag + " visits each node once (single cycle)");
      const auto kind = L.node(id).kind;
      if (kind != NodeKind::Waypoint) kinds.push_back(kind);
    }
    // loading -> takeoff -> hold(s) -> landing, then back to loading
    bool ok = kinds.size() >= 4 && kinds.front() == NodeKind::Loading && kinds[1] == NodeKind::Takeoff &&
              kinds.back() == NodeKind::Landing;
    int holds = 0;
    for (std::size_t i = 2; ok && i + 1 < kinds.size(); ++i) {
      ok = kinds[i] == NodeKind::Hold;
      ++holds;
    }
    require(ok, tag + " forms a cycle loading -> takeoff -> hold(s) -> landing -> loading");
    require(holds == shape.holds_per_loop, tag + " hold count matches scheme");
    for (std::size_t i = 0; i < loop.nodes.size(); ++i) {
      const auto& a = L.node(loop.nodes[i]).pos;
      const auto& b = L.node(loop.nodes[(i + 1) % loop.nodes.size()]).pos;
      require(distance(a, b) > 0.0, tag + " edges have positive length");
    }
  }

  require(!L.stations.empty(), "at least one station");
  std::set<int> sids;
  for (const auto& st : L.stations) {
    require(sids.insert(st.id.value).second, "station ids unique");
    require(st.id.value >= 1 && st.id.value <= static_cast<int>(L.stations.size()), "station ids are 1..K");
    for (NodeId t : L.nodes_of_kind(NodeKind::Takeoff)) {
      const bool has = std::any_of(st.outbound.begin(), st.outbound.end(),
                                   [&](const Route& r) { return r.airport_node == t; });
      require(has, "station " + std::to_string(st.id.value) + " has an outbound route from every takeoff point");
    }
    for (NodeId l : L.nodes_of_kind(NodeKind::Landing)) {
      const bool has = std::any_of(st.inbound.begin(), st.inbound.end(),
                                   [&](const Route& r) { return r.airport_node == l; });
      require(has, "station " + std::to_string(st.id.value) + " has a return route to every landing point");
    }
    for (const auto& r : st.outbound) validate_route(L, st, r, Direction::Outbound);
    for (const auto& r : st.inbound) validate_route(L, st, r, Direction::Return);
  }
}

}  // namespace uavsched
