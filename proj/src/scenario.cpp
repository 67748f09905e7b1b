#include "uavsched/scenario.hpp"

#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace uavsched {

using nlohmann::json;

namespace {

class LayoutBuilder {
 public:
  NodeId add(NodeKind kind, double x, double y) {
    NodeId id{next_++};
    layout_.nodes.push_back({id, kind, {x, y}});
    return id;
  }
  void loop(std::vector<NodeId> nodes) {
    layout_.loops.push_back({LoopId{static_cast<int>(layout_.loops.size()) + 1}, std::move(nodes)});
  }
  AirportLayout& layout() { return layout_; }

 private:
  AirportLayout layout_;
  int next_ = 1;
};

Polygon rect(double x0, double y0, double x1, double y1) { return {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}}; }

// Column of waypoints from (x, y_from) exclusive to (x, y_to) exclusive, step 10 m.
void column(LayoutBuilder& b, std::vector<NodeId>& out, double x, double y_from, double y_to) {
  const double step = y_to > y_from ? 10.0 : -10.0;
  for (double y = y_from + step; (step > 0 ? y < y_to - 1e-9 : y > y_to + 1e-9); y += step)
    out.push_back(b.add(NodeKind::Waypoint, x, y));
}
void row(LayoutBuilder& b, std::vector<NodeId>& out, double y, double x_from, double x_to, NodeKind kind) {
  const double step = x_to > x_from ? 10.0 : -10.0;
  for (double x = x_from + step; (step > 0 ? x < x_to - 1e-9 : x > x_to + 1e-9); x += step)
    out.push_back(b.add(kind, x, y));
}

// Rectangular loop with its loading point at the bottom-left corner (x0, 0),
// the takeoff point at the top-left corner, holds along the top edge, and the
// landing point at the top-right corner. Returns to the loading point down the
// right edge and along the bottom.
void rect_loop(LayoutBuilder& b, double x0, double width, double height) {
  std::vector<NodeId> nodes;
  nodes.push_back(b.add(NodeKind::Loading, x0, 0.0));
  column(b, nodes, x0, 0.0, height);
  nodes.push_back(b.add(NodeKind::Takeoff, x0, height));
  row(b, nodes, height, x0, x0 + width, NodeKind::Hold);
  nodes.push_back(b.add(NodeKind::Landing, x0 + width, height));
  column(b, nodes, x0 + width, height, 0.0);
  nodes.push_back(b.add(NodeKind::Waypoint, x0 + width, 0.0));
  row(b, nodes, 0.0, x0 + width, x0, NodeKind::Waypoint);
  b.loop(std::move(nodes));
}

void one_cycle(LayoutBuilder& b) {
  rect_loop(b, 0.0, 50.0, 30.0);  // 4 holds, 160 m loop
  b.layout().gw_region = rect(-5, -5, 55, 5);
  b.layout().aw_region = rect(-5, 25, 55, 35);
}

void two_cycle(LayoutBuilder& b) {
  // Two loops meet at one takeoff point T(0,30). Loop 1 arrives from the
  // south and leaves west; loop 2 arrives from the east and leaves north.
  const NodeId la = b.add(NodeKind::Loading, 0, 0);
  const NodeId lb = b.add(NodeKind::Loading, 20, 0);
  const NodeId t = b.add(NodeKind::Takeoff, 0, 30);

  std::vector<NodeId> a{la};
  column(b, a, 0, 0, 30);
  a.push_back(t);
  row(b, a, 30, 0, -30, NodeKind::Hold);
  a.push_back(b.add(NodeKind::Landing, -30, 30));
  column(b, a, -30, 30, 0);
  a.push_back(b.add(NodeKind::Waypoint, -30, 0));
  row(b, a, 0, -30, 0, NodeKind::Waypoint);
  b.loop(std::move(a));

  std::vector<NodeId> c{lb};
  column(b, c, 20, 0, 30);
  c.push_back(b.add(NodeKind::Waypoint, 20, 30));
  c.push_back(b.add(NodeKind::Waypoint, 10, 30));
  c.push_back(t);
  c.push_back(b.add(NodeKind::Hold, 0, 40));
  c.push_back(b.add(NodeKind::Hold, 0, 50));
  c.push_back(b.add(NodeKind::Landing, 10, 50));
  c.push_back(b.add(NodeKind::Waypoint, 20, 50));
  c.push_back(b.add(NodeKind::Waypoint, 30, 50));
  column(b, c, 30, 50, 0);
  c.push_back(b.add(NodeKind::Waypoint, 30, 0));
  b.loop(std::move(c));

  b.layout().gw_region = rect(-35, -5, 35, 5);
  b.layout().aw_region = rect(-35, 25, 35, 55);
}

void three_cycle(LayoutBuilder& b) {
  // Independent loops, each with its own takeoff and landing point; the AW
  // pads sit farther from the GW than in the shared-loop layouts.
  for (int i = 0; i < 3; ++i) rect_loop(b, 30.0 * i, 10.0 * 2, 100.0);  // 1 hold, 240 m loop
  b.layout().gw_region = rect(-5, -5, 85, 5);
  b.layout().aw_region = rect(-5, 95, 85, 105);
}

void add_stations(AirportLayout& layout) {
  // airport reference: centroid of takeoff and landing points
  Vec2 ref{};
  int count = 0;
  for (const auto& n : layout.nodes) {
    if (n.kind == NodeKind::Takeoff || n.kind == NodeKind::Landing) {
      ref.x += n.pos.x;
      ref.y += n.pos.y;
      ++count;
    }
  }
  ref.x /= count;
  ref.y /= count;

  constexpr double kDistance[] = {500.0, 850.0, 1200.0, 1500.0};
  constexpr double kBearingDeg[] = {135.0, 105.0, 75.0, 45.0};
  constexpr double kAltStep = 5.5;
  for (int k = 0; k < 4; ++k) {
    const double th = kBearingDeg[k] * std::numbers::pi / 180.0;
    Station st;
    st.id = StationId{k + 1};
    st.pad = {ref.x + kDistance[k] * std::cos(th), ref.y + kDistance[k] * std::sin(th)};
    st.parking = {st.pad.x - 10.0 * std::sin(th), st.pad.y + 10.0 * std::cos(th)};
    const double alt_out = 10.0 + kAltStep * (2 * k + 1);
    const double alt_back = 10.0 + kAltStep * (2 * k);
    for (NodeId t : layout.nodes_of_kind(NodeKind::Takeoff)) {
      const auto& p = layout.node(t).pos;
      st.outbound.push_back({st.id, Direction::Outbound, t, {lift(p, alt_out), lift(st.pad, alt_out)}});
    }
    for (NodeId l : layout.nodes_of_kind(NodeKind::Landing)) {
      const auto& p = layout.node(l).pos;
      st.inbound.push_back({st.id, Direction::Return, l, {lift(st.parking, alt_back), lift(p, alt_back)}});
    }
    layout.stations.push_back(std::move(st));
  }
}

// -- JSON mapping -----------------------------------------------------------

std::string kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Loading: return "loading";
    case NodeKind::Takeoff: return "takeoff";
    case NodeKind::Hold: return "hold";
    case NodeKind::Landing: return "landing";
    case NodeKind::Waypoint: return "waypoint";
  }
  return "?";
}

NodeKind parse_kind(const std::string& s) {
  if (s == "loading") return NodeKind::Loading;
  if (s == "takeoff") return NodeKind::Takeoff;
  if (s == "hold") return NodeKind::Hold;
  if (s == "landing") return NodeKind::Landing;
  if (s == "waypoint") return NodeKind::Waypoint;
  throw ScenarioError("parse error: unknown node kind '" + s + "'");
}

json xy(const Vec2& p) { return json::array({p.x, p.y}); }
Vec2 to_xy(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json poly(const Polygon& p) {
  json a = json::array();
  for (const auto& v : p.vertices) a.push_back(xy(v));
  return a;
}
Polygon to_poly(const json& j) {
  Polygon p;
  for (const auto& v : j) p.vertices.push_back(to_xy(v));
  return p;
}

json route_json(const Route& r) {
  json w = json::array();
  for (const auto& p : r.waypoints) w.push_back(json::array({p.x, p.y, p.z}));
  return {{"node", r.airport_node.value}, {"waypoints_m", w}};
}
Route to_route(const json& j, StationId sid, Direction dir) {
  Route r;
  r.station = sid;
  r.direction = dir;
  r.airport_node = NodeId{j.at("node").get<int>()};
  for (const auto& p : j.at("waypoints_m")) r.waypoints.push_back({p.at(0), p.at(1), p.at(2)});
  return r;
}

json layout_json(const AirportLayout& L) {
  json nodes = json::array();
  for (const auto& n : L.nodes) nodes.push_back({{"id", n.id.value}, {"kind", kind_name(n.kind)}, {"pos_m", xy(n.pos)}});
  json loops = json::array();
  for (const auto& l : L.loops) {
    json ids = json::array();
    for (auto id : l.nodes) ids.push_back(id.value);
    loops.push_back({{"id", l.id.value}, {"nodes", ids}});
  }
  json stations = json::array();
  for (const auto& s : L.stations) {
    json out = json::array(), in = json::array();
    for (const auto& r : s.outbound) out.push_back(route_json(r));
    for (const auto& r : s.inbound) in.push_back(route_json(r));
    stations.push_back({{"id", s.id.value},
                        {"pad_m", xy(s.pad)},
                        {"parking_m", xy(s.parking)},
                        {"outbound", out},
                        {"return", in}});
  }
  return {{"aw_region_m", poly(L.aw_region)},
          {"gw_region_m", poly(L.gw_region)},
          {"nodes", nodes},
          {"loops", loops},
          {"stations", stations}};
}

AirportLayout to_layout(const json& j) {
  AirportLayout L;
  L.aw_region = to_poly(j.at("aw_region_m"));
  L.gw_region = to_poly(j.at("gw_region_m"));
  for (const auto& n : j.at("nodes"))
    L.nodes.push_back({NodeId{n.at("id").get<int>()}, parse_kind(n.at("kind").get<std::string>()), to_xy(n.at("pos_m"))});
  for (const auto& l : j.at("loops")) {
    LoopDef def{LoopId{l.at("id").get<int>()}, {}};
    for (const auto& id : l.at("nodes")) def.nodes.push_back(NodeId{id.get<int>()});
    L.loops.push_back(std::move(def));
  }
  for (const auto& s : j.at("stations")) {
    Station st;
    st.id = StationId{s.at("id").get<int>()};
    st.pad = to_xy(s.at("pad_m"));
    st.parking = to_xy(s.at("parking_m"));
    for (const auto& r : s.at("outbound")) st.outbound.push_back(to_route(r, st.id, Direction::Outbound));
    for (const auto& r : s.at("return")) st.inbound.push_back(to_route(r, st.id, Direction::Return));
    L.stations.push_back(std::move(st));
  }
  return L;
}

}  // namespace

AirportLayout default_layout(Scheme scheme) {
  LayoutBuilder b;
  switch (scheme) {
    case Scheme::OneCycle: one_cycle(b); break;
    case Scheme::TwoCycle: two_cycle(b); break;
    case Scheme::ThreeCycle: three_cycle(b); break;
  }
  add_stations(b.layout());
  return b.layout();
}

ScenarioConfig default_scenario(Scheme scheme) {
  ScenarioConfig c;
  c.scheme = scheme;
  c.layout = default_layout(scheme);
  const auto shape = scheme_shape(scheme);
  c.fleet.agvs = shape.loops * shape.agvs_per_loop;
  return c;
}

std::string dump_scenario(const ScenarioConfig& c) {
  json j;
  j["layout"] = layout_json(c.layout);
  j["scheme"] = std::string(to_string(c.scheme));
  j["fleet"] = {{"uavs", c.fleet.uavs}, {"agvs", c.fleet.agvs}, {"staff", c.fleet.staff}};
  j["speeds"] = {{"uav_max_mps", c.speeds.uav_max_mps}, {"agv_max_mps", c.speeds.agv_max_mps}};
  j["service_times"] = {{"load_s", c.service_times.load_s},
                        {"battery_swap_s", c.service_times.battery_swap_s},
                        {"unload_s", c.service_times.unload_s}};
  j["min_dist"] = {{"uav_m", c.min_dist.uav_m}, {"agv_m", c.min_dist.agv_m}};
  j["go_gap_s"] = c.go_gap_s;
  j["duration_s"] = c.duration_s;
  j["dt_s"] = c.dt_s;
  j["seed"] = c.seed;
  j["flight"] = {{"overhead_s", c.flight.overhead_s}, {"land_gap_s", c.flight.land_gap_s}};
  j["policy"] = {{"swap_every", c.policy.swap_every}};
  j["orders"] = {{"rate_per_s", c.orders.rate_per_s},
                 {"better_offset_s", c.orders.better_offset_s},
                 {"timeout_offset_s", c.orders.timeout_offset_s}};
  return j.dump(1) + "\n";
}

ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig c;
  try {
    const json j = json::parse(text);
    c.layout = to_layout(j.at("layout"));
    const auto scheme = parse_scheme(j.at("scheme").get<std::string>());
    if (!scheme) throw ScenarioError("parse error: unknown scheme '" + j.at("scheme").get<std::string>() + "'");
    c.scheme = *scheme;
    const auto& f = j.at("fleet");
    c.fleet = {f.at("uavs").get<int>(), f.at("agvs").get<int>(), f.at("staff").get<int>()};
    const auto& s = j.at("speeds");
    c.speeds = {s.at("uav_max_mps").get<double>(), s.at("agv_max_mps").get<double>()};
    const auto& st = j.at("service_times");
    c.service_times = {st.at("load_s").get<double>(), st.at("battery_swap_s").get<double>(),
                       st.at("unload_s").get<double>()};
    const auto& md = j.at("min_dist");
    c.min_dist = {md.at("uav_m").get<double>(), md.at("agv_m").get<double>()};
    c.go_gap_s = j.at("go_gap_s").get<double>();
    c.duration_s = j.at("duration_s").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.dt_s = j.value("dt_s", 0.1);
    if (j.contains("flight")) {
      c.flight.overhead_s = j["flight"].value("overhead_s", c.flight.overhead_s);
      c.flight.land_gap_s = j["flight"].value("land_gap_s", c.flight.land_gap_s);
    }
    if (j.contains("policy")) c.policy.swap_every = j["policy"].value("swap_every", c.policy.swap_every);
    if (j.contains("orders")) {
      const auto& o = j["orders"];
      c.orders.rate_per_s = o.value("rate_per_s", c.orders.rate_per_s);
      c.orders.better_offset_s = o.value("better_offset_s", c.orders.better_offset_s);
      c.orders.timeout_offset_s = o.value("timeout_offset_s", c.orders.timeout_offset_s);
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("parse error: ") + e.what());
  }
  validate(c);
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("parse error: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

void save_scenario(const ScenarioConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << dump_scenario(config);
}

std::string bundled_scenario_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::OneCycle: return "one_cycle.scenario";
    case Scheme::TwoCycle: return "two_cycle.scenario";
    case Scheme::ThreeCycle: return "three_cycle.scenario";
  }
  return {};
}

std::filesystem::path bundled_scenario_path(Scheme scheme) {
  return std::filesystem::path(UAVSCHED_SCENARIO_DIR) / bundled_scenario_name(scheme);
}

}  // namespace uavsched
