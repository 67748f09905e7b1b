#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uavsched {

/// Strongly typed integer identifier. Tag types keep UAV, AGV, station,
/// loop, node and order ids from being mixed up.
template <class Tag>
struct Id {
  int value = 0;

  constexpr Id() = default;
  constexpr explicit Id(int v) : value(v) {}

  friend constexpr auto operator<=>(Id, Id) = default;
};

struct StationTag {};
struct UavTag {};
struct AgvTag {};
struct LoopTag {};
struct NodeTag {};
struct OrderTag {};

using StationId = Id<StationTag>;
using UavId = Id<UavTag>;
using AgvId = Id<AgvTag>;
using LoopId = Id<LoopTag>;
using NodeId = Id<NodeTag>;
using OrderId = Id<OrderTag>;

/// Simulation time as an integer tick count. Wall seconds are always
/// derived from the tick count, never accumulated.
struct SimTime {
  std::int64_t ticks = 0;
  double dt = 0.1;

  constexpr SimTime() = default;
  constexpr SimTime(std::int64_t t, double step) : ticks(t), dt(step) {}

  double seconds() const { return static_cast<double>(ticks) * dt; }

  friend SimTime operator+(SimTime a, SimTime b) {
    if (a.dt != b.dt) throw std::invalid_argument("SimTime: mismatched dt");
    return {a.ticks + b.ticks, a.dt};
  }
  friend bool operator==(const SimTime&, const SimTime&) = default;
};

/// Seconds to whole ticks, rounding to nearest.
std::int64_t to_ticks(double seconds, double dt);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}
inline double distance(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline Vec3 lift(const Vec2& p, double z = 0.0) { return {p.x, p.y, z}; }
inline Vec2 flatten(const Vec3& p) { return {p.x, p.y}; }

enum class Direction { Outbound, Return };

/// A predefined flight route. Waypoints are the cruise polyline at altitude;
/// the first waypoint sits above the departure point and the last above the
/// destination. Vertical climb and descent are handled by the flight model.
struct Route {
  StationId station;
  Direction direction = Direction::Outbound;
  /// Takeoff node for outbound routes, landing node for return routes.
  NodeId airport_node;
  std::vector<Vec3> waypoints;

  double length() const;
  friend bool operator==(const Route&, const Route&) = default;
};

/// Polyline arc length of a route.
double route_length(const Route& route);

/// Estimated flight time: cruise length over speed plus a fixed vertical
/// takeoff-and-landing overhead. Throws std::invalid_argument for speed <= 0.
double nominal_flight_time(const Route& route, double speed_mps, double overhead_s);

enum class NodeKind { Loading, Takeoff, Hold, Landing, Waypoint };

struct LayoutNode {
  NodeId id;
  NodeKind kind = NodeKind::Waypoint;
  Vec2 pos;
  friend bool operator==(const LayoutNode&, const LayoutNode&) = default;
};

/// One AGV loop: node ids in travel order, starting at the loading point.
/// The last node connects back to the first.
struct LoopDef {
  LoopId id;
  std::vector<NodeId> nodes;
  friend bool operator==(const LoopDef&, const LoopDef&) = default;
};

struct LoopEdge {
  LoopId loop;
  NodeId from;
  NodeId to;
  double length = 0.0;
};

struct Polygon {
  std::vector<Vec2> vertices;
  /// Even-odd rule; points on the boundary count as inside.
  bool contains(const Vec2& p) const;
  friend bool operator==(const Polygon&, const Polygon&) = default;
};

struct Station {
  StationId id;
  Vec2 pad;
  Vec2 parking;
  std::vector<Route> outbound;  // one per takeoff point
  std::vector<Route> inbound;   // one per landing point
  friend bool operator==(const Station&, const Station&) = default;
};

struct AirportLayout {
  Polygon aw_region;
  Polygon gw_region;
  std::vector<LayoutNode> nodes;
  std::vector<LoopDef> loops;
  std::vector<Station> stations;

  const LayoutNode& node(NodeId id) const;
  const LoopDef& loop(LoopId id) const;
  const Station& station(StationId id) const;
  bool has_station(StationId id) const;

  /// Loading point positions; one workbench per loading point.
  std::vector<Vec2> workbenches() const;
  std::vector<NodeId> nodes_of_kind(NodeKind kind) const;
  /// Loops whose cycle contains the node.
  std::vector<LoopId> loops_through(NodeId id) const;
  std::vector<LoopEdge> loop_edges() const;
  /// Node of the given kind on a loop (first occurrence).
  NodeId loop_node(LoopId loop, NodeKind kind) const;

  const Route& outbound_route(StationId station, NodeId takeoff) const;
  const Route& return_route(StationId station, NodeId landing) const;

  friend bool operator==(const AirportLayout&, const AirportLayout&) = default;
};

enum class Scheme { OneCycle, TwoCycle, ThreeCycle };

std::string_view to_string(Scheme s);
/// Accepts "one-cycle", "two-cycle", "three-cycle".
std::optional<Scheme> parse_scheme(std::string_view s);

/// Cardinalities each scheme must satisfy.
struct SchemeShape {
  int loops;
  int agvs_per_loop;
  int takeoff_points;
  int landing_points;
  int holds_per_loop;
};
SchemeShape scheme_shape(Scheme s);

struct Fleet {
  int uavs = 6;
  int agvs = 6;
  int staff = 2;
  friend bool operator==(const Fleet&, const Fleet&) = default;
};

struct Speeds {
  double uav_max_mps = 10.0;
  double agv_max_mps = 1.5;
  friend bool operator==(const Speeds&, const Speeds&) = default;
};

struct ServiceTimes {
  double load_s = 10.0;
  double battery_swap_s = 10.0;
  double unload_s = 3.0;
  friend bool operator==(const ServiceTimes&, const ServiceTimes&) = default;
};

struct MinDist {
  double uav_m = 5.0;
  double agv_m = 3.0;
  friend bool operator==(const MinDist&, const MinDist&) = default;
};

struct FlightParams {
  /// Vertical takeoff + landing time added to every leg (split evenly).
  double overhead_s = 10.0;
  /// Minimum separation of reserved landing times at one landing point.
  double land_gap_s = 15.0;
  friend bool operator==(const FlightParams&, const FlightParams&) = default;
};

struct Policy {
  /// Battery swap on every k-th GW visit after a flight.
  int swap_every = 1;
  friend bool operator==(const Policy&, const Policy&) = default;
};

struct OrderModel {
  double rate_per_s = 0.032;
  double better_offset_s = 300.0;
  double timeout_offset_s = 900.0;
  friend bool operator==(const OrderModel&, const OrderModel&) = default;
};

struct ScenarioConfig {
  AirportLayout layout;
  Scheme scheme = Scheme::OneCycle;
  Fleet fleet;
  Speeds speeds;
  ServiceTimes service_times;
  MinDist min_dist;
  double go_gap_s = 30.0;
  double duration_s = 3600.0;
  double dt_s = 0.1;
  std::uint64_t seed = 1;
  FlightParams flight;
  Policy policy;
  OrderModel orders;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Raised when a configuration breaks an invariant. The message names it.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checks every scenario invariant; throws ScenarioError on the first failure.
void validate(const ScenarioConfig& config);

}  // namespace uavsched
