#include <algorithm>
#include <map>

#include "doctest.h"
#include "uavsched/domain.hpp"
#include "uavsched/ground_scheduler.hpp"
#include "uavsched/scenario.hpp"

using namespace uavsched;

namespace {

Route polyline(std::vector<Vec3> pts) {
  Route r;
  r.waypoints = std::move(pts);
  return r;
}

NodeId first_of(const AirportLayout& L, NodeKind k) { return L.nodes_of_kind(k).front(); }

LayoutNode& node_mut(AirportLayout& L, NodeId id) {
  return *std::find_if(L.nodes.begin(), L.nodes.end(), [&](const LayoutNode& n) { return n.id == id; });
}

}  // namespace

TEST_SUITE("domain") {
  TEST_CASE("route_length sums segment lengths") {
    CHECK(route_length(polyline({{0, 0, 0}, {3, 4, 0}})) == doctest::Approx(5.0));
    CHECK(route_length(polyline({{0, 0, 0}, {0, 0, 0}})) == 0.0);
    CHECK(route_length(polyline({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}})) == doctest::Approx(2.0));
    CHECK(polyline({{0, 0, 10}, {0, 12, 10}, {5, 12, 10}}).length() == doctest::Approx(17.0));
  }

  TEST_CASE("nominal_flight_time is length over speed plus overhead") {
    auto straight = [](double len) { return polyline({{0, 0, 50}, {len, 0, 50}}); };
    CHECK(nominal_flight_time(straight(1000), 10.0, 0.0) == doctest::Approx(100.0));
    CHECK(nominal_flight_time(straight(0), 10.0, 7.5) == doctest::Approx(7.5));
    CHECK(nominal_flight_time(straight(750), 10.0, 10.0) == doctest::Approx(85.0));
    CHECK_THROWS_AS(nominal_flight_time(straight(10), 0.0, 0.0), std::invalid_argument);
  }

  TEST_CASE("SimTime derives seconds from ticks") {
    SimTime t{36000, 0.1};
    CHECK(t.seconds() == doctest::Approx(3600.0));
    CHECK((t + SimTime{5, 0.1}).ticks == 36005);
    CHECK_THROWS_AS((t + SimTime(1, 0.2)), std::invalid_argument);
    CHECK(to_ticks(10.0, 0.1) == 100);
    CHECK(to_ticks(0.26, 0.1) == 3);
  }

  TEST_CASE("polygon containment includes the boundary") {
    Polygon sq{{{0, 0}, {10, 0}, {10, 10}, {0, 10}}};
    CHECK(sq.contains({5, 5}));
    CHECK(sq.contains({0, 5}));
    CHECK(sq.contains({10, 10}));
    CHECK_FALSE(sq.contains({10.5, 5}));
    CHECK_FALSE(sq.contains({-1, -1}));
  }

  TEST_CASE("scheme names round-trip") {
    for (Scheme s : {Scheme::OneCycle, Scheme::TwoCycle, Scheme::ThreeCycle}) CHECK(parse_scheme(to_string(s)) == s);
    CHECK_FALSE(parse_scheme("four-cycle").has_value());
  }

  TEST_CASE("bundled one-cycle scenario") {
    const ScenarioConfig c = load_scenario(bundled_scenario_path(Scheme::OneCycle));
    CHECK(c.scheme == Scheme::OneCycle);
    CHECK(c.fleet.agvs == 6);
    CHECK(c.layout.loops.size() == 1);
    CHECK(c.layout.nodes_of_kind(NodeKind::Takeoff).size() == 1);
    CHECK(c.layout.nodes_of_kind(NodeKind::Landing).size() == 1);
    CHECK(c.speeds.uav_max_mps == 10.0);
    CHECK(c.speeds.agv_max_mps == 1.5);
    CHECK(c.service_times.load_s == 10.0);
    CHECK(c.service_times.battery_swap_s == 10.0);
    CHECK(c.service_times.unload_s == 3.0);
    CHECK(c.min_dist.uav_m == 5.0);
    CHECK(c.min_dist.agv_m == 3.0);
  }

  TEST_CASE("bundled files match the built-in defaults") {
    for (Scheme s : {Scheme::OneCycle, Scheme::TwoCycle, Scheme::ThreeCycle})
      CHECK(load_scenario(bundled_scenario_path(s)) == default_scenario(s));
  }

  TEST_CASE("two-cycle default: shared takeoff point, two landings, three AGVs per loop") {
    const ScenarioConfig c = default_scenario(Scheme::TwoCycle);
    validate(c);
    const auto& L = c.layout;
    REQUIRE(L.loops.size() == 2);
    const auto takeoffs = L.nodes_of_kind(NodeKind::Takeoff);
    REQUIRE(takeoffs.size() == 1);
    CHECK(L.loops_through(takeoffs.front()).size() == 2);
    CHECK(L.nodes_of_kind(NodeKind::Landing).size() == 2);

    const CycleScheme cs = CycleScheme::build(L, c.scheme, c.fleet.agvs);
    std::map<LoopId, int> per_loop;
    for (const auto& [agv, loop] : cs.agv_assignment) ++per_loop[loop];
    CHECK(per_loop.size() == 2);
    for (const auto& [loop, n] : per_loop) CHECK(n == 3);
  }

  TEST_CASE("three-cycle default: three loops of two AGVs, one hold each") {
    const ScenarioConfig c = default_scenario(Scheme::ThreeCycle);
    validate(c);
    CHECK(c.layout.loops.size() == 3);
    CHECK(c.layout.nodes_of_kind(NodeKind::Takeoff).size() == 3);
    CHECK(c.layout.nodes_of_kind(NodeKind::Landing).size() == 3);
    CHECK(c.layout.nodes_of_kind(NodeKind::Hold).size() == 3);
  }

  TEST_CASE("three-cycle with five AGVs is rejected") {
    ScenarioConfig c = default_scenario(Scheme::ThreeCycle);
    c.fleet.agvs = 5;
    CHECK_THROWS_AS(validate(c), ScenarioError);
    try {
      validate(c);
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).find("requires 6 AGVs") != std::string::npos);
    }
  }

  TEST_CASE("area invariants") {
    SUBCASE("loading point outside GW") {
      ScenarioConfig c = default_scenario(Scheme::OneCycle);
      node_mut(c.layout, first_of(c.layout, NodeKind::Loading)).pos = {500, 500};
      CHECK_THROWS_AS(validate(c), ScenarioError);
    }
    SUBCASE("landing point outside AW") {
      ScenarioConfig c = default_scenario(Scheme::OneCycle);
      node_mut(c.layout, first_of(c.layout, NodeKind::Landing)).pos = {-500, -500};
      CHECK_THROWS_AS(validate(c), ScenarioError);
    }
    SUBCASE("loop out of order") {
      ScenarioConfig c = default_scenario(Scheme::OneCycle);
      std::reverse(c.layout.loops[0].nodes.begin() + 1, c.layout.loops[0].nodes.end());
      CHECK_THROWS_AS(validate(c), ScenarioError);
    }
    SUBCASE("zero UAVs") {
      ScenarioConfig c = default_scenario(Scheme::OneCycle);
      c.fleet.uavs = 0;
      CHECK_THROWS_AS(validate(c), ScenarioError);
    }
  }

  TEST_CASE("loop nodes visit loading, takeoff, holds, landing in order") {
    for (Scheme s : {Scheme::OneCycle, Scheme::TwoCycle, Scheme::ThreeCycle}) {
      const AirportLayout L = default_layout(s);
      for (const auto& loop : L.loops) {
        std::vector<NodeKind> kinds;
        for (NodeId n : loop.nodes)
          if (L.node(n).kind != NodeKind::Waypoint) kinds.push_back(L.node(n).kind);
        REQUIRE(kinds.size() >= 4);
        CHECK(kinds.front() == NodeKind::Loading);
        CHECK(kinds[1] == NodeKind::Takeoff);
        CHECK(kinds.back() == NodeKind::Landing);
        for (std::size_t i = 2; i + 1 < kinds.size(); ++i) CHECK(kinds[i] == NodeKind::Hold);
      }
    }
  }

  TEST_CASE("scenario text round-trips") {
    ScenarioConfig c = default_scenario(Scheme::TwoCycle);
    c.fleet.uavs = 11;
    c.seed = 42;
    c.orders.rate_per_s = 0.04;
    CHECK(parse_scenario(dump_scenario(c)) == c);
    CHECK_THROWS_AS(parse_scenario("{not json"), ScenarioError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/x.scenario"), ScenarioError);
  }
}
