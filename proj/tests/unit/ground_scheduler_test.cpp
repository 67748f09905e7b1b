#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "uavsched/ground_scheduler.hpp"

using namespace uavsched;

namespace {

// Forward path length from node index i to node index j (a full lap when
// i == j), summed from node positions without LoopGeometry.
double path_m(const AirportLayout& L, const LoopDef& loop, std::size_t i, std::size_t j) {
  double d = 0.0;
  const std::size_t n = loop.nodes.size();
  std::size_t k = i;
  do {
    d += distance(L.node(loop.nodes[k]).pos, L.node(loop.nodes[(k + 1) % n]).pos);
    k = (k + 1) % n;
  } while (k != j);
  return d;
}

std::size_t index_of(const LoopDef& loop, NodeId n) {
  return static_cast<std::size_t>(std::find(loop.nodes.begin(), loop.nodes.end(), n) - loop.nodes.begin());
}

void park(AgvStatus& s, const LoopGeometry& loop, NodeId n) {
  s.at_node = n;
  s.last_node = n;
  s.loop_pos_m = loop.offset(n);
  s.pose = lift(loop.position(n));
}

GroundParams params_of(const ScenarioConfig& c) {
  GroundParams p;
  p.agv_speed_mps = c.speeds.agv_max_mps;
  p.dt_s = c.dt_s;
  p.n_staff = c.fleet.staff;
  return p;
}

const AgvCommandMsg* move_for(const GroundResult& r, AgvId id) {
  for (const auto& c : r.commands)
    if (const auto* a = std::get_if<AgvCommandMsg>(&c); a && a->target == id && std::holds_alternative<MoveTo>(a->action))
      return a;
  return nullptr;
}

}  // namespace

TEST_SUITE("ground_scheduler") {
  TEST_CASE("loop geometry agrees with node positions") {
    for (Scheme s : {Scheme::OneCycle, Scheme::TwoCycle, Scheme::ThreeCycle}) {
      const AirportLayout L = default_layout(s);
      for (const auto& def : L.loops) {
        LoopGeometry g(L, def);
        CHECK(g.length() == doctest::Approx(path_m(L, def, 0, 0)));
        const std::size_t li = index_of(def, g.landing());
        CHECK(g.arc(0.0, g.offset(g.landing())) == doctest::Approx(path_m(L, def, 0, li)));
        CHECK(g.loading() == def.nodes.front());
        CHECK(g.point_at(g.offset(g.takeoff())).x == doctest::Approx(L.node(g.takeoff()).pos.x));
      }
    }
  }

  TEST_CASE("eta_to_landing") {
    const AirportLayout L = default_layout(Scheme::OneCycle);
    const LoopDef& def = L.loops.front();
    LoopGeometry g(L, def);
    const NodeId landing = g.landing();
    const std::size_t li = index_of(def, landing);
    const std::size_t n = def.nodes.size();

    SUBCASE("parked at the landing point") {
      AgvPlan p;
      p.current_node = p.next_node = landing;
      CHECK(eta_to_landing(p, g, landing, 500.0, 0.0, 1.5) == doctest::Approx(500.0));
    }
    SUBCASE("15 m out at 1.5 m/s") {
      const std::size_t from = (li + n - 2) % n;
      REQUIRE(path_m(L, def, from, li) == doctest::Approx(20.0));
      AgvPlan p;
      p.current_node = def.nodes[from];
      p.next_node = def.nodes[(from + 1) % n];
      p.edge_length_m = 10.0;
      p.progress_m = 5.0;
      CHECK(eta_to_landing(p, g, landing, 100.0, 0.0, 1.5) == doctest::Approx(110.0));
    }
    SUBCASE("mid-load, 4 s left, 30 m of path") {
      const std::size_t from = (li + n - 3) % n;
      REQUIRE(path_m(L, def, from, li) == doctest::Approx(30.0));
      AgvPlan p;
      p.current_node = p.next_node = def.nodes[from];
      CHECK(eta_to_landing(p, g, landing, 100.0, 4.0, 1.5) == doctest::Approx(124.0));
    }
  }

  TEST_CASE("occupancy_check") {
    AgvPlan a, b;
    a.agv = AgvId{1};
    b.agv = AgvId{2};
    a.current_node = a.next_node = NodeId{6};
    b.current_node = b.next_node = NodeId{7};
    a.pos = {-10, 30};
    b.pos = {-20, 30};
    CHECK(occupancy_check({a, b}, 3.0).empty());

    b.current_node = b.next_node = NodeId{6};
    b.pos = a.pos;
    const auto v = occupancy_check({a, b}, 3.0);
    REQUIRE(v.size() == 1);
    CHECK(v[0].node == NodeId{6});

    b.current_node = NodeId{5};
    b.next_node = NodeId{6};
    b.pos = {-8, 30};
    const auto close = occupancy_check({a, b}, 3.0);
    REQUIRE(close.size() == 1);
    CHECK_FALSE(close[0].node.has_value());
    CHECK(close[0].distance_m == doctest::Approx(2.0));
  }

  TEST_CASE("scheme partition") {
    const CycleScheme cs = CycleScheme::build(default_layout(Scheme::ThreeCycle), Scheme::ThreeCycle, 6);
    CHECK(cs.loops.size() == 3);
    CHECK(cs.agv_assignment.size() == 6);
    CHECK_THROWS_AS(CycleScheme::build(default_layout(Scheme::ThreeCycle), Scheme::ThreeCycle, 5), ScenarioError);
    const auto starts = cs.initial_nodes(cs.loops[0].id(), 2);
    REQUIRE(starts.size() == 2);
    CHECK(starts[0] == cs.loops[0].loading());
  }

  TEST_CASE("loaded AGV at the landing point heads for the loading point") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 6, 600);
    Engine e(c, {});
    Snapshot snap = testing::snapshot_of(e);
    const CycleScheme cs = CycleScheme::build(c.layout, c.scheme, c.fleet.agvs);
    const LoopGeometry& loop = cs.loops.front();

    // AGV 3 has just received UAV 1 at the landing point.
    AgvStatus& a = snap.agvs.at(AgvId{3});
    park(a, loop, loop.landing());
    a.state = fsm::AgvState::Waitting_Go_GW;
    a.carrying = UavId{1};
    a.target = loop.landing();
    UavStatus& u = snap.uavs.at(UavId{1});
    u.state = fsm::UavState::On_Car;
    u.on_agv = AgvId{3};
    u.workbench.reset();

    GroundScheduler g(c.layout, cs, params_of(c));
    OrderQueue orders;
    const auto r = g.plan_ground(snap, LandingBook{}, orders);
    const AgvCommandMsg* m = move_for(r, AgvId{3});
    REQUIRE(m != nullptr);
    CHECK(std::get<MoveTo>(m->action).node == loop.loading());
  }

  TEST_CASE("AGV behind occupied holds waits") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 6, 600);
    Engine e(c, {});
    Snapshot snap = testing::snapshot_of(e);
    const CycleScheme cs = CycleScheme::build(c.layout, c.scheme, c.fleet.agvs);
    const LoopGeometry& loop = cs.loops.front();
    std::vector<NodeId> holds;
    for (NodeId n = loop.next(loop.takeoff()); n != loop.landing(); n = loop.next(n)) holds.push_back(n);
    REQUIRE(!holds.empty());
    REQUIRE(holds.size() <= 4);

    // AGVs 1.. sit on every hold, AGV 5 at the takeoff point behind them.
    for (std::size_t i = 0; i < holds.size(); ++i) {
      AgvStatus& a = snap.agvs.at(AgvId{static_cast<int>(i) + 1});
      park(a, loop, holds[i]);
      a.target = loop.landing();
    }
    AgvStatus& behind = snap.agvs.at(AgvId{5});
    park(behind, loop, loop.takeoff());
    behind.target = loop.landing();

    GroundScheduler g(c.layout, cs, params_of(c));
    OrderQueue orders;
    const auto r = g.plan_ground(snap, LandingBook{}, orders);
    const auto it = std::find_if(r.plans.begin(), r.plans.end(), [](const AgvPlan& p) { return p.agv == AgvId{5}; });
    REQUIRE(it != r.plans.end());
    CHECK(it->action == GroundAction::Wait);
  }

  TEST_CASE("two idle loops: reservations spread over both landing points") {
    const ScenarioConfig c = testing::short_config(Scheme::TwoCycle, 6, 600);
    Engine e(c, {});
    const Snapshot snap = testing::snapshot_of(e);
    const CycleScheme cs = CycleScheme::build(c.layout, c.scheme, c.fleet.agvs);
    GroundScheduler g(c.layout, cs, params_of(c));
    AirScheduler air(c.layout, AirParams{});

    const auto first = g.return_candidates(snap, air.landings());
    REQUIRE(first.size() == 2);
    const auto d1 = air.request_return({UavId{1}, StationId{1}, 0.0}, first);
    REQUIRE(d1.approved);
    CHECK(d1.loop == LoopId{1});

    const auto second = g.return_candidates(snap, air.landings());
    const auto d2 = air.request_return({UavId{2}, StationId{2}, 0.0}, second);
    REQUIRE(d2.approved);
    CHECK(d2.landing != d1.landing);
  }

  TEST_CASE("staff loads the oldest pending order") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 6, 600);
    Engine e(c, {});
    e.run_until(200);
    Snapshot snap = testing::snapshot_of(e);
    const CycleScheme cs = CycleScheme::build(c.layout, c.scheme, c.fleet.agvs);
    GroundScheduler g(c.layout, cs, params_of(c));

    // Find an AGV with an empty-cargo UAV on the bench at the loading point.
    const auto it = std::find_if(snap.agvs.begin(), snap.agvs.end(), [&](const auto& kv) {
      return kv.second.state == fsm::AgvState::Waitting_Working && kv.second.carrying &&
             kv.second.at_node == cs.loop_of(kv.first).loading();
    });
    REQUIRE(it != snap.agvs.end());
    UavStatus& u = snap.uavs.at(*it->second.carrying);
    u.swap_due = false;
    u.cargo = false;
    u.order.reset();

    OrderQueue orders({{OrderId{7}, StationId{2}, 1, 301, 901, {}}, {OrderId{8}, StationId{1}, 2, 302, 902, {}}});
    orders.release_until(10.0);
    const auto r = g.plan_ground(snap, LandingBook{}, orders);
    REQUIRE(r.assignments.size() == 1);
    CHECK(r.assignments[0].order == OrderId{7});
    CHECK(r.assignments[0].station == StationId{2});
    CHECK(orders.pending() == 1);
  }
}
