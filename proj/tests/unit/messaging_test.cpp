#include <algorithm>
#include <memory>

#include "doctest.h"
#include "helpers.hpp"
#include "uavsched/messages.hpp"
#include "uavsched/nodes.hpp"

using namespace uavsched;

namespace {

std::vector<nlohmann::json> as_json(const std::vector<CommandMsg>& cmds) {
  std::vector<nlohmann::json> out;
  for (const auto& c : cmds) out.push_back(to_json(c));
  return out;
}

void ingest_all(MasterNode& m, const Snapshot& s) {
  for (const auto& [_, u] : s.uavs) m.ingest(u);
  for (const auto& [_, a] : s.agvs) m.ingest(a);
}

std::vector<nlohmann::json> events_of(const EventTrace& t, EventKind k) {
  std::vector<nlohmann::json> out;
  for (const auto& ev : t.events())
    if (ev.kind == k) {
      nlohmann::json j = ev.data;
      j["t"] = ev.tick;
      out.push_back(j);
    }
  return out;
}

}  // namespace

TEST_SUITE("messaging") {
  TEST_CASE("bounded queue drops when full") {
    BoundedQueue<int> q(2);
    CHECK(q.push(1));
    CHECK(q.push(2));
    CHECK_FALSE(q.push(3));
    CHECK(q.dropped() == 1);
    CHECK(q.drain() == std::vector<int>{1, 2});
    CHECK(q.size() == 0);
  }

  TEST_CASE("bus routes commands by vehicle kind") {
    MessageBus bus;
    bus.publish(CommandMsg{UavCommandMsg{UavId{1}, 0, fsm::UavCommand::Delivery, {}, {}, {}, {}, {}}});
    bus.publish(CommandMsg{AgvCommandMsg{AgvId{2}, 0, MoveTo{NodeId{5}}, {}, {}}});
    CHECK(bus.take_uav_commands().size() == 1);
    const auto agv = bus.take_agv_commands();
    REQUIRE(agv.size() == 1);
    CHECK(std::get<MoveTo>(agv[0].action).node == NodeId{5});
    CHECK(bus.take_uav_commands().empty());
  }

  TEST_CASE("AGV management publishes one status per AGV") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 4, 600);
    Engine e(c, {});
    std::vector<AgvRecord> agvs = e.agvs();
    const CycleScheme cs = CycleScheme::build(c.layout, c.scheme, c.fleet.agvs);
    AgvManagementNode node;
    for (const auto& a : agvs) node.add_vehicle(a.id);
    EventTrace trace;
    const auto out = node.mgmt_tick(3, {}, agvs, cs, trace);
    CHECK(out.size() == 6);
    for (const auto& s : out) CHECK(std::get<AgvStatus>(s).tick == 3);
    CHECK_THROWS_AS(node.add_vehicle(AgvId{3}), std::invalid_argument);
  }

  TEST_CASE("command for an unknown UAV is dead-lettered") {
    UavManagementNode node;
    for (int i = 1; i <= 16; ++i) node.add_vehicle(UavId{i});
    EventTrace trace;
    node.deliver(10, {UavCommandMsg{UavId{99}, 9, fsm::UavCommand::Delivery, {}, {}, {}, {}, {}}}, trace);
    const auto dead = events_of(trace, EventKind::DeadLetter);
    REQUIRE(dead.size() == 1);
    CHECK(dead[0]["reason"] == "unknown target");
    CHECK(dead[0]["target"] == "uav:99");
  }

  TEST_CASE("newest command wins the pending slot") {
    UavManagementNode node;
    node.add_vehicle(UavId{1});
    EventTrace trace;
    node.deliver(1, {UavCommandMsg{UavId{1}, 0, fsm::UavCommand::Load_Cargo, {}, {}, {}, {}, {}}}, trace);
    node.deliver(2, {UavCommandMsg{UavId{1}, 1, fsm::UavCommand::Delivery, {}, {}, {}, {}, {}}}, trace);
    REQUIRE(node.pending(UavId{1}).has_value());
    CHECK(node.pending(UavId{1})->cmd == fsm::UavCommand::Delivery);
    CHECK(trace.count(EventKind::Replaced) == 1);
  }

  TEST_CASE("halted UAV stops publishing; others are untouched") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 16, 600);
    Engine e(c, {});
    e.run_until(20);
    e.halt_uav(UavId{5});
    e.run_until(40);
    const Snapshot snap = e.master().snapshot(e.tick());
    CHECK(snap.uavs.size() == 15);
    CHECK(snap.uavs.count(UavId{5}) == 0);
    for (const auto& [id, s] : snap.uavs) CHECK(e.tick() - s.tick <= 1);
    CHECK(snap.agvs.size() == 6);
  }

  TEST_CASE("adding vehicles") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 16, 600);
    Engine e(c, {});
    e.run_until(10);
    e.add_uav(UavId{17});
    e.run_until(20);
    CHECK(e.master().snapshot(e.tick()).uavs.size() == 17);
    CHECK_THROWS_AS(e.add_uav(UavId{17}), std::invalid_argument);
    CHECK_THROWS_AS(e.add_agv(AgvId{3}, LoopId{1}, c.layout.loops[0].nodes[5]), std::invalid_argument);
  }

  TEST_CASE("Delivery to a waiting UAV takes off on the next tick") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 4, 400);
    Engine e(c, default_orders(c));
    e.run();
    const auto cmds = events_of(e.trace(), EventKind::Command);
    const auto trans = events_of(e.trace(), EventKind::Transition);
    const auto it = std::find_if(cmds.begin(), cmds.end(), [](const nlohmann::json& j) {
      return j["cmd"] == "Delivery" && j.value("route_dir", "") == "go";
    });
    REQUIRE(it != cmds.end());
    const int uav = std::stoi((*it)["target"].get<std::string>().substr(4));
    const auto fly = std::find_if(trans.begin(), trans.end(), [&](const nlohmann::json& j) {
      return j["m"] == "uav" && j["id"] == uav && j["to"] == "Flying_Go";
    });
    REQUIRE(fly != trans.end());
    CHECK((*fly)["from"] == "Waitting_Go");
    CHECK((*fly)["t"].get<std::int64_t>() == (*it)["t"].get<std::int64_t>() + 1);
  }

  TEST_CASE("approved takeoff carries the outbound route") {
    const ScenarioConfig c = testing::short_config(Scheme::TwoCycle, 6, 400);
    Engine e(c, default_orders(c));
    e.run();
    const auto approvals = events_of(e.trace(), EventKind::Approval);
    const auto cmds = events_of(e.trace(), EventKind::Command);
    int checked = 0;
    for (const auto& a : approvals) {
      if (a["dir"] != "go") continue;
      const std::string target = "uav:" + std::to_string(a["uav"].get<int>());
      const auto cmd = std::find_if(cmds.begin(), cmds.end(), [&](const nlohmann::json& j) {
        return j["target"] == target && j["cmd"] == "Delivery" && j["issued_tick"] == a["t"];
      });
      REQUIRE(cmd != cmds.end());
      CHECK((*cmd)["route_dir"] == "go");
      CHECK((*cmd)["route_station"] == a["station"]);
      CHECK((*cmd)["route_node"] == a["takeoff"]);
      ++checked;
    }
    CHECK(checked > 0);
  }

  TEST_CASE("master decisions replay from the same statuses") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 6, 600);
    auto cfg = std::make_shared<const ScenarioConfig>(c);
    const auto orders = default_orders(c);
    Engine e(c, orders);
    for (std::int64_t t : {0, 100, 350, 1000}) {
      e.run_until(t);
      const Snapshot snap = testing::snapshot_of(e);
      MasterNode a(cfg, orders), b(cfg, orders);
      ingest_all(a, snap);
      ingest_all(b, snap);
      EventTrace ta, tb;
      CHECK(as_json(a.master_tick(snap.tick, ta)) == as_json(b.master_tick(snap.tick, tb)));
    }
  }

  TEST_CASE("no takeoff commands while every UAV is airborne") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 6, 600);
    auto cfg = std::make_shared<const ScenarioConfig>(c);
    const auto orders = default_orders(c);
    Engine e(c, orders);
    Snapshot snap = testing::snapshot_of(e);
    for (auto& [id, u] : snap.uavs) {
      u.state = fsm::UavState::Flying_Go;
      u.landed = false;
      u.cargo = true;
      u.pose.z = 50.0;
      u.workbench.reset();
      u.station = StationId{1};
    }
    MasterNode m(cfg, orders);
    ingest_all(m, snap);
    EventTrace trace;
    const auto cmds = m.master_tick(snap.tick, trace);
    for (const auto& cmd : cmds) {
      const auto* u = std::get_if<UavCommandMsg>(&cmd);
      CHECK_FALSE((u && u->cmd == fsm::UavCommand::Delivery));
    }
  }

  TEST_CASE("stale statuses drop out of the snapshot") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 4, 600);
    auto cfg = std::make_shared<const ScenarioConfig>(c);
    Engine e(c, {});
    MasterNode m(cfg, {});
    ingest_all(m, testing::snapshot_of(e));
    CHECK(m.snapshot(6).uavs.size() == 4);
    CHECK(m.snapshot(7).uavs.empty());
  }

  TEST_CASE("status and command JSON") {
    UavStatus s;
    s.id = UavId{3};
    s.state = fsm::UavState::Flying_Back;
    const auto j = to_json(StatusMsg{s});
    CHECK(j.dump().find("Flying_Back") != std::string::npos);
    const CommandMsg cmd{AgvCommandMsg{AgvId{2}, 4, fsm::AgvCommand::UAV_Charge, UavId{1}, 1}};
    CHECK(target_name(cmd) == "agv:2");
    CHECK(command_name(cmd) == "UAV_Charge");
  }
}
