#include <algorithm>
#include <map>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "uavsched/engine.hpp"
#include "uavsched/metrics.hpp"
#include "uavsched/orders.hpp"

using namespace uavsched;

TEST_SUITE("sim_engine") {
  TEST_CASE("an hour at dt 0.1 is 36000 steps") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 4, 3600);
    Engine e(c, {});
    CHECK(e.total_ticks() == 36000);
    e.run();
    CHECK(e.tick() == 36000);
    CHECK(e.trace().count(EventKind::Summary) == 1);
    CHECK_THROWS(e.step());
  }

  TEST_CASE("cruise advances 1 m per tick and ends exactly on the route end") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 6, 900);
    Engine e(c, default_orders(c));
    std::map<UavId, Vec3> prev;
    std::map<UavId, FlightPhase> phase;
    int cruise_steps = 0, route_ends = 0;
    while (e.tick() < e.total_ticks()) {
      for (const auto& u : e.uavs()) {
        prev[u.id] = u.pose;
        phase[u.id] = u.phase;
      }
      e.step();
      for (const auto& u : e.uavs()) {
        const double d = distance(prev[u.id], u.pose);
        CHECK(d <= 1.0 + 1e-9);
        if (phase[u.id] == FlightPhase::Cruise && u.phase == FlightPhase::Cruise && d > 0.0) {
          ++cruise_steps;
          // Straight legs: a full step unless the leg ends this tick.
          if (u.segment == 0) CHECK(d == doctest::Approx(1.0).epsilon(1e-9));
        }
        if (phase[u.id] == FlightPhase::Cruise && u.phase != FlightPhase::Cruise && u.route) {
          ++route_ends;
          const Vec3 end = u.route->waypoints.back();
          CHECK(u.pose.x == doctest::Approx(end.x));
          CHECK(u.pose.y == doctest::Approx(end.y));
        }
      }
    }
    CHECK(cruise_steps > 1000);
    CHECK(route_ends > 0);
  }

  TEST_CASE("cargo loading takes 100 ticks") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 4, 900);
    Engine e(c, default_orders(c));
    e.run();
    std::map<int, std::int64_t> open;
    int loads = 0;
    for (const auto& ev : e.trace().events()) {
      if (ev.kind != EventKind::ServiceStart && ev.kind != EventKind::ServiceEnd) continue;
      if (ev.data.at("kind") != "load") continue;
      const int agv = ev.data.at("agv").get<int>();
      if (ev.kind == EventKind::ServiceStart) {
        open[agv] = ev.tick;
      } else {
        REQUIRE(open.count(agv));
        CHECK(ev.tick - open[agv] == 100);
        open.erase(agv);
        ++loads;
      }
    }
    CHECK(loads > 0);
  }

  TEST_CASE("distance monitor stays quiet in a default run") {
    const ScenarioConfig c = testing::short_config(Scheme::TwoCycle, 16, 1200);
    Engine e(c, default_orders(c));
    std::size_t events = 0;
    while (e.tick() < e.total_ticks()) {
      e.step();
      events += e.distance_monitor().size();
    }
    CHECK(events == 0);
    CHECK(e.counters().uav_violations == 0);
    CHECK(e.counters().agv_violations == 0);
  }

  TEST_CASE("one-cycle hour: deliveries and consistent scores") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 6, 3600);
    const auto orders = default_orders(c);
    Engine e(c, orders);
    e.run();
    CHECK(e.counters().delivered > 0);
    int done = 0;
    for (const auto& ev : e.trace().events()) {
      if (ev.kind != EventKind::OrderDone) continue;
      ++done;
      const double finish = ev.data.at("finish_t").get<double>();
      const double timeout = ev.data.at("timeout_t").get<double>();
      const double got = ev.data.at("score").get<double>();
      CHECK((finish < timeout || got <= 0.0));
      CHECK(got == doctest::Approx(score(ev.data.at("better_t").get<double>(), timeout, finish)));
    }
    CHECK(done == e.counters().delivered);
  }

  TEST_CASE("the delivery cycle runs end to end") {
    const ScenarioConfig c = testing::short_config(Scheme::ThreeCycle, 6, 1800);
    Engine e(c, default_orders(c));
    e.run();
    const std::vector<std::string> cycle{"Ready",     "On_Car",        "Waitting_Go", "Flying_Go",
                                         "Waitting_Back", "Flying_Back", "On_Car"};
    std::map<int, std::vector<std::string>> seen;
    for (const auto& u : e.uavs()) seen[u.id.value] = {"Ready"};
    for (const auto& ev : e.trace().events())
      if (ev.kind == EventKind::Transition && ev.data.at("m") == "uav")
        seen[ev.data.at("id").get<int>()].push_back(ev.data.at("to").get<std::string>());
    int full = 0;
    for (const auto& [id, states] : seen)
      if (states.size() >= cycle.size() && std::equal(cycle.begin(), cycle.end(), states.begin())) ++full;
    CHECK(full >= 3);
  }

  TEST_CASE("same seed, same trace; threads do not change it") {
    const ScenarioConfig c = testing::short_config(Scheme::TwoCycle, 8, 900, 7);
    const std::string a = testing::run_trace(c);
    CHECK(a == testing::run_trace(c));

    std::ostringstream conc;
    EngineOptions o;
    o.trace_out = &conc;
    o.mode = ExecMode::Concurrent;
    run(c, default_orders(c), o);
    CHECK(conc.str() == a);

    ScenarioConfig other = c;
    other.seed = 8;
    CHECK(testing::run_trace(other) != a);
  }

  TEST_CASE("a halted UAV does not stop the fleet") {
    const ScenarioConfig c = testing::short_config(Scheme::OneCycle, 8, 2400);
    Engine e(c, default_orders(c));
    e.run_until(to_ticks(1200, c.dt_s));
    e.halt_uav(UavId{3});
    const auto before = e.counters().delivered;
    const Vec3 frozen = e.uav(UavId{3}).pose;
    e.run_until(to_ticks(1800, c.dt_s));
    CHECK(e.counters().delivered > before);
    CHECK(e.uav(UavId{3}).pose == frozen);
  }

  TEST_CASE("online metrics match the trace") {
    const ScenarioConfig c = testing::short_config(Scheme::ThreeCycle, 10, 1800, 3);
    std::ostringstream out;
    EngineOptions o;
    o.trace_out = &out;
    const RunResult r = run(c, default_orders(c), o);
    std::istringstream in(out.str());
    const MetricsReport m = metrics_from_trace(in);
    CHECK(m.delivered == r.metrics.delivered);
    CHECK(m.orders_issued == r.metrics.orders_issued);
    CHECK(m.score_sum == doctest::Approx(r.metrics.score_sum));
    CHECK(m.agv_busy == doctest::Approx(r.metrics.agv_busy));
    CHECK(m.staff_busy == doctest::Approx(r.metrics.staff_busy));
    CHECK(m.deferrals == r.metrics.deferrals);
    CHECK(m.anomalies == r.metrics.anomalies);
    CHECK(m.scheme == "three-cycle");
    CHECK(m.n_uavs == 10);
  }
}
