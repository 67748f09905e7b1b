#include <algorithm>
#include <set>
#include <utility>

#include "doctest.h"
#include "uavsched/fsm.hpp"

using namespace uavsched::fsm;

namespace {

// Edges drawn from the delivery-cycle narrative, kept apart from the
// implementation's own table.
const std::set<std::pair<std::string, std::string>> kUavEdges{
    {"Ready", "On_Car"},           {"On_Car", "Waitting_Go"},       {"On_Car", "Ready"},
    {"Waitting_Go", "Flying_Go"},  {"Flying_Go", "Waitting_Back"},  {"Waitting_Back", "Flying_Back"},
    {"Flying_Back", "On_Car"},
};
const std::set<std::pair<std::string, std::string>> kAgvEdges{
    {"Waitting_Pickup", "Waitting_Working"}, {"Waitting_Pickup", "Waitting_Go_GW"},
    {"Waitting_Go_GW", "Waitting_Working"},  {"Waitting_Go_GW", "Waitting_Pickup"},
    {"Waitting_Working", "Waitting_Go_AW"},  {"Waitting_Working", "Waitting_Pickup"},
    {"Waitting_Go_AW", "Waitting_Pickup"},
};

UavCondition uav_cond(unsigned bits) { return {bool(bits & 1), bool(bits & 2), bool(bits & 4), bool(bits & 8)}; }
AgvCondition agv_cond(unsigned bits) { return {bool(bits & 1), bool(bits & 2), bool(bits & 4), bool(bits & 8)}; }

bool has(const std::vector<Effect>& v, Effect e) { return std::find(v.begin(), v.end(), e) != v.end(); }

}  // namespace

TEST_SUITE("fsm") {
  TEST_CASE("UAV machine is total and deterministic over every input") {
    std::vector<std::optional<UavCommand>> cmds{std::nullopt};
    for (auto c : kUavCommands) cmds.push_back(c);
    int inputs = 0;
    for (auto s : kUavStates)
      for (const auto& cmd : cmds)
        for (unsigned bits = 0; bits < 16; ++bits) {
          ++inputs;
          const auto cond = uav_cond(bits);
          const auto a = uav_step(s, cmd, cond);
          const auto b = uav_step(s, cmd, cond);
          CHECK(a == b);
          CHECK(std::find(kUavStates.begin(), kUavStates.end(), a.state) != kUavStates.end());
          if (a.state != s) CHECK(kUavEdges.count({std::string(to_string(s)), std::string(to_string(a.state))}) == 1);
          if (!cmd) {
            CHECK_FALSE(a.consumed);
            CHECK(a.effects.empty());
          }
          if (has(a.effects, Effect::Reject)) {
            CHECK(a.state == s);
            CHECK(a.consumed);
            CHECK(a.effects.size() == 1);
          }
          if (!a.consumed) CHECK(a.effects.empty());
          CHECK(is_legal_uav_edge(s, a.state));
        }
    CHECK(inputs == 6 * 4 * 16);
  }

  TEST_CASE("AGV machine is total and deterministic over every input") {
    std::vector<std::optional<AgvCommand>> cmds{std::nullopt};
    for (auto c : kAgvCommands) cmds.push_back(c);
    int inputs = 0;
    for (auto s : kAgvStates)
      for (const auto& cmd : cmds)
        for (unsigned bits = 0; bits < 16; ++bits) {
          ++inputs;
          const auto cond = agv_cond(bits);
          const auto a = agv_step(s, cmd, cond);
          CHECK(a == agv_step(s, cmd, cond));
          CHECK(std::find(kAgvStates.begin(), kAgvStates.end(), a.state) != kAgvStates.end());
          if (a.state != s) CHECK(kAgvEdges.count({std::string(to_string(s)), std::string(to_string(a.state))}) == 1);
          if (!cmd) {
            CHECK_FALSE(a.consumed);
            CHECK(a.effects.empty());
          }
          if (has(a.effects, Effect::Reject)) {
            CHECK(a.state == s);
            CHECK(a.effects.size() == 1);
          }
          if (!a.consumed) CHECK(a.effects.empty());
          CHECK(is_legal_agv_edge(s, a.state));
        }
    CHECK(inputs == 4 * 5 * 16);
  }

  TEST_CASE("UAV narrative edges") {
    CHECK(uav_step(UavState::Ready, std::nullopt, {.on_car = true}).state == UavState::On_Car);

    const auto take = uav_step(UavState::On_Car, UavCommand::Load_Cargo, {.landed = true, .on_car = true});
    CHECK(take.state == UavState::On_Car);
    CHECK(has(take.effects, Effect::TakeCargo));
    CHECK(uav_step(UavState::On_Car, std::nullopt, {.landed = true, .on_car = true, .get_cargo = true}).state ==
          UavState::Waitting_Go);

    const auto drop = uav_step(UavState::Flying_Go, UavCommand::Release_Cargo, {.landed = true, .get_cargo = true});
    CHECK(drop.state == UavState::Waitting_Back);
    CHECK(has(drop.effects, Effect::DropCargo));
    CHECK(uav_step(UavState::Flying_Go, std::nullopt, {.landed = true, .get_cargo = true}).state ==
          UavState::Flying_Go);

    const auto bad = uav_step(UavState::Ready, UavCommand::Delivery, {.landed = true});
    CHECK(bad.state == UavState::Ready);
    CHECK(has(bad.effects, Effect::Reject));
  }

  TEST_CASE("AGV narrative edges") {
    const auto recv = agv_step(AgvState::Waitting_Pickup, AgvCommand::UAV_Receive, {.in_gw = true});
    CHECK(recv.state == AgvState::Waitting_Working);
    CHECK(has(recv.effects, Effect::MountUav));

    CHECK(agv_step(AgvState::Waitting_Working, std::nullopt, {.have_uav = true, .in_gw = true, .cargo_loaded = true})
              .state == AgvState::Waitting_Go_AW);
    CHECK(agv_step(AgvState::Waitting_Pickup, std::nullopt, {.have_uav = true, .in_aw = true}).state ==
          AgvState::Waitting_Go_GW);

    const auto bad = agv_step(AgvState::Waitting_Go_AW, AgvCommand::UAV_Receive, {.have_uav = true, .in_aw = true});
    CHECK(bad.state == AgvState::Waitting_Go_AW);
    CHECK(has(bad.effects, Effect::Reject));
  }

  TEST_CASE("condition edges leave the command queued") {
    const auto r = uav_step(UavState::Ready, UavCommand::Load_Cargo, {.on_car = true});
    CHECK(r.state == UavState::On_Car);
    CHECK_FALSE(r.consumed);
    const auto again = uav_step(r.state, UavCommand::Load_Cargo, {.on_car = true});
    CHECK(again.consumed);
    CHECK(has(again.effects, Effect::TakeCargo));
  }

  TEST_CASE("walking the delivery cycle by hand") {
    UavState s = UavState::Ready;
    auto step = [&](std::optional<UavCommand> c, UavCondition cond) { s = uav_step(s, c, cond).state; };
    step(std::nullopt, {.landed = true, .on_car = true});
    CHECK(s == UavState::On_Car);
    step(UavCommand::Load_Cargo, {.landed = true, .on_car = true});
    step(std::nullopt, {.landed = true, .on_car = true, .get_cargo = true});
    CHECK(s == UavState::Waitting_Go);
    step(UavCommand::Delivery, {.landed = true, .on_car = true, .get_cargo = true});
    CHECK(s == UavState::Flying_Go);
    step(UavCommand::Release_Cargo, {.landed = true, .get_cargo = true});
    CHECK(s == UavState::Waitting_Back);
    step(UavCommand::Delivery, {.landed = true});
    CHECK(s == UavState::Flying_Back);
    step(std::nullopt, {});
    CHECK(s == UavState::Flying_Back);
    step(std::nullopt, {.landed = true, .on_car = true});
    CHECK(s == UavState::On_Car);
  }

  TEST_CASE("transition tables") {
    const auto uav = uav_transitions();
    const std::set<std::string> names{"Ready", "On_Car", "Waitting_Go", "Flying_Go", "Waitting_Back", "Flying_Back"};
    for (const auto& t : uav) {
      CHECK(names.count(t.from) == 1);
      CHECK(names.count(t.to) == 1);
    }
    CHECK(std::find(uav.begin(), uav.end(), Transition{"Flying_Back", "cond Landed & On_Car", "On_Car"}) != uav.end());

    std::set<std::pair<std::string, std::string>> changes;
    for (const auto& t : uav)
      if (t.from != t.to) changes.insert({t.from, t.to});
    CHECK(changes == kUavEdges);
    changes.clear();
    for (const auto& t : agv_transitions())
      if (t.from != t.to) changes.insert({t.from, t.to});
    CHECK(changes == kAgvEdges);
  }

  TEST_CASE("state names parse back") {
    for (auto s : kUavStates) CHECK(parse_uav_state(to_string(s)) == s);
    for (auto s : kAgvStates) CHECK(parse_agv_state(to_string(s)) == s);
    CHECK_FALSE(parse_uav_state("Waiting_Go").has_value());
    CHECK(to_dot().find("digraph") == 0);
  }
}
