#include "uavsched/fsm.hpp"

#include <algorithm>
#include <sstream>

namespace uavsched::fsm {

StepResult<UavState> uav_step(UavState s, std::optional<UavCommand> cmd, const UavCondition& c) {
  using S = UavState;
  // condition edges first
  switch (s) {
    case S::Ready:
      if (c.on_car) return {S::On_Car, {}, false};
      break;
    case S::On_Car:
      if (!c.on_car && c.retrieved) return {S::Ready, {}, false};
      if (c.on_car && c.get_cargo) return {S::Waitting_Go, {}, false};
      break;
    case S::Flying_Back:
      if (c.landed && c.on_car) return {S::On_Car, {}, false};
      break;
    default: break;
  }
  if (!cmd) return {s, {}, false};

  const auto reject = StepResult<UavState>{s, {Effect::Reject}, true};
  switch (s) {
    case S::On_Car:
      if (*cmd == UavCommand::Load_Cargo && c.on_car && !c.get_cargo) return {s, {Effect::TakeCargo}, true};
      return reject;
    case S::Waitting_Go:
      if (*cmd == UavCommand::Delivery && c.get_cargo) return {S::Flying_Go, {Effect::StartFlight}, true};
      return reject;
    case S::Flying_Go:
      if (*cmd == UavCommand::Release_Cargo && c.landed) return {S::Waitting_Back, {Effect::DropCargo}, true};
      return reject;
    case S::Waitting_Back:
      if (*cmd == UavCommand::Delivery && c.landed && !c.get_cargo) return {S::Flying_Back, {Effect::StartFlight}, true};
      return reject;
    case S::Ready:
    case S::Flying_Back: return reject;
  }
  return reject;
}

StepResult<AgvState> agv_step(AgvState s, std::optional<AgvCommand> cmd, const AgvCondition& c) {
  using S = AgvState;
  switch (s) {
    case S::Waitting_Pickup:
      if (c.have_uav && c.in_aw) return {S::Waitting_Go_GW, {}, false};
      break;
    case S::Waitting_Go_GW:
      if (!c.have_uav) return {S::Waitting_Pickup, {}, false};
      if (c.in_gw) return {S::Waitting_Working, {}, false};
      break;
    case S::Waitting_Working:
      if (!c.have_uav) return {S::Waitting_Pickup, {}, false};
      if (c.cargo_loaded) return {S::Waitting_Go_AW, {}, false};
      break;
    case S::Waitting_Go_AW:
      if (!c.have_uav) return {S::Waitting_Pickup, {}, false};
      break;
  }
  if (!cmd) return {s, {}, false};

  const auto reject = StepResult<AgvState>{s, {Effect::Reject}, true};
  const bool serviceable = c.have_uav && c.in_gw;
  switch (*cmd) {
    case AgvCommand::UAV_Receive:
      if (s == S::Waitting_Pickup && !c.have_uav && c.in_gw) return {S::Waitting_Working, {Effect::MountUav}, true};
      return reject;
    case AgvCommand::UAV_Charge:
      if (s == S::Waitting_Working && serviceable) return {s, {Effect::BeginSwap}, true};
      return reject;
    case AgvCommand::UAV_Get_Cargo:
      if (s == S::Waitting_Working && serviceable && !c.cargo_loaded) return {s, {Effect::BeginLoad}, true};
      return reject;
    case AgvCommand::UAV_Retrieve:
      if (s == S::Waitting_Working && serviceable) return {S::Waitting_Pickup, {Effect::UnmountUav}, true};
      return reject;
  }
  return reject;
}

std::vector<Transition> uav_transitions() {
  return {
      {"Ready", "cond On_Car", "On_Car"},
      {"On_Car", "cmd Load_Cargo", "On_Car"},
      {"On_Car", "cond Get_Cargo", "Waitting_Go"},
      {"On_Car", "cond Retrieved", "Ready"},
      {"Waitting_Go", "cmd Delivery", "Flying_Go"},
      {"Flying_Go", "cmd Release_Cargo & cond Landed", "Waitting_Back"},
      {"Waitting_Back", "cmd Delivery", "Flying_Back"},
      {"Flying_Back", "cond Landed & On_Car", "On_Car"},
  };
}

std::vector<Transition> agv_transitions() {
  return {
      {"Waitting_Pickup", "cmd UAV_Receive & cond In_GW", "Waitting_Working"},
      {"Waitting_Pickup", "cond Have_UAV & In_AW", "Waitting_Go_GW"},
      {"Waitting_Go_GW", "cond Have_UAV & In_GW", "Waitting_Working"},
      {"Waitting_Go_GW", "cond !Have_UAV", "Waitting_Pickup"},
      {"Waitting_Working", "cmd UAV_Charge", "Waitting_Working"},
      {"Waitting_Working", "cmd UAV_Get_Cargo", "Waitting_Working"},
      {"Waitting_Working", "cond Cargo_Loaded", "Waitting_Go_AW"},
      {"Waitting_Working", "cmd UAV_Retrieve", "Waitting_Pickup"},
      {"Waitting_Working", "cond !Have_UAV", "Waitting_Pickup"},
      {"Waitting_Go_AW", "cond !Have_UAV", "Waitting_Pickup"},
  };
}

namespace {

bool in_table(const std::vector<Transition>& table, std::string_view from, std::string_view to) {
  return from == to || std::any_of(table.begin(), table.end(),
                                   [&](const Transition& t) { return t.from == from && t.to == to; });
}

}  // namespace

bool is_legal_uav_edge(UavState from, UavState to) {
  static const auto table = uav_transitions();
  return in_table(table, to_string(from), to_string(to));
}

bool is_legal_agv_edge(AgvState from, AgvState to) {
  static const auto table = agv_transitions();
  return in_table(table, to_string(from), to_string(to));
}

std::string to_dot() {
  std::ostringstream os;
  os << "digraph fsm {\n  rankdir=LR;\n";
  os << "  subgraph cluster_uav {\n    label=\"UAV\";\n";
  for (const auto& t : uav_transitions())
    os << "    \"uav:" << t.from << "\" -> \"uav:" << t.to << "\" [label=\"" << t.trigger << "\"];\n";
  os << "  }\n  subgraph cluster_agv {\n    label=\"AGV\";\n";
  for (const auto& t : agv_transitions())
    os << "    \"agv:" << t.from << "\" -> \"agv:" << t.to << "\" [label=\"" << t.trigger << "\"];\n";
  os << "  }\n}\n";
  return os.str();
}

std::string_view to_string(UavState s) {
  switch (s) {
    case UavState::Ready: return "Ready";
    case UavState::On_Car: return "On_Car";
    case UavState::Waitting_Go: return "Waitting_Go";
    case UavState::Flying_Go: return "Flying_Go";
    case UavState::Waitting_Back: return "Waitting_Back";
    case UavState::Flying_Back: return "Flying_Back";
  }
  return "?";
}

std::string_view to_string(AgvState s) {
  switch (s) {
    case AgvState::Waitting_Go_GW: return "Waitting_Go_GW";
    case AgvState::Waitting_Pickup: return "Waitting_Pickup";
    case AgvState::Waitting_Working: return "Waitting_Working";
    case AgvState::Waitting_Go_AW: return "Waitting_Go_AW";
  }
  return "?";
}

std::string_view to_string(UavCommand c) {
  switch (c) {
    case UavCommand::Delivery: return "Delivery";
    case UavCommand::Release_Cargo: return "Release_Cargo";
    case UavCommand::Load_Cargo: return "Load_Cargo";
  }
  return "?";
}

std::string_view to_string(AgvCommand c) {
  switch (c) {
    case AgvCommand::UAV_Get_Cargo: return "UAV_Get_Cargo";
    case AgvCommand::UAV_Receive: return "UAV_Receive";
    case AgvCommand::UAV_Retrieve: return "UAV_Retrieve";
    case AgvCommand::UAV_Charge: return "UAV_Charge";
  }
  return "?";
}

std::string_view to_string(Effect e) {
  switch (e) {
    case Effect::StartFlight: return "start-flight";
    case Effect::DropCargo: return "drop-cargo";
    case Effect::TakeCargo: return "take-cargo";
    case Effect::MountUav: return "mount-uav";
    case Effect::UnmountUav: return "unmount-uav";
    case Effect::BeginLoad: return "begin-service-load";
    case Effect::BeginSwap: return "begin-service-swap";
    case Effect::Reject: return "reject";
  }
  return "?";
}

std::optional<UavState> parse_uav_state(std::string_view s) {
  for (auto st : kUavStates)
    if (to_string(st) == s) return st;
  return std::nullopt;
}

std::optional<AgvState> parse_agv_state(std::string_view s) {
  for (auto st : kAgvStates)
    if (to_string(st) == s) return st;
  return std::nullopt;
}

}  // namespace uavsched::fsm
