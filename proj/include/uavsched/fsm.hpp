#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace uavsched::fsm {

// State and command names keep the original spellings ("Waitting").

enum class UavState { Ready, On_Car, Waitting_Go, Flying_Go, Waitting_Back, Flying_Back };
enum class UavCommand { Delivery, Release_Cargo, Load_Cargo };

inline constexpr std::array kUavStates{UavState::Ready,      UavState::On_Car,        UavState::Waitting_Go,
                                       UavState::Flying_Go,  UavState::Waitting_Back, UavState::Flying_Back};
inline constexpr std::array kUavCommands{UavCommand::Delivery, UavCommand::Release_Cargo, UavCommand::Load_Cargo};

/// Ground-truth predicates, re-evaluated every tick.
struct UavCondition {
  bool landed = false;     // on the ground (station pad or AGV)
  bool on_car = false;     // physically mounted on an AGV
  bool get_cargo = false;  // holds cargo
  bool retrieved = false;  // taken off the AGV onto the workbench
  friend bool operator==(const UavCondition&, const UavCondition&) = default;
};

enum class AgvState { Waitting_Go_GW, Waitting_Pickup, Waitting_Working, Waitting_Go_AW };
enum class AgvCommand { UAV_Get_Cargo, UAV_Receive, UAV_Retrieve, UAV_Charge };

inline constexpr std::array kAgvStates{AgvState::Waitting_Go_GW, AgvState::Waitting_Pickup, AgvState::Waitting_Working,
                                       AgvState::Waitting_Go_AW};
inline constexpr std::array kAgvCommands{AgvCommand::UAV_Get_Cargo, AgvCommand::UAV_Receive, AgvCommand::UAV_Retrieve,
                                         AgvCommand::UAV_Charge};

struct AgvCondition {
  bool have_uav = false;
  bool in_gw = false;
  bool in_aw = false;
  /// Carried UAV holds cargo (mirror of its Get_Cargo).
  bool cargo_loaded = false;
  friend bool operator==(const AgvCondition&, const AgvCondition&) = default;
};

enum class Effect {
  StartFlight,   // UAV: take off along the commanded route
  DropCargo,     // UAV: release cargo at the station
  TakeCargo,     // UAV: accept the order being loaded
  MountUav,      // AGV: take a Ready UAV from the workbench
  UnmountUav,    // AGV: put the UAV back on the workbench
  BeginLoad,     // AGV: staff starts cargo loading
  BeginSwap,     // AGV: staff starts battery replacement
  Reject,        // command not legal in this state / condition
};

template <class State>
struct StepResult {
  State state;
  std::vector<Effect> effects;
  /// The pending command was used (accepted or rejected) this tick.
  bool consumed = false;
  friend bool operator==(const StepResult&, const StepResult&) = default;
};

/// UAV transition function. Condition edges take priority; when one fires the
/// pending command stays queued for the next tick. Total over its domain.
StepResult<UavState> uav_step(UavState state, std::optional<UavCommand> cmd, const UavCondition& cond);

/// AGV transition function, same conventions as uav_step.
StepResult<AgvState> agv_step(AgvState state, std::optional<AgvCommand> cmd, const AgvCondition& cond);

struct Transition {
  std::string from;
  std::string trigger;
  std::string to;
  friend bool operator==(const Transition&, const Transition&) = default;
  friend auto operator<=>(const Transition&, const Transition&) = default;
};

/// Complete edge sets (state changes only), documented triggers.
std::vector<Transition> uav_transitions();
std::vector<Transition> agv_transitions();

bool is_legal_uav_edge(UavState from, UavState to);
bool is_legal_agv_edge(AgvState from, AgvState to);

/// Graphviz description of both machines.
std::string to_dot();

std::string_view to_string(UavState s);
std::string_view to_string(AgvState s);
std::string_view to_string(UavCommand c);
std::string_view to_string(AgvCommand c);
std::string_view to_string(Effect e);

std::optional<UavState> parse_uav_state(std::string_view s);
std::optional<AgvState> parse_agv_state(std::string_view s);

}  // namespace uavsched::fsm
