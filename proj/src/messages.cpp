#include "uavsched/messages.hpp"

namespace uavsched {

using nlohmann::json;

std::string_view to_string(ServiceKind k) {
  switch (k) {
    case ServiceKind::None: return "none";
    case ServiceKind::Load: return "load";
    case ServiceKind::Swap: return "swap";
  }
  return "?";
}

namespace {

json pose(const Vec3& p) { return json::array({p.x, p.y, p.z}); }

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = v->value;
}

}  // namespace

json to_json(const UavStatus& s) {
  json j{{"uav", s.id.value},
         {"tick", s.tick},
         {"state", fsm::to_string(s.state)},
         {"pose", pose(s.pose)},
         {"cargo", s.cargo},
         {"landed", s.landed},
         {"parked", s.parked},
         {"flights_since_swap", s.flights_since_swap}};
  put(j, "order", s.order);
  put(j, "station", s.station);
  put(j, "on_agv", s.on_agv);
  put(j, "workbench", s.workbench);
  if (s.touchdown_tick) j["touchdown_tick"] = *s.touchdown_tick;
  return j;
}

json to_json(const AgvStatus& s) {
  json j{{"agv", s.id.value},
         {"tick", s.tick},
         {"state", fsm::to_string(s.state)},
         {"pose", pose(s.pose)},
         {"loop", s.loop.value},
         {"target", s.target.value},
         {"loop_pos_m", s.loop_pos_m},
         {"service", to_string(s.service)},
         {"service_remaining_ticks", s.service_remaining_ticks}};
  put(j, "carrying", s.carrying);
  put(j, "at_node", s.at_node);
  if (s.staff) j["staff"] = *s.staff;
  return j;
}

json to_json(const StatusMsg& s) {
  return std::visit([](const auto& v) { return to_json(v); }, s);
}

json to_json(const UavCommandMsg& c) {
  json j{{"target", "uav:" + std::to_string(c.target.value)},
         {"issued_tick", c.issued_tick},
         {"cmd", fsm::to_string(c.cmd)}};
  if (c.route) {
    j["route_station"] = c.route->station.value;
    j["route_dir"] = c.route->direction == Direction::Outbound ? "go" : "back";
    j["route_node"] = c.route->airport_node.value;
  }
  put(j, "landing", c.landing);
  put(j, "agv", c.agv);
  put(j, "order", c.order);
  put(j, "station", c.station);
  return j;
}

json to_json(const AgvCommandMsg& c) {
  json j{{"target", "agv:" + std::to_string(c.target.value)}, {"issued_tick", c.issued_tick}};
  if (const auto* cmd = std::get_if<fsm::AgvCommand>(&c.action)) {
    j["cmd"] = fsm::to_string(*cmd);
  } else {
    j["cmd"] = "Move";
    j["to"] = std::get<MoveTo>(c.action).node.value;
  }
  put(j, "uav", c.uav);
  if (c.staff) j["staff"] = *c.staff;
  return j;
}

json to_json(const CommandMsg& c) {
  return std::visit([](const auto& v) { return to_json(v); }, c);
}

std::string command_name(const CommandMsg& c) {
  if (const auto* u = std::get_if<UavCommandMsg>(&c)) return std::string(fsm::to_string(u->cmd));
  const auto& a = std::get<AgvCommandMsg>(c);
  if (const auto* cmd = std::get_if<fsm::AgvCommand>(&a.action)) return std::string(fsm::to_string(*cmd));
  return "Move";
}

std::string target_name(const CommandMsg& c) {
  if (const auto* u = std::get_if<UavCommandMsg>(&c)) return "uav:" + std::to_string(u->target.value);
  return "agv:" + std::to_string(std::get<AgvCommandMsg>(c).target.value);
}

}  // namespace uavsched
