#pragma once

#include <sstream>
#include <string>

#include "uavsched/engine.hpp"
#include "uavsched/nodes.hpp"
#include "uavsched/scenario.hpp"

namespace testing {

inline uavsched::ScenarioConfig short_config(uavsched::Scheme s, int uavs, double duration_s, std::uint64_t seed = 1) {
  uavsched::ScenarioConfig c = uavsched::default_scenario(s);
  c.fleet.uavs = uavs;
  c.duration_s = duration_s;
  c.seed = seed;
  return c;
}

/// Snapshot built straight from engine records, every vehicle fresh.
inline uavsched::Snapshot snapshot_of(const uavsched::Engine& e) {
  uavsched::Snapshot s;
  s.tick = e.tick();
  s.now_s = e.time().seconds();
  for (const auto& u : e.uavs()) s.uavs[u.id] = uavsched::status_of(u, e.tick());
  for (const auto& a : e.agvs()) s.agvs[a.id] = uavsched::status_of(a, e.tick());
  return s;
}

/// Full trace text of a run.
inline std::string run_trace(const uavsched::ScenarioConfig& c) {
  std::ostringstream out;
  uavsched::EngineOptions o;
  o.trace_out = &out;
  uavsched::run(c, uavsched::default_orders(c), o);
  return out.str();
}

}  // namespace testing
