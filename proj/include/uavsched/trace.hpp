#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "uavsched/domain.hpp"

namespace uavsched {

enum class EventKind {
  Meta,          // run parameters, first line
  Transition,    // FSM state change
  Command,       // command delivered to a vehicle's pending slot
  Replaced,      // pending command overwritten by a newer one
  DeadLetter,    // command for an unknown vehicle
  Rejected,      // command rejected by an FSM
  Approval,      // takeoff / return approved
  Deferral,      // takeoff / return deferred
  ServiceStart,  // load / swap / unload started
  ServiceEnd,
  Arrival,       // touchdown at a station pad
  BookingClosed, // arrival booking removed, predicted vs actual
  Landing,       // touchdown on an AGV at a landing point
  AgvArrive,     // AGV stopped at a node
  AgvDepart,     // AGV left a node
  OrderDone,
  Violation,
  Anomaly,
  Halt,          // vehicle driver halted (fault injection)
  VehicleAdded,
  Poses,         // per-tick positions of vehicles that moved
  Summary,       // last line
};

std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);

struct TraceEvent {
  std::int64_t tick = 0;
  EventKind kind = EventKind::Meta;
  nlohmann::json data = nlohmann::json::object();
};

/// Pose of one vehicle that moved during a tick.
struct PoseRecord {
  bool is_uav = false;
  int id = 0;
  Vec3 pos;
};

/// Append-only event log. Events stay in memory (except pose frames) and are
/// optionally streamed as one JSON object per line.
class EventTrace {
 public:
  EventTrace() = default;
  explicit EventTrace(std::ostream* stream) : stream_(stream) {}

  void set_stream(std::ostream* stream) { stream_ = stream; }
  void emit(std::int64_t tick, EventKind kind, nlohmann::json data = nlohmann::json::object());
  void emit_poses(std::int64_t tick, const std::vector<PoseRecord>& poses);

  const std::vector<TraceEvent>& events() const { return events_; }
  std::size_t count(EventKind kind) const;

 private:
  std::vector<TraceEvent> events_;
  std::ostream* stream_ = nullptr;
  std::string buf_;
};

/// One parsed line of a trace file.
struct TraceLine {
  std::int64_t tick = 0;
  EventKind kind = EventKind::Meta;
  nlohmann::json data;
};

class TraceParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Streams a trace file line by line. Throws TraceParseError on malformed
/// lines, and on a missing meta header or summary footer.
void read_trace(std::istream& in, const std::function<void(const TraceLine&)>& visit);

std::string serialize(const TraceEvent& ev);

}  // namespace uavsched
