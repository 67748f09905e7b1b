#include "uavsched/trace.hpp"

#include <array>
#include <cstdio>
#include <istream>
#include <ostream>
#include <utility>

namespace uavsched {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 22> kNames{{
    {EventKind::Meta, "meta"},
    {EventKind::Transition, "transition"},
    {EventKind::Command, "command"},
    {EventKind::Replaced, "replaced"},
    {EventKind::DeadLetter, "dead_letter"},
    {EventKind::Rejected, "rejected"},
    {EventKind::Approval, "approval"},
    {EventKind::Deferral, "deferral"},
    {EventKind::ServiceStart, "service_start"},
    {EventKind::ServiceEnd, "service_end"},
    {EventKind::Arrival, "arrival"},
    {EventKind::BookingClosed, "booking_closed"},
    {EventKind::Landing, "landing"},
    {EventKind::AgvArrive, "agv_arrive"},
    {EventKind::AgvDepart, "agv_depart"},
    {EventKind::OrderDone, "order_done"},
    {EventKind::Violation, "violation"},
    {EventKind::Anomaly, "anomaly"},
    {EventKind::Halt, "halt"},
    {EventKind::VehicleAdded, "vehicle_added"},
    {EventKind::Poses, "poses"},
    {EventKind::Summary, "summary"},
}};

}  // namespace

std::string_view to_string(EventKind k) {
  for (const auto& [kind, name] : kNames)
    if (kind == k) return name;
  return "?";
}

EventKind parse_event_kind(std::string_view s) {
  for (const auto& [kind, name] : kNames)
    if (name == s) return kind;
  throw TraceParseError("unknown event kind '" + std::string(s) + "'");
}

std::string serialize(const TraceEvent& ev) {
  nlohmann::json line = ev.data;
  line["t"] = ev.tick;
  line["k"] = std::string(to_string(ev.kind));
  return line.dump();
}

void EventTrace::emit(std::int64_t tick, EventKind kind, nlohmann::json data) {
  events_.push_back({tick, kind, std::move(data)});
  if (stream_) *stream_ << serialize(events_.back()) << '\n';
}

void EventTrace::emit_poses(std::int64_t tick, const std::vector<PoseRecord>& poses) {
  if (!stream_ || poses.empty()) return;
  buf_.clear();
  buf_ += "{\"k\":\"poses\",\"t\":";
  buf_ += std::to_string(tick);
  char tmp[96];
  for (int pass = 0; pass < 2; ++pass) {
    const bool uav = pass == 0;
    buf_ += uav ? ",\"u\":[" : ",\"a\":[";
    bool first = true;
    for (const auto& p : poses) {
      if (p.is_uav != uav) continue;
      std::snprintf(tmp, sizeof tmp, "%s[%d,%.6f,%.6f,%.6f]", first ? "" : ",", p.id, p.pos.x, p.pos.y, p.pos.z);
      buf_ += tmp;
      first = false;
    }
    buf_ += ']';
  }
  buf_ += "}\n";
  *stream_ << buf_;
}

std::size_t EventTrace::count(EventKind kind) const {
  std::size_t n = 0;
  for (const auto& e : events_)
    if (e.kind == kind) ++n;
  return n;
}

void read_trace(std::istream& in, const std::function<void(const TraceLine&)>& visit) {
  std::string text;
  std::int64_t lineno = 0;
  bool saw_meta = false;
  bool saw_summary = false;
  std::int64_t last_tick = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.empty()) continue;
    if (saw_summary) throw TraceParseError("line " + std::to_string(lineno) + ": data after summary");
    TraceLine line;
    try {
      line.data = nlohmann::json::parse(text);
      line.tick = line.data.at("t").get<std::int64_t>();
      line.kind = parse_event_kind(line.data.at("k").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw TraceParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!saw_meta && line.kind != EventKind::Meta)
      throw TraceParseError("line " + std::to_string(lineno) + ": trace must start with a meta record");
    if (line.tick < last_tick) throw TraceParseError("line " + std::to_string(lineno) + ": tick decreased");
    last_tick = line.tick;
    saw_meta = true;
    if (line.kind == EventKind::Summary) saw_summary = true;
    visit(line);
  }
  if (!saw_meta) throw TraceParseError("empty trace");
  if (!saw_summary) throw TraceParseError("truncated trace: no summary record");
}

}  // namespace uavsched
