#include "uavsched/air_scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace uavsched {

namespace {
const std::vector<ArrivalEntry> kNoArrivals;
const std::vector<LandingEntry> kNoLandings;
}  // namespace

void ArrivalBook::book(StationId station, UavId uav, double arrival_s) {
  auto& v = by_station_[station];
  auto pos = std::upper_bound(v.begin(), v.end(), arrival_s,
                              [](double t, const ArrivalEntry& e) { return t < e.arrival_s; });
  v.insert(pos, ArrivalEntry{uav, arrival_s});
}

std::optional<ArrivalEntry> ArrivalBook::remove(StationId station, UavId uav) {
  auto it = by_station_.find(station);
  if (it == by_station_.end()) return std::nullopt;
  auto& v = it->second;
  auto pos = std::find_if(v.begin(), v.end(), [&](const ArrivalEntry& e) { return e.uav == uav; });
  if (pos == v.end()) return std::nullopt;
  ArrivalEntry out = *pos;
  v.erase(pos);
  return out;
}

const std::vector<ArrivalEntry>& ArrivalBook::entries(StationId station) const {
  auto it = by_station_.find(station);
  return it == by_station_.end() ? kNoArrivals : it->second;
}

std::size_t ArrivalBook::size() const {
  std::size_t n = 0;
  for (const auto& [_, v] : by_station_) n += v.size();
  return n;
}

void LandingBook::book(NodeId landing, const LandingEntry& entry) { by_point_[landing].push_back(entry); }

std::optional<LandingEntry> LandingBook::remove(UavId uav) {
  for (auto& [_, v] : by_point_) {
    auto pos = std::find_if(v.begin(), v.end(), [&](const LandingEntry& e) { return e.uav == uav; });
    if (pos != v.end()) {
      LandingEntry out = *pos;
      v.erase(pos);
      return out;
    }
  }
  return std::nullopt;
}

bool LandingBook::reassign(UavId uav, AgvId agv) {
  for (auto& [_, v] : by_point_)
    for (auto& e : v)
      if (e.uav == uav) {
        e.agv = agv;
        return true;
      }
  return false;
}

const std::vector<LandingEntry>& LandingBook::entries(NodeId landing) const {
  auto it = by_point_.find(landing);
  return it == by_point_.end() ? kNoLandings : it->second;
}

std::optional<std::pair<NodeId, LandingEntry>> LandingBook::for_agv(AgvId agv) const {
  for (const auto& [node, v] : by_point_)
    for (const auto& e : v)
      if (e.agv == agv) return std::pair{node, e};
  return std::nullopt;
}

std::optional<std::pair<NodeId, LandingEntry>> LandingBook::for_uav(UavId uav) const {
  for (const auto& [node, v] : by_point_)
    for (const auto& e : v)
      if (e.uav == uav) return std::pair{node, e};
  return std::nullopt;
}

std::size_t LandingBook::size() const {
  std::size_t n = 0;
  for (const auto& [_, v] : by_point_) n += v.size();
  return n;
}

AirScheduler::AirScheduler(const AirportLayout& layout, AirParams params) : layout_(&layout), params_(params) {}

TakeoffDecision AirScheduler::request_takeoff(const TakeoffRequest& req, NodeId takeoff) {
  if (!layout_->has_station(req.station)) throw UnknownStation(req.station);
  const Route& route = layout_->outbound_route(req.station, takeoff);
  TakeoffDecision d;
  d.flight_s = nominal_flight_time(route, params_.uav_speed_mps, params_.overhead_s);
  d.arrival_s = req.request_s + d.flight_s;
  for (const auto& e : arrivals_.entries(req.station)) {
    if (!(std::abs(d.arrival_s - e.arrival_s) > params_.go_gap_s)) {
      d.conflict = e;
      return d;
    }
  }
  d.approved = true;
  d.route = route;
  arrivals_.book(req.station, req.uav, d.arrival_s);
  return d;
}

ReturnDecision AirScheduler::request_return(const ReturnRequest& req, const std::vector<AgvEta>& agv_etas) {
  if (!layout_->has_station(req.station)) throw UnknownStation(req.station);
  ReturnDecision d;
  if (auto it = last_return_departure_.find(req.station); it != last_return_departure_.end()) {
    if (req.request_s - it->second < params_.station_departure_spacing_s) {
      d.reasons.push_back("station departure spacing");
      return d;
    }
  }

  struct Candidate {
    const AgvEta* eta;
    double flight_s;
    double land_s;
    std::size_t reservations;
  };
  std::optional<Candidate> best;
  for (const auto& eta : agv_etas) {
    const Route& route = layout_->return_route(req.station, eta.landing);
    const double flight = nominal_flight_time(route, params_.uav_speed_mps, params_.overhead_s);
    const double land = req.request_s + flight;
    std::ostringstream why;
    why << "landing " << eta.landing.value << " agv " << eta.agv.value << ": ";
    if (!(eta.eta_s < land)) {
      why << "agv eta " << eta.eta_s << " >= uav land " << land;
      d.reasons.push_back(why.str());
      continue;
    }
    if (!(land < eta.latest_s)) {
      why << "uav land " << land << " not before agv queued behind (" << eta.latest_s << ")";
      d.reasons.push_back(why.str());
      continue;
    }
    const auto& booked = landings_.entries(eta.landing);
    const auto clash = std::find_if(booked.begin(), booked.end(), [&](const LandingEntry& e) {
      return !(std::abs(e.uav_land_s - land) > params_.land_gap_s);
    });
    if (clash != booked.end()) {
      why << "landing window clash with uav " << clash->uav.value;
      d.reasons.push_back(why.str());
      continue;
    }
    Candidate c{&eta, flight, land, booked.size()};
    if (!best || c.reservations < best->reservations ||
        (c.reservations == best->reservations && c.eta->loop < best->eta->loop) ||
        (c.reservations == best->reservations && c.eta->loop == best->eta->loop && c.eta->eta_s < best->eta->eta_s))
      best = c;
  }
  if (!best) return d;

  d.approved = true;
  d.flight_s = best->flight_s;
  d.uav_land_s = best->land_s;
  d.landing = best->eta->landing;
  d.agv = best->eta->agv;
  d.loop = best->eta->loop;
  d.agv_land_s = best->eta->eta_s;
  d.route = layout_->return_route(req.station, best->eta->landing);
  landings_.book(best->eta->landing, LandingEntry{req.uav, best->eta->agv, best->eta->loop, best->land_s, best->eta->eta_s});
  last_return_departure_[req.station] = req.request_s;
  return d;
}

ArrivalReport AirScheduler::on_arrival(UavId uav, StationId station, double actual_s) {
  ArrivalReport r;
  r.actual_s = actual_s;
  if (auto e = arrivals_.remove(station, uav)) {
    r.booked = true;
    r.predicted_s = e->arrival_s;
    r.error_s = actual_s - e->arrival_s;
  }
  return r;
}

}  // namespace uavsched
