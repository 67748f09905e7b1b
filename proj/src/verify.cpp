#include "uavsched/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <utility>

#include "uavsched/trace.hpp"

namespace uavsched {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMotionEps = 1e-5;  // poses are written with 6 decimals
constexpr double kAirborneZ = 1e-6;

// Legal state changes, transcribed from the two machines' narratives.
const std::set<std::pair<std::string, std::string>>& uav_edges() {
  static const std::set<std::pair<std::string, std::string>> e{
      {"Ready", "On_Car"},           {"On_Car", "Waitting_Go"},         {"On_Car", "Ready"},
      {"Waitting_Go", "Flying_Go"},  {"Flying_Go", "Waitting_Back"},    {"Waitting_Back", "Flying_Back"},
      {"Flying_Back", "On_Car"},
  };
  return e;
}

const std::set<std::pair<std::string, std::string>>& agv_edges() {
  static const std::set<std::pair<std::string, std::string>> e{
      {"Waitting_Pickup", "Waitting_Working"}, {"Waitting_Pickup", "Waitting_Go_GW"},
      {"Waitting_Go_GW", "Waitting_Working"},  {"Waitting_Go_GW", "Waitting_Pickup"},
      {"Waitting_Working", "Waitting_Go_AW"},  {"Waitting_Working", "Waitting_Pickup"},
      {"Waitting_Go_AW", "Waitting_Pickup"},
  };
  return e;
}

using P3 = std::array<double, 3>;

P3 point(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

double dist(const P3& a, const P3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

class Checker {
 public:
  explicit Checker(VerifyReport& r) : r_(r) {
    r_.min_arrival_gap_s = kInf;
    r_.min_uav_distance_m = kInf;
    r_.min_agv_distance_m = kInf;
  }

  void visit(const TraceLine& l) {
    ++r_.lines;
    if (l.tick < last_tick_) flag("tick_order", l.tick, "tick " + std::to_string(l.tick) + " after " + std::to_string(last_tick_));
    last_tick_ = std::max(last_tick_, l.tick);
    const json& d = l.data;
    switch (l.kind) {
      case EventKind::Meta: meta(d); break;
      case EventKind::Poses: poses(l.tick, d); break;
      case EventKind::Transition: transition(l.tick, d); break;
      case EventKind::Arrival: arrival(l.tick, d); break;
      case EventKind::Landing: landing(l.tick, d); break;
      case EventKind::Approval: approval(d); break;
      case EventKind::AgvArrive: agv_arrive(l.tick, d); break;
      case EventKind::AgvDepart: agv_depart(d); break;
      case EventKind::OrderDone: ++delivered_; break;
      case EventKind::VehicleAdded: added(d); break;
      case EventKind::Violation: flag("engine_reported", l.tick, d.dump()); break;
      case EventKind::Summary: summary(l.tick, d); break;
      default: break;
    }
  }

 private:
  void flag(std::string kind, std::int64_t tick, std::string detail) {
    r_.violations.push_back({std::move(kind), tick, std::move(detail)});
  }

  void meta(const json& d) {
    dt_ = d.at("dt_s").get<double>();
    go_gap_ = d.at("go_gap_s").get<double>();
    min_uav_ = d.at("min_dist_uav_m").get<double>();
    min_agv_ = d.at("min_dist_agv_m").get<double>();
    uav_step_ = d.at("uav_max_mps").get<double>() * dt_ + kMotionEps;
    agv_step_ = d.at("agv_max_mps").get<double>() * dt_ + kMotionEps;
    for (const auto& u : d.at("uavs")) {
      const int id = u.at("id").get<int>();
      uav_pos_[id] = point(u.at("pos_m"));
      uav_state_[id] = u.at("state").get<std::string>();
    }
    for (const auto& a : d.at("agvs")) {
      const int id = a.at("id").get<int>();
      agv_pos_[id] = point(a.at("pos_m"));
      agv_state_[id] = a.at("state").get<std::string>();
    }
  }

  void added(const json& d) {
    const int id = d.at("id").get<int>();
    if (d.at("kind") == "uav") {
      uav_pos_[id] = point(d.at("pos_m"));
      uav_state_[id] = d.at("state").get<std::string>();
    } else {
      agv_pos_[id] = point(d.at("pos_m"));
      agv_state_[id] = d.at("state").get<std::string>();
    }
  }

  void poses(std::int64_t tick, const json& d) {
    ++r_.pose_frames;
    std::vector<int> moved_u;
    std::vector<int> moved_a;
    if (d.contains("u"))
      for (const auto& p : d.at("u")) {
        const int id = p.at(0).get<int>();
        const P3 to{p.at(1).get<double>(), p.at(2).get<double>(), p.at(3).get<double>()};
        auto it = uav_pos_.find(id);
        if (it == uav_pos_.end()) {
          flag("unknown_vehicle", tick, "uav " + std::to_string(id));
          continue;
        }
        const double step = dist(it->second, to);
        if (tick > 0 && step > uav_step_)
          flag("motion_bound", tick, "uav " + std::to_string(id) + " moved " + fmt(step) + " m in one tick");
        it->second = to;
        moved_u.push_back(id);
      }
    if (d.contains("a"))
      for (const auto& p : d.at("a")) {
        const int id = p.at(0).get<int>();
        const P3 to{p.at(1).get<double>(), p.at(2).get<double>(), p.at(3).get<double>()};
        auto it = agv_pos_.find(id);
        if (it == agv_pos_.end()) {
          flag("unknown_vehicle", tick, "agv " + std::to_string(id));
          continue;
        }
        const double step = dist(it->second, to);
        if (tick > 0 && step > agv_step_)
          flag("motion_bound", tick, "agv " + std::to_string(id) + " moved " + fmt(step) + " m in one tick");
        it->second = to;
        moved_a.push_back(id);
      }
    separation(tick, moved_u, uav_pos_, true);
    separation(tick, moved_a, agv_pos_, false);
  }

  // Pairs involving a moved vehicle; a pair is reported when it first comes
  // closer than the minimum, not on every tick it stays close.
  void separation(std::int64_t tick, const std::vector<int>& moved, const std::map<int, P3>& pos, bool uav) {
    const double min_d = uav ? min_uav_ : min_agv_;
    auto& close = uav ? close_uav_ : close_agv_;
    double& seen = uav ? r_.min_uav_distance_m : r_.min_agv_distance_m;
    for (int id : moved) {
      const P3& p = pos.at(id);
      for (const auto& [other, q] : pos) {
        if (other == id) continue;
        const auto key = std::minmax(id, other);
        if (uav && (p[2] <= kAirborneZ || q[2] <= kAirborneZ)) {
          close.erase(key);
          continue;
        }
        const double dd = dist(p, q);
        seen = std::min(seen, dd);
        if (dd < min_d) {
          if (close.insert(key).second)
            flag(uav ? "uav_distance" : "agv_distance", tick,
                 std::string(uav ? "uav " : "agv ") + std::to_string(key.first) + " and " +
                     std::to_string(key.second) + " at " + fmt(dd) + " m");
        } else {
          close.erase(key);
        }
      }
    }
  }

  void transition(std::int64_t tick, const json& d) {
    ++r_.transitions;
    const bool is_uav = d.at("m") == "uav";
    const int id = d.at("id").get<int>();
    const auto from = d.at("from").get<std::string>();
    const auto to = d.at("to").get<std::string>();
    auto& states = is_uav ? uav_state_ : agv_state_;
    const std::string who = std::string(is_uav ? "uav " : "agv ") + std::to_string(id);
    auto it = states.find(id);
    if (it == states.end()) {
      flag("unknown_vehicle", tick, who);
      return;
    }
    if (it->second != from) flag("fsm_continuity", tick, who + " left " + from + " while in " + it->second);
    const auto& edges = is_uav ? uav_edges() : agv_edges();
    if (!edges.count({from, to})) flag("fsm_edge", tick, who + " " + from + " -> " + to);
    it->second = to;
  }

  void arrival(std::int64_t tick, const json& d) {
    ++r_.arrivals;
    const int station = d.at("station").get<int>();
    auto it = last_arrival_.find(station);
    if (it != last_arrival_.end()) {
      const double gap = static_cast<double>(tick - it->second) * dt_;
      r_.min_arrival_gap_s = std::min(r_.min_arrival_gap_s, gap);
      if (!(gap > go_gap_ - 2 * dt_))
        flag("arrival_gap", tick, "station " + std::to_string(station) + " arrivals " + fmt(gap) + " s apart (uav " +
                                      std::to_string(d.at("uav").get<int>()) + ")");
    }
    last_arrival_[station] = tick;
  }

  void approval(const json& d) {
    const auto dir = d.at("dir").get<std::string>();
    if (dir == "back") reserved_[d.at("uav").get<int>()] = d.at("agv").get<int>();
    else if (dir == "reassign") reserved_[d.at("uav").get<int>()] = d.at("to").get<int>();
  }

  void landing(std::int64_t tick, const json& d) {
    ++r_.landings;
    const int uav = d.at("uav").get<int>();
    const int agv = d.at("agv").get<int>();
    const int node = d.at("node").get<int>();
    auto at = agv_node_.find(agv);
    if (at == agv_node_.end() || at->second != node || arrive_tick_[agv] > tick)
      flag("landing_agv", tick, "uav " + std::to_string(uav) + " landed at node " + std::to_string(node) +
                                    " without agv " + std::to_string(agv) + " present");
    auto res = reserved_.find(uav);
    if (res == reserved_.end() || res->second != agv)
      flag("landing_unreserved", tick,
           "uav " + std::to_string(uav) + " landed on agv " + std::to_string(agv) + ", reserved " +
               (res == reserved_.end() ? std::string("none") : std::to_string(res->second)));
    if (res != reserved_.end()) reserved_.erase(res);
  }

  void agv_arrive(std::int64_t tick, const json& d) {
    const int agv = d.at("agv").get<int>();
    const int node = d.at("node").get<int>();
    auto holder = node_holder_.find(node);
    if (holder != node_holder_.end() && holder->second != agv)
      flag("node_occupancy", tick, "agv " + std::to_string(agv) + " stopped at node " + std::to_string(node) +
                                       " held by agv " + std::to_string(holder->second));
    node_holder_[node] = agv;
    agv_node_[agv] = node;
    arrive_tick_[agv] = tick;
  }

  void agv_depart(const json& d) {
    const int agv = d.at("agv").get<int>();
    const int node = d.at("node").get<int>();
    auto holder = node_holder_.find(node);
    if (holder != node_holder_.end() && holder->second == agv) node_holder_.erase(holder);
    agv_node_.erase(agv);
  }

  void summary(std::int64_t tick, const json& d) {
    if (d.contains("delivered") && d.at("delivered").get<std::int64_t>() != delivered_)
      flag("summary_mismatch", tick, "summary delivered " + d.at("delivered").dump() + ", order_done records " +
                                         std::to_string(delivered_));
  }

  VerifyReport& r_;
  double dt_ = 0.1;
  double go_gap_ = 0.0;
  double min_uav_ = 0.0;
  double min_agv_ = 0.0;
  double uav_step_ = kInf;
  double agv_step_ = kInf;
  std::int64_t last_tick_ = 0;
  std::int64_t delivered_ = 0;

  std::map<int, P3> uav_pos_;
  std::map<int, P3> agv_pos_;
  std::map<int, std::string> uav_state_;
  std::map<int, std::string> agv_state_;
  std::set<std::pair<int, int>> close_uav_;
  std::set<std::pair<int, int>> close_agv_;
  std::map<int, std::int64_t> last_arrival_;
  std::map<int, int> reserved_;     // uav -> agv
  std::map<int, int> node_holder_;  // node -> agv stopped there
  std::map<int, int> agv_node_;     // agv -> node it is stopped at
  std::map<int, std::int64_t> arrive_tick_;
};

}  // namespace

std::size_t VerifyReport::count(const std::string& kind) const {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(), [&](const TraceViolation& v) { return v.kind == kind; }));
}

VerifyReport verify_trace(std::istream& in) {
  VerifyReport r;
  Checker c(r);
  std::int64_t line = 0;
  read_trace(in, [&](const TraceLine& l) {
    ++line;
    try {
      c.visit(l);
    } catch (const nlohmann::json::exception& e) {
      throw TraceParseError("line " + std::to_string(line) + ": " + e.what());
    }
  });
  return r;
}

VerifyReport verify_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceParseError("cannot open " + path);
  return verify_trace(in);
}

std::string format_report(const VerifyReport& r) {
  std::ostringstream os;
  for (const auto& v : r.violations) os << "VIOLATION " << v.kind << " t=" << v.tick << " " << v.detail << "\n";
  os << (r.ok() ? "OK" : "FAIL") << " lines=" << r.lines << " arrivals=" << r.arrivals << " landings=" << r.landings
     << " transitions=" << r.transitions << " violations=" << r.violations.size()
     << " min_arrival_gap_s=" << fmt(r.min_arrival_gap_s) << " min_uav_m=" << fmt(r.min_uav_distance_m)
     << " min_agv_m=" << fmt(r.min_agv_distance_m) << "\n";
  return os.str();
}

}  // namespace uavsched
