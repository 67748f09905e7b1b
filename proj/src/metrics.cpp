#include "uavsched/metrics.hpp"

#include <cstdio>
#include <istream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "uavsched/orders.hpp"
#include "uavsched/trace.hpp"

namespace uavsched {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string row(const MetricsReport& m, const std::string& seed) {
  return m.scheme + "," + std::to_string(m.n_uavs) + "," + std::to_string(m.delivered) + "," + fixed(m.score_sum, 3) +
         "," + fixed(m.score_mean, 3) + "," + fixed(m.agv_busy, 4) + "," + fixed(m.staff_busy, 4) + "," +
         std::to_string(m.deferrals) + "," + std::to_string(m.anomalies) + "," + seed;
}

}  // namespace

std::string csv_header() {
  return "scheme,n_uavs,delivered,score_sum,score_mean,agv_busy,staff_busy,deferrals,anomalies,seed";
}

std::string csv_row(const MetricsReport& m) { return row(m, std::to_string(m.seed)); }

std::string csv_mean_row(const MeanReport& m) {
  return m.scheme + "," + std::to_string(m.n_uavs) + "," + fixed(m.delivered, 3) + "," + fixed(m.score_sum, 3) + "," +
         fixed(m.score_mean, 3) + "," + fixed(m.agv_busy, 4) + "," + fixed(m.staff_busy, 4) + "," +
         fixed(m.deferrals, 1) + "," + fixed(m.anomalies, 1) + ",mean";
}

MeanReport mean_of(const std::vector<MetricsReport>& cells) {
  MeanReport m;
  if (cells.empty()) return m;
  m.scheme = cells.front().scheme;
  m.n_uavs = cells.front().n_uavs;
  m.cells = static_cast<int>(cells.size());
  for (const auto& c : cells) {
    m.delivered += static_cast<double>(c.delivered);
    m.score_sum += c.score_sum;
    m.score_mean += c.score_mean;
    m.agv_busy += c.agv_busy;
    m.staff_busy += c.staff_busy;
    m.deferrals += static_cast<double>(c.deferrals);
    m.anomalies += static_cast<double>(c.anomalies);
  }
  const double n = static_cast<double>(cells.size());
  m.delivered /= n;
  m.score_sum /= n;
  m.score_mean /= n;
  m.agv_busy /= n;
  m.staff_busy /= n;
  m.deferrals /= n;
  m.anomalies /= n;
  return m;
}

BusyRatios busy_ratios(std::istream& trace) {
  BusyRatios r;
  std::int64_t ticks = 0;
  std::int64_t n_agvs = 0;
  int n_staff = 0;
  // (start, end] service intervals per AGV.
  std::map<int, std::int64_t> open_agv;
  std::map<int, std::int64_t> open_staff;
  std::map<int, std::set<std::int64_t>> busy;  // agv -> busy ticks
  std::int64_t staff_busy = 0;

  read_trace(trace, [&](const TraceLine& l) {
    switch (l.kind) {
      case EventKind::Meta:
        n_agvs = l.data.at("n_agvs").get<std::int64_t>();
        n_staff = l.data.at("n_staff").get<int>();
        break;
      case EventKind::VehicleAdded:
        if (l.data.at("kind") == "agv") ++n_agvs;
        break;
      case EventKind::Poses:
        if (l.tick == 0) break;
        for (const auto& p : l.data.at("a")) busy[p.at(0).get<int>()].insert(l.tick);
        break;
      case EventKind::ServiceStart:
      case EventKind::ServiceEnd: {
        const auto kind = l.data.at("kind").get<std::string>();
        if (kind != "load" && kind != "swap") break;
        const int agv = l.data.at("agv").get<int>();
        const bool start = l.kind == EventKind::ServiceStart;
        if (start) {
          open_agv[agv] = l.tick;
          if (l.data.contains("staff")) open_staff[agv] = l.tick;
        } else {
          if (auto it = open_agv.find(agv); it != open_agv.end()) {
            for (std::int64_t t = it->second + 1; t <= l.tick; ++t) busy[agv].insert(t);
            open_agv.erase(it);
          }
          if (auto it = open_staff.find(agv); it != open_staff.end()) {
            staff_busy += l.tick - it->second;
            open_staff.erase(it);
          }
        }
        break;
      }
      case EventKind::Summary: ticks = l.data.at("ticks").get<std::int64_t>(); break;
      default: break;
    }
  });
  // Services still running at the end count up to the last tick.
  for (const auto& [agv, start] : open_agv)
    for (std::int64_t t = start + 1; t <= ticks; ++t) busy[agv].insert(t);
  for (const auto& [agv, start] : open_staff) staff_busy += ticks - start;

  for (const auto& [_, s] : busy) r.agv_busy_ticks += static_cast<std::int64_t>(s.size());
  r.agv_ticks = n_agvs * ticks;
  r.staff_busy_ticks = staff_busy;
  r.staff_ticks = static_cast<std::int64_t>(n_staff) * ticks;
  r.agv = r.agv_ticks > 0 ? static_cast<double>(r.agv_busy_ticks) / static_cast<double>(r.agv_ticks) : 0.0;
  r.staff = r.staff_ticks > 0 ? static_cast<double>(r.staff_busy_ticks) / static_cast<double>(r.staff_ticks) : 0.0;
  return r;
}

MetricsReport metrics_from_trace(std::istream& trace) {
  MetricsReport m;
  // Buffer the text so busy_ratios can make its own pass.
  std::string text((std::istreambuf_iterator<char>(trace)), std::istreambuf_iterator<char>());
  std::istringstream first(text);
  read_trace(first, [&](const TraceLine& l) {
    switch (l.kind) {
      case EventKind::Meta:
        m.scheme = l.data.at("scheme").get<std::string>();
        m.n_uavs = l.data.at("n_uavs").get<int>();
        m.seed = l.data.at("seed").get<std::uint64_t>();
        break;
      case EventKind::VehicleAdded:
        if (l.data.at("kind") == "uav") ++m.n_uavs;
        break;
      case EventKind::OrderDone:
        ++m.delivered;
        m.score_sum += score(l.data.at("better_t").get<double>(), l.data.at("timeout_t").get<double>(),
                             l.data.at("finish_t").get<double>());
        break;
      case EventKind::Deferral: m.deferrals += l.data.value("decisions", std::int64_t{1}); break;
      case EventKind::Approval: m.deferrals += l.data.value("deferrals_folded", std::int64_t{0}); break;
      case EventKind::Anomaly: ++m.anomalies; break;
      case EventKind::Violation: ++m.violations; break;
      case EventKind::Summary:
        m.orders_issued = l.data.at("orders_issued").get<std::int64_t>();
        break;
      default: break;
    }
  });
  m.undelivered = m.orders_issued - m.delivered;
  m.score_mean = m.delivered > 0 ? m.score_sum / static_cast<double>(m.delivered) : 0.0;
  std::istringstream second(text);
  const BusyRatios b = busy_ratios(second);
  m.agv_busy = b.agv;
  m.staff_busy = b.staff;
  return m;
}

}  // namespace uavsched
