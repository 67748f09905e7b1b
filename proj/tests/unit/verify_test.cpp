#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "uavsched/trace.hpp"
#include "uavsched/verify.hpp"

using namespace uavsched;
using nlohmann::json;

namespace {

struct Lines {
  std::vector<std::string> v;

  explicit Lines(const std::string& text) {
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) v.push_back(l);
  }
  std::string text() const {
    std::string out;
    for (const auto& l : v) out += l + "\n";
    return out;
  }
  std::size_t find(const std::string& kind, std::size_t from = 0) const {
    for (std::size_t i = from; i < v.size(); ++i)
      if (json::parse(v[i]).at("k") == kind) return i;
    return v.size();
  }
  json at(std::size_t i) const { return json::parse(v[i]); }
  void insert_after(std::size_t i, const json& j) { v.insert(v.begin() + static_cast<long>(i) + 1, j.dump()); }
};

const std::string& clean_trace() {
  static const std::string t = testing::run_trace(testing::short_config(Scheme::OneCycle, 6, 900));
  return t;
}

VerifyReport check(const std::string& text) {
  std::istringstream in(text);
  return verify_trace(in);
}

}  // namespace

TEST_SUITE("verify") {
  TEST_CASE("clean run verifies") {
    const VerifyReport r = check(clean_trace());
    CHECK(r.ok());
    CHECK(r.arrivals > 0);
    CHECK(r.landings > 0);
    CHECK(r.min_arrival_gap_s > 30.0 - 0.2);
    CHECK(r.min_uav_distance_m >= 5.0);
    CHECK(format_report(r).find("OK") != std::string::npos);
  }

  TEST_CASE("injected arrival inside the gap") {
    Lines l(clean_trace());
    const std::size_t i = l.find("arrival");
    REQUIRE(i < l.v.size());
    json dup = l.at(i);
    dup["uav"] = dup["uav"].get<int>() % 6 + 1;
    l.insert_after(i, dup);
    const VerifyReport r = check(l.text());
    CHECK(r.count("arrival_gap") >= 1);
    CHECK_FALSE(r.ok());
  }

  TEST_CASE("landing on an AGV that is elsewhere") {
    Lines l(clean_trace());
    const std::size_t i = l.find("landing");
    REQUIRE(i < l.v.size());
    json j = l.at(i);
    j["agv"] = j["agv"].get<int>() % 6 + 1;
    l.v[i] = j.dump();
    const VerifyReport r = check(l.text());
    CHECK(r.count("landing_agv") + r.count("landing_unreserved") >= 1);
  }

  TEST_CASE("two AGVs parked on one node") {
    Lines l(clean_trace());
    const std::size_t meta = l.find("meta");
    const json m = l.at(meta);
    // AGV 2 reports arriving at AGV 1's starting node at tick 0.
    json j{{"k", "agv_arrive"}, {"t", 0}, {"agv", 2}, {"node", m["agvs"][0]["node"]}};
    l.insert_after(meta, j);
    CHECK(check(l.text()).count("node_occupancy") >= 1);
  }

  TEST_CASE("illegal FSM edge") {
    Lines l(clean_trace());
    const std::size_t meta = l.find("meta");
    l.insert_after(meta, json{{"k", "transition"}, {"t", 0}, {"m", "uav"}, {"id", 1}, {"from", "Ready"},
                              {"to", "Flying_Back"}, {"cause", "test"}});
    CHECK(check(l.text()).count("fsm_edge") == 1);
  }

  TEST_CASE("UAVs closer than the minimum") {
    Lines l(clean_trace());
    // Find a pose frame with an airborne UAV and put a second UAV 3 m away.
    for (std::size_t i = 0; i < l.v.size(); ++i) {
      json j = json::parse(l.v[i]);
      if (j["k"] != "poses" || !j.contains("u")) continue;
      for (const auto& p : j["u"]) {
        if (p[3].get<double>() < 20.0) continue;
        const int other = p[0].get<int>() % 6 + 1;
        j["u"].push_back(json::array({other, p[1].get<double>() + 3.0, p[2].get<double>(), p[3].get<double>()}));
        l.v[i] = j.dump();
        const VerifyReport r = check(l.text());
        CHECK(r.count("uav_distance") >= 1);
        CHECK(r.min_uav_distance_m < 5.0);
        return;
      }
    }
    FAIL("no airborne pose frame found");
  }

  TEST_CASE("summary must match the deliveries") {
    Lines l(clean_trace());
    json s = l.at(l.v.size() - 1);
    REQUIRE(s["k"] == "summary");
    s["delivered"] = s["delivered"].get<int>() + 1;
    l.v.back() = s.dump();
    CHECK(check(l.text()).count("summary_mismatch") == 1);
  }

  TEST_CASE("malformed input") {
    Lines l(clean_trace());
    l.v.pop_back();
    CHECK_THROWS_AS(check(l.text()), TraceParseError);

    std::string cut = clean_trace();
    cut.resize(cut.size() / 2);
    CHECK_THROWS_AS(check(cut), TraceParseError);
    CHECK_THROWS_AS(check(""), TraceParseError);
    CHECK_THROWS_AS(check("{\"k\":\"arrival\",\"t\":0}\n"), TraceParseError);
  }
}
