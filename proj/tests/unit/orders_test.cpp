#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "uavsched/orders.hpp"

using namespace uavsched;

TEST_SUITE("orders") {
  TEST_CASE("score branches") {
    CHECK(score(600, 1200, 600) == 100.0);
    CHECK(score(600, 1200, 100) == 100.0);
    CHECK(score(600, 1200, 900) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(score(600, 1200, 1200) == 0.0);
    CHECK(score(600, 1200, 1800) == doctest::Approx(-100.0).epsilon(1e-12));
    CHECK(score(600, 1200, 2400) == doctest::Approx(-200.0).epsilon(1e-12));
  }

  TEST_CASE("score is continuous at both branch boundaries") {
    for (double eps : {1e-6, 1e-9, 1e-12}) {
      CHECK(std::abs(score(600, 1200, 600 + eps) - 100.0) < 1e-9 + 100.0 * eps / 600.0);
      CHECK(std::abs(score(600, 1200, 1200 - eps)) < 1e-9 + 100.0 * eps / 600.0);
      CHECK(std::abs(score(600, 1200, 1200 + eps)) < 1e-9 + 100.0 * eps / 600.0);
    }
  }

  TEST_CASE("score of an order needs a finish time") {
    Order o{OrderId{1}, StationId{1}, 0, 300, 900, std::nullopt};
    CHECK_THROWS_AS(score(o), std::logic_error);
    o.finish_t = 600;
    CHECK(score(o) == doctest::Approx(50.0));
  }

  TEST_CASE("Poisson arrivals match the rate within 4 sigma") {
    const auto orders = generate_orders(0.05, 3600, 4, 300, 900, 12345);
    const double mean = 0.05 * 3600;
    CHECK(std::abs(static_cast<double>(orders.size()) - mean) <= 4.0 * std::sqrt(mean));
    double prev = 0.0;
    std::set<int> stations;
    for (const auto& o : orders) {
      CHECK(o.order_t >= prev);
      CHECK(o.order_t < 3600.0);
      CHECK(o.station.value >= 1);
      CHECK(o.station.value <= 4);
      stations.insert(o.station.value);
      prev = o.order_t;
    }
    CHECK(stations.size() == 4);
  }

  TEST_CASE("generation is seeded") {
    CHECK(generate_orders(0.05, 3600, 4, 300, 900, 7) == generate_orders(0.05, 3600, 4, 300, 900, 7));
    CHECK(generate_orders(0.05, 3600, 4, 300, 900, 7) != generate_orders(0.05, 3600, 4, 300, 900, 8));
  }

  TEST_CASE("service windows come from the offsets") {
    for (const auto& o : generate_orders(0.05, 3600, 4, 300, 900, 3)) {
      CHECK(o.timeout_t - o.better_t == doctest::Approx(600.0));
      CHECK(o.better_t - o.order_t == doctest::Approx(300.0));
    }
    CHECK_THROWS_AS(generate_orders(0.05, 3600, 4, 900, 300, 3), std::invalid_argument);
    CHECK_THROWS_AS(generate_orders(0.0, 3600, 4, 300, 900, 3), std::invalid_argument);
  }

  TEST_CASE("order files round-trip") {
    const auto orders = generate_orders(0.02, 1800, 3, 300, 900, 11);
    std::stringstream ss;
    write_orders(ss, orders);
    CHECK(read_orders(ss) == orders);

    std::istringstream bad("1,2,10,5,20\n");
    CHECK_THROWS_AS(read_orders(bad), std::runtime_error);
    std::istringstream short_line("# header\n1,2,10\n");
    CHECK_THROWS_AS(read_orders(short_line), std::runtime_error);
  }

  TEST_CASE("FIFO queue and assignment") {
    const std::vector<Order> list{{OrderId{1}, StationId{1}, 5, 305, 905, {}},
                                  {OrderId{2}, StationId{2}, 10, 310, 910, {}},
                                  {OrderId{3}, StationId{1}, 15, 315, 915, {}}};
    OrderQueue q(list);
    CHECK(q.pending() == 0);
    q.release_until(4.9);
    CHECK(q.pending() == 0);

    SUBCASE("no pending orders, nothing assigned") { CHECK(assign_orders(q, {UavId{1}}).empty()); }
    SUBCASE("oldest order goes first") {
      q.release_until(10.0);
      CHECK(q.pending() == 2);
      const auto a = assign_orders(q, {UavId{4}});
      REQUIRE(a.size() == 1);
      CHECK(a[0].first == OrderId{1});
      CHECK(a[0].second == UavId{4});
    }
    SUBCASE("sequential loads preserve the station sequence") {
      q.release_until(100.0);
      std::vector<int> seq;
      for (int u = 1; u <= 3; ++u) {
        const auto a = assign_orders(q, {UavId{u}});
        REQUIRE(a.size() == 1);
        seq.push_back(list[static_cast<std::size_t>(a[0].first.value - 1)].station.value);
      }
      CHECK(seq == std::vector<int>{1, 2, 1});
      CHECK(q.unreleased() == 0);
      CHECK(q.pending() == 0);
    }
  }
}
