#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "uavsched/domain.hpp"

namespace uavsched {

struct Order {
  OrderId id;
  StationId station;
  double order_t = 0.0;    // OrderT
  double better_t = 0.0;   // BetterT
  double timeout_t = 0.0;  // TimeOut
  std::optional<double> finish_t;

  friend bool operator==(const Order&, const Order&) = default;
};

/// Piecewise delivery score: 100 up to BetterT, linear down to 0 at TimeOut,
/// negative and unbounded after it.
double score(double better_t, double timeout_t, double finish_t);
/// Throws std::logic_error when the order has no finish time.
double score(const Order& order);

/// Homogeneous Poisson arrivals over [0, duration), stations uniform on 1..K.
std::vector<Order> generate_orders(double rate_per_s, double duration_s, int stations, double better_offset_s,
                                   double timeout_offset_s, std::uint64_t seed);

/// One record per line: id,station,order_t,better_t,timeout_t
void write_orders(std::ostream& out, const std::vector<Order>& orders);
std::vector<Order> read_orders(std::istream& in);
std::vector<Order> load_orders(const std::filesystem::path& path);

/// FIFO order queue owned by the master node.
class OrderQueue {
 public:
  OrderQueue() = default;
  explicit OrderQueue(std::vector<Order> orders);

  /// Moves orders with order_t <= now into the pending queue.
  void release_until(double now_s);
  /// Oldest pending order, removed from the queue.
  std::optional<Order> pop_oldest();
  std::size_t pending() const { return pending_.size(); }
  std::size_t unreleased() const { return future_.size() - next_; }
  const std::deque<Order>& pending_orders() const { return pending_; }

 private:
  std::vector<Order> future_;
  std::size_t next_ = 0;
  std::deque<Order> pending_;
};

/// Attaches the oldest pending orders, in turn, to the UAVs about to begin
/// cargo loading (given in the order loading starts).
std::vector<std::pair<OrderId, UavId>> assign_orders(OrderQueue& queue, const std::vector<UavId>& loading_uavs);

}  // namespace uavsched
