#include "uavsched/orders.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace uavsched {

double score(double better_t, double timeout_t, double finish_t) {
  const double window = timeout_t - better_t;
  if (finish_t <= better_t) return 100.0;
  if (finish_t <= timeout_t) return 100.0 * (timeout_t - finish_t) / window;
  return -100.0 * (finish_t - timeout_t) / window;
}

double score(const Order& order) {
  if (!order.finish_t) throw std::logic_error("score: order " + std::to_string(order.id.value) + " not delivered");
  return score(order.better_t, order.timeout_t, *order.finish_t);
}

std::vector<Order> generate_orders(double rate_per_s, double duration_s, int stations, double better_offset_s,
                                   double timeout_offset_s, std::uint64_t seed) {
  if (!(rate_per_s > 0.0)) throw std::invalid_argument("generate_orders: rate must be positive");
  if (stations < 1) throw std::invalid_argument("generate_orders: need at least one station");
  if (!(timeout_offset_s > better_offset_s) || better_offset_s < 0.0)
    throw std::invalid_argument("generate_orders: need 0 <= better offset < timeout offset");

  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(rate_per_s);
  std::uniform_int_distribution<int> station(1, stations);
  std::vector<Order> out;
  double t = gap(rng);
  while (t < duration_s) {
    Order o;
    o.id = OrderId{static_cast<int>(out.size()) + 1};
    o.station = StationId{station(rng)};
    o.order_t = t;
    o.better_t = t + better_offset_s;
    o.timeout_t = t + timeout_offset_s;
    out.push_back(o);
    t += gap(rng);
  }
  return out;
}

void write_orders(std::ostream& out, const std::vector<Order>& orders) {
  out.precision(17);
  for (const auto& o : orders)
    out << o.id.value << ',' << o.station.value << ',' << o.order_t << ',' << o.better_t << ',' << o.timeout_t << '\n';
}

std::vector<Order> read_orders(std::istream& in) {
  std::vector<Order> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    Order o;
    int id = 0, st = 0;
    if (!(ss >> id >> st >> o.order_t >> o.better_t >> o.timeout_t))
      throw std::runtime_error("order file line " + std::to_string(lineno) + ": expected 5 fields");
    if (!(o.order_t <= o.better_t && o.better_t < o.timeout_t))
      throw std::runtime_error("order file line " + std::to_string(lineno) + ": need order_t <= better_t < timeout_t");
    o.id = OrderId{id};
    o.station = StationId{st};
    out.push_back(o);
  }
  std::stable_sort(out.begin(), out.end(), [](const Order& a, const Order& b) { return a.order_t < b.order_t; });
  return out;
}

std::vector<Order> load_orders(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open order file " + path.string());
  return read_orders(in);
}

OrderQueue::OrderQueue(std::vector<Order> orders) : future_(std::move(orders)) {
  std::stable_sort(future_.begin(), future_.end(), [](const Order& a, const Order& b) { return a.order_t < b.order_t; });
}

void OrderQueue::release_until(double now_s) {
  while (next_ < future_.size() && future_[next_].order_t <= now_s) pending_.push_back(future_[next_++]);
}

std::optional<Order> OrderQueue::pop_oldest() {
  if (pending_.empty()) return std::nullopt;
  Order o = pending_.front();
  pending_.pop_front();
  return o;
}

std::vector<std::pair<OrderId, UavId>> assign_orders(OrderQueue& queue, const std::vector<UavId>& loading_uavs) {
  std::vector<std::pair<OrderId, UavId>> out;
  for (UavId u : loading_uavs) {
    auto o = queue.pop_oldest();
    if (!o) break;
    out.emplace_back(o->id, u);
  }
  return out;
}

}  // namespace uavsched
