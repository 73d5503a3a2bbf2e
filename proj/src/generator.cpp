// SPDX-License-Identifier: Apache-2.0
#include "generator.hpp"

#include <cmath>

#include "error.hpp"
#include "random.hpp"

namespace tsc {

namespace {

constexpr double kSpacing = 300.0;  // geometry only; road lengths are independent

std::string real_name(int r, int c) { return "I_" + std::to_string(r) + "_" + std::to_string(c); }

std::vector<std::optional<Turn>> turn_lanes(int count) {
  int left = 1, straight = 1, right = 1;
  const Turn cycle[] = {Turn::Straight, Turn::Left, Turn::Right};
  for (int extra = 0; extra < count - 3; ++extra) {
    switch (cycle[extra % 3]) {
      case Turn::Straight: ++straight; break;
      case Turn::Left: ++left; break;
      case Turn::Right: ++right; break;
    }
  }
  std::vector<std::optional<Turn>> lanes;
  lanes.insert(lanes.end(), left, Turn::Left);
  lanes.insert(lanes.end(), straight, Turn::Straight);
  lanes.insert(lanes.end(), right, Turn::Right);
  return lanes;
}

}  // namespace

std::string generate_grid(const GridOptions& o) {
  if (o.rows < 1 || o.cols < 1) throw Error(ErrorCode::InvalidPlan, "rows and cols must be >= 1");
  if (o.min_lanes < 3 || o.max_lanes < o.min_lanes)
    throw Error(ErrorCode::InvalidPlan, "lane counts must satisfy 3 <= min_lanes <= max_lanes");
  if (!(o.min_length_m > 0) || o.max_length_m < o.min_length_m)
    throw Error(ErrorCode::InvalidPlan, "road lengths must satisfy 0 < min <= max");
  // a vehicle must not cross a whole road within one action interval
  if (o.min_length_m < o.sim.free_speed_mps * o.sim.action_interval_s)
    throw Error(ErrorCode::InvalidPlan, "roads shorter than free_speed * action_interval are not allowed");
  if (o.vehicles_per_hour < 0 || o.demand_duration_s < 0 || o.routes_per_entry < 1 || o.left_ratio < 0 ||
      o.right_ratio < 0 || o.left_ratio + o.right_ratio > 1 || o.jitter_fraction < 0 || o.jitter_fraction > 1)
    throw Error(ErrorCode::InvalidPlan, "flow plan out of range");

  Rng rng(o.seed);
  NetworkDesc desc;
  for (int r = 0; r < o.rows; ++r)
    for (int c = 0; c < o.cols; ++c)
      desc.intersections.push_back({real_name(r, c), IntersectionKind::Real, c * kSpacing, -r * kSpacing});

  // boundary virtual intersections, each attached to one real intersection
  struct Border {
    std::string name;
    std::string real;
  };
  std::vector<Border> borders;
  auto add_virtual = [&](std::string name, double x, double y, std::string real) {
    desc.intersections.push_back({name, IntersectionKind::Virtual, x, y});
    borders.push_back({std::move(name), std::move(real)});
  };
  for (int c = 0; c < o.cols; ++c) add_virtual("V_N_" + std::to_string(c), c * kSpacing, kSpacing, real_name(0, c));
  for (int c = 0; c < o.cols; ++c)
    add_virtual("V_S_" + std::to_string(c), c * kSpacing, -o.rows * kSpacing, real_name(o.rows - 1, c));
  for (int r = 0; r < o.rows; ++r) add_virtual("V_W_" + std::to_string(r), -kSpacing, -r * kSpacing, real_name(r, 0));
  for (int r = 0; r < o.rows; ++r)
    add_virtual("V_E_" + std::to_string(r), o.cols * kSpacing, -r * kSpacing, real_name(r, o.cols - 1));

  auto draw_lanes = [&]() {
    return o.min_lanes + static_cast<int>(rng.below(static_cast<std::uint64_t>(o.max_lanes - o.min_lanes + 1)));
  };
  auto draw_length = [&]() { return std::round(rng.uniform(o.min_length_m, o.max_length_m)); };
  auto add_road = [&](const std::string& from, const std::string& to, bool into_real) {
    NetworkDesc::RoadDesc road;
    road.name = "R_" + from + "_" + to;
    road.from = from;
    road.to = to;
    road.length_m = std::max(o.min_length_m, draw_length());
    const int lanes = draw_lanes();
    if (into_real) road.lanes = turn_lanes(lanes);
    else road.lanes.assign(static_cast<std::size_t>(lanes), std::nullopt);
    desc.roads.push_back(std::move(road));
  };

  for (int r = 0; r < o.rows; ++r) {
    for (int c = 0; c < o.cols; ++c) {
      if (c + 1 < o.cols) {
        add_road(real_name(r, c), real_name(r, c + 1), true);
        add_road(real_name(r, c + 1), real_name(r, c), true);
      }
      if (r + 1 < o.rows) {
        add_road(real_name(r, c), real_name(r + 1, c), true);
        add_road(real_name(r + 1, c), real_name(r, c), true);
      }
    }
  }
  for (const auto& b : borders) {
    add_road(b.name, b.real, true);
    add_road(b.real, b.name, false);
  }

  Scenario scenario;
  scenario.network = RoadNetwork::build(desc);
  scenario.seed = o.seed;
  scenario.sim = o.sim;
  const RoadNetwork& net = scenario.network;

  // Random-walk routes from every entry road.
  const std::size_t max_roads = static_cast<std::size_t>(4 * (o.rows + o.cols) + 4);
  auto walk = [&](int entry, bool straight_only) {
    std::vector<int> route{entry};
    while (net.is_real(net.road(route.back()).to)) {
      if (route.size() > max_roads) return std::vector<int>{};
      const auto& inter = net.intersection(net.road(route.back()).to);
      std::optional<int> pick[kTurnCount];
      for (int m : inter.movements) {
        const auto& mv = net.movement(m);
        if (mv.upstream_road == route.back()) pick[static_cast<int>(mv.turn)] = mv.downstream_road;
      }
      Turn t = Turn::Straight;
      if (!straight_only) {
        const double u = rng.uniform();
        if (u < o.left_ratio) t = Turn::Left;
        else if (u < o.left_ratio + o.right_ratio) t = Turn::Right;
      }
      if (!pick[static_cast<int>(t)]) t = Turn::Straight;
      route.push_back(*pick[static_cast<int>(t)]);
    }
    return route;
  };

  const double rate_per_route = o.vehicles_per_hour / o.routes_per_entry;
  for (const auto& road : net.roads()) {
    if (net.is_real(road.from)) continue;
    for (int k = 0; k < o.routes_per_entry; ++k) {
      std::vector<int> route;
      for (int attempt = 0; attempt < 8 && route.empty(); ++attempt) route = walk(road.id, false);
      if (route.empty()) route = walk(road.id, true);
      if (rate_per_route <= 0) continue;
      const double interval = 3600.0 / rate_per_route;
      const int count = static_cast<int>(std::floor(o.demand_duration_s / interval));
      const double offset = std::round(rng.uniform(0.0, interval));
      if (count < 1) continue;
      RouteSpec spec;
      spec.roads = std::move(route);
      spec.entry_time_s = o.demand_start_s + offset;
      spec.count = count;
      spec.interval_s = interval;
      spec.jitter_s = o.jitter_fraction * interval;
      scenario.routes.push_back(std::move(spec));
    }
  }
  return print_scenario(scenario);
}

}  // namespace tsc
