// SPDX-License-Identifier: Apache-2.0
#include "microsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"

namespace tsc {

const char* trace_kind_name(TraceKind kind) {
  switch (kind) {
    case TraceKind::Enter: return "enter";
    case TraceKind::Queue: return "queue";
    case TraceKind::Discharge: return "discharge";
    case TraceKind::Complete: return "complete";
  }
  return "?";
}

std::string format_trace_event(const RoadNetwork& net, const TraceEvent& e) {
  return std::to_string(e.tick) + "," + std::to_string(e.vehicle) + "," + trace_kind_name(e.kind) + "," +
         net.lane_name(e.lane);
}

Simulator::Simulator(const RoadNetwork& net, std::vector<RouteSpec> routes, SimSettings settings, std::uint64_t seed)
    : net_(&net), routes_(std::move(routes)), settings_(settings), rng_(seed) {
  for (const auto& road : net.roads()) {
    const double t = road.length_m / settings_.free_speed_mps;
    road_ticks_.push_back(std::max(1, static_cast<int>(std::ceil(t - 1e-9))));
  }
  lanes_.resize(net.lanes().size());
  for (const auto& lane : net.lanes()) {
    const double len = net.road(lane.road).length_m;
    lanes_[lane.id].capacity = std::max(1, static_cast<int>(std::floor(len / settings_.vehicle_spacing_m + 1e-9)));
  }
  signals_.resize(net.intersections().size());

  struct Entry {
    double time;
    int route;
    int k;
  };
  std::vector<Entry> entries;
  for (std::size_t r = 0; r < routes_.size(); ++r) {
    const auto& spec = routes_[r];
    for (int k = 0; k < spec.count; ++k) {
      double t = spec.entry_time_s + k * spec.interval_s;
      if (spec.jitter_s > 0) t += rng_.uniform(0.0, spec.jitter_s);
      entries.push_back({t, static_cast<int>(r), k});
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.time < b.time; });
  for (const auto& e : entries) {
    VehicleState v;
    v.id = static_cast<int>(vehicles_.size());
    v.route = e.route;
    v.entered_at_s = e.time;
    for (int road : routes_[e.route].roads) v.expected_free_travel_s += net.road(road).length_m / settings_.free_speed_mps;
    vehicles_.push_back(v);
  }
}

void Simulator::emit(TraceKind kind, int vehicle, int lane) {
  if (trace_) trace_(TraceEvent{clock_, vehicle, kind, lane});
}

int Simulator::pick_lane(const VehicleState& v, int road_index) const {
  const auto& roads = route_roads(v);
  const int road = roads[road_index];
  const std::vector<int>* candidates = &net_->road(road).lanes;
  if (road_index + 1 < static_cast<int>(roads.size())) {
    auto mv = net_->movement_between(road, roads[road_index + 1]);
    candidates = &net_->movement(*mv).in_lanes;
  }
  int best = -1;
  int best_free = 0;
  for (int lane : *candidates) {
    const int free = lanes_[lane].capacity - lane_vehicle_count(lane);
    if (free > best_free) {
      best = lane;
      best_free = free;
    }
  }
  return best;
}

void Simulator::enter_lane(VehicleState& v, int lane, int road_index) {
  v.cursor = road_index;
  v.lane = lane;
  v.status = VehicleStatus::Running;
  v.queue_at = clock_ + road_ticks_[route_roads(v)[road_index]];
  lanes_[lane].running.push_back(v.id);
  lanes_[lane].arrivals += 1;
}

void Simulator::set_phase(const SignalCommand& cmd) {
  if (cmd.intersection < 0 || cmd.intersection >= static_cast<int>(signals_.size()) ||
      !net_->is_real(cmd.intersection))
    throw Error(ErrorCode::PhaseNotAtIntersection, "intersection " + std::to_string(cmd.intersection) + " has no signal");
  const auto& phases = net_->intersection(cmd.intersection).phases;
  if (cmd.phase < 0 || cmd.phase >= static_cast<int>(phases.size()))
    throw Error(ErrorCode::PhaseNotAtIntersection,
                "phase " + std::to_string(cmd.phase) + " at intersection " + net_->intersection(cmd.intersection).name);
  if (clock_ % settings_.action_interval_s != 0)
    throw Error(ErrorCode::NotActionBoundary, "clock " + std::to_string(clock_));
  auto& sig = signals_[cmd.intersection];
  const int target = sig.all_red_remaining > 0 ? sig.pending : sig.active;
  if (cmd.phase == target) return;
  sig.pending = cmd.phase;
  if (settings_.all_red_s > 0) {
    sig.all_red_remaining = settings_.all_red_s;
  } else {
    sig.active = cmd.phase;
  }
}

void Simulator::tick() {
  // (1) release and inject
  while (next_release_ < vehicles_.size() && vehicles_[next_release_].entered_at_s <= static_cast<double>(clock_)) {
    vehicles_[next_release_].status = VehicleStatus::Pending;
    pending_.push_back(vehicles_[next_release_].id);
    ++released_;
    ++next_release_;
  }
  if (!pending_.empty()) {
    std::vector<int> still;
    for (int id : pending_) {
      auto& v = vehicles_[id];
      const int lane = pick_lane(v, 0);
      if (lane < 0) {
        still.push_back(id);
        continue;
      }
      enter_lane(v, lane, 0);
      emit(TraceKind::Enter, id, lane);
    }
    pending_.swap(still);
  }

  // (2) running vehicles reaching the stop line
  for (std::size_t lane = 0; lane < lanes_.size(); ++lane) {
    auto& ls = lanes_[lane];
    while (!ls.running.empty() && vehicles_[ls.running.front()].queue_at <= clock_) {
      auto& v = vehicles_[ls.running.front()];
      ls.running.pop_front();
      if (v.cursor + 1 == static_cast<int>(route_roads(v).size())) {
        v.status = VehicleStatus::Completed;
        v.completed_at_s = static_cast<double>(clock_);
        v.lane = -1;
        ++completed_;
        emit(TraceKind::Complete, v.id, static_cast<int>(lane));
      } else {
        v.status = VehicleStatus::Queued;
        ls.queue.push_back(v.id);
        emit(TraceKind::Queue, v.id, static_cast<int>(lane));
      }
    }
  }

  // (3) discharge under green
  const std::int64_t headway = static_cast<std::int64_t>(std::ceil(settings_.headway_s - 1e-9));
  for (const auto& inter : net_->intersections()) {
    if (inter.kind != IntersectionKind::Real) continue;
    auto& sig = signals_[inter.id];
    if (sig.all_red_remaining > 0) {
      if (--sig.all_red_remaining == 0) sig.active = sig.pending;
      continue;
    }
    const Phase& phase = inter.phases[sig.active];
    for (int m : inter.movements) {
      if (!phase.permits(m)) continue;
      for (int lane : net_->movement(m).in_lanes) {
        auto& ls = lanes_[lane];
        if (ls.queue.empty() || clock_ - ls.last_discharge < headway) continue;
        auto& v = vehicles_[ls.queue.front()];
        const int dest = pick_lane(v, v.cursor + 1);
        if (dest < 0) continue;  // spillback
        ls.queue.pop_front();
        ls.last_discharge = clock_;
        emit(TraceKind::Discharge, v.id, lane);
        enter_lane(v, dest, v.cursor + 1);
        emit(TraceKind::Enter, v.id, dest);
      }
    }
  }

  // (4) waiting
  for (auto& ls : lanes_)
    for (int id : ls.queue) vehicles_[id].wait_ticks += 1;

  // (5)
  ++clock_;
}

int Simulator::lane_vehicle_count(int lane) const {
  if (lane < 0 || lane >= static_cast<int>(lanes_.size()))
    throw Error(ErrorCode::UnknownEntity, "lane " + std::to_string(lane));
  return static_cast<int>(lanes_[lane].running.size() + lanes_[lane].queue.size());
}

int Simulator::lane_queue_length(int lane) const {
  if (lane < 0 || lane >= static_cast<int>(lanes_.size()))
    throw Error(ErrorCode::UnknownEntity, "lane " + std::to_string(lane));
  return static_cast<int>(lanes_[lane].queue.size());
}

int Simulator::lane_capacity(int lane) const {
  if (lane < 0 || lane >= static_cast<int>(lanes_.size()))
    throw Error(ErrorCode::UnknownEntity, "lane " + std::to_string(lane));
  return lanes_[lane].capacity;
}

const std::deque<int>& Simulator::lane_queue(int lane) const {
  if (lane < 0 || lane >= static_cast<int>(lanes_.size()))
    throw Error(ErrorCode::UnknownEntity, "lane " + std::to_string(lane));
  return lanes_[lane].queue;
}

double Simulator::movement_mean_count(int movement) const {
  const auto& mv = net_->movement(movement);
  double total = 0.0;
  for (int lane : mv.in_lanes) total += lane_vehicle_count(lane);
  return total / static_cast<double>(mv.in_lanes.size());
}

double Simulator::road_mean_count(int road) const {
  const auto& r = net_->road(road);
  double total = 0.0;
  for (int lane : r.lanes) total += lane_vehicle_count(lane);
  return total / static_cast<double>(r.lanes.size());
}

std::vector<int> Simulator::snapshot_arrivals() const {
  std::vector<int> out(net_->movements().size(), 0);
  for (const auto& mv : net_->movements())
    for (int lane : mv.in_lanes) out[mv.id] += lanes_[lane].arrivals;
  return out;
}

void Simulator::reset_arrivals() {
  for (auto& ls : lanes_) ls.arrivals = 0;
}

int Simulator::active_phase(int intersection) const {
  if (!net_->is_real(intersection))
    throw Error(ErrorCode::UnknownEntity, "intersection " + std::to_string(intersection) + " has no signal");
  return signals_[intersection].active;
}

int Simulator::all_red_remaining(int intersection) const {
  if (!net_->is_real(intersection))
    throw Error(ErrorCode::UnknownEntity, "intersection " + std::to_string(intersection) + " has no signal");
  return signals_[intersection].all_red_remaining;
}

}  // namespace tsc
