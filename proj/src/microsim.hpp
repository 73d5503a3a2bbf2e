// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "random.hpp"
#include "roadnet.hpp"

namespace tsc {

enum class VehicleStatus { Scheduled, Pending, Running, Queued, Completed };

struct VehicleState {
  int id = 0;
  int route = 0;   // index into the simulator's route list
  int cursor = 0;  // index of the current road within the route
  int lane = -1;   // -1 while scheduled or pending
  VehicleStatus status = VehicleStatus::Scheduled;
  std::int64_t queue_at = 0;  // tick at which a running vehicle reaches the stop line
  double entered_at_s = 0.0;  // scheduled entry time; travel time counts from here
  std::optional<double> completed_at_s;
  int wait_ticks = 0;
  double expected_free_travel_s = 0.0;

  bool operator==(const VehicleState&) const = default;
};

struct SignalCommand {
  int intersection = 0;
  int phase = 0;
};

enum class TraceKind { Enter, Queue, Discharge, Complete };

struct TraceEvent {
  std::int64_t tick = 0;
  int vehicle = 0;
  TraceKind kind = TraceKind::Enter;
  int lane = 0;

  bool operator==(const TraceEvent&) const = default;
};

const char* trace_kind_name(TraceKind kind);
// "tick,vehicle,event,lane"
std::string format_trace_event(const RoadNetwork& net, const TraceEvent& e);

// Two-segment lane model: a vehicle entering a road runs at free speed for
// ceil(length / v_free) ticks, then joins the FIFO queue of its lane. Queue
// heads discharge under green, one per headway per lane, if the destination
// lane has room.
//
// The network passed in must outlive the simulator.
class Simulator {
 public:
  Simulator(const RoadNetwork& net, std::vector<RouteSpec> routes, SimSettings settings, std::uint64_t seed);

  void set_phase(const SignalCommand& cmd);
  void tick();

  std::int64_t clock() const { return clock_; }
  const SimSettings& settings() const { return settings_; }
  const RoadNetwork& network() const { return *net_; }

  int lane_vehicle_count(int lane) const;
  int lane_queue_length(int lane) const;
  int lane_capacity(int lane) const;
  double movement_mean_count(int movement) const;
  // mean vehicles per lane over every lane of a road
  double road_mean_count(int road) const;

  // Vehicles that entered each movement's in-lanes since the last reset, by
  // global movement id.
  std::vector<int> snapshot_arrivals() const;
  void reset_arrivals();

  int active_phase(int intersection) const;
  int all_red_remaining(int intersection) const;

  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  const std::vector<RouteSpec>& routes() const { return routes_; }
  const std::deque<int>& lane_queue(int lane) const;

  std::int64_t injected_total() const { return released_; }
  std::int64_t completed_total() const { return completed_; }
  std::int64_t in_system() const { return released_ - completed_; }
  std::size_t pending_count() const { return pending_.size(); }

  void set_trace(std::function<void(const TraceEvent&)> sink) { trace_ = std::move(sink); }

  int free_flow_ticks(int road) const { return road_ticks_[road]; }

 private:
  struct LaneState {
    std::deque<int> running;  // ordered by queue_at
    std::deque<int> queue;
    std::int64_t last_discharge = INT64_MIN / 2;
    int capacity = 1;
    int arrivals = 0;
  };
  struct SignalState {
    int active = 0;
    int pending = 0;
    int all_red_remaining = 0;
  };

  const std::vector<int>& route_roads(const VehicleState& v) const { return routes_[v.route].roads; }
  int pick_lane(const VehicleState& v, int road_index) const;
  void enter_lane(VehicleState& v, int lane, int road_index);
  void emit(TraceKind kind, int vehicle, int lane);

  const RoadNetwork* net_;
  std::vector<RouteSpec> routes_;
  SimSettings settings_;
  Rng rng_;
  std::int64_t clock_ = 0;
  std::vector<VehicleState> vehicles_;  // sorted by entry time
  std::size_t next_release_ = 0;
  std::vector<int> pending_;
  std::vector<LaneState> lanes_;
  std::vector<SignalState> signals_;  // indexed by intersection id
  std::vector<int> road_ticks_;
  std::int64_t released_ = 0;
  std::int64_t completed_ = 0;
  std::function<void(const TraceEvent&)> trace_;
};

}  // namespace tsc
