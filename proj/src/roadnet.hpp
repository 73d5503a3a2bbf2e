// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tsc {

enum class IntersectionKind { Real, Virtual };
enum class Turn { Left = 0, Straight = 1, Right = 2 };
inline constexpr int kTurnCount = 3;

char turn_tag(Turn t);
std::optional<Turn> parse_turn_tag(std::string_view tag);

struct Phase {
  int id = 0;             // local to the owning intersection
  std::vector<int> permitted;  // sorted global movement ids
  bool permits(int movement) const;
  bool operator==(const Phase&) const = default;
};

struct Intersection {
  int id = 0;
  std::string name;
  IntersectionKind kind = IntersectionKind::Virtual;
  double x = 0.0;
  double y = 0.0;
  std::vector<int> incoming_roads;
  std::vector<int> outgoing_roads;
  std::vector<int> movements;  // global ids, ordered by incoming road then L,S,R
  std::vector<Phase> phases;

  bool operator==(const Intersection&) const = default;
};

struct Lane {
  int id = 0;        // global lane id
  int road = 0;
  int index = 0;     // 0 = leftmost
  std::optional<Turn> turn;
  int movement = -1; // -1 on roads that end at a virtual intersection

  bool operator==(const Lane&) const = default;
};

struct Road {
  int id = 0;
  std::string name;
  int from = 0;
  int to = 0;
  double length_m = 0.0;
  std::vector<int> lanes;  // global lane ids, leftmost first

  bool operator==(const Road&) const = default;
};

struct TrafficMovement {
  int id = 0;
  int upstream_road = 0;
  int via = 0;
  int downstream_road = 0;
  Turn turn = Turn::Straight;
  std::vector<int> in_lanes;   // lanes on upstream_road
  std::vector<int> out_lanes;  // lanes on downstream_road

  bool operator==(const TrafficMovement&) const = default;
};

struct RouteSpec {
  std::vector<int> roads;
  double entry_time_s = 0.0;
  int count = 1;
  double interval_s = 0.0;
  // each vehicle's entry is delayed by U[0, jitter_s) drawn from the episode seed
  double jitter_s = 0.0;

  bool operator==(const RouteSpec&) const = default;
};

// Simulation knobs carried by a scenario document; all overridable.
struct SimSettings {
  double free_speed_mps = 10.0;
  double headway_s = 2.0;
  double vehicle_spacing_m = 7.0;
  int action_interval_s = 10;
  int all_red_s = 5;
  double horizon_s = 3600.0;

  bool operator==(const SimSettings&) const = default;
};

// Unvalidated input to RoadNetwork::build; mirrors the scenario document.
struct NetworkDesc {
  struct IntersectionDesc {
    std::string name;
    IntersectionKind kind = IntersectionKind::Virtual;
    double x = 0.0;
    double y = 0.0;
  };
  struct RoadDesc {
    std::string name;
    std::string from;
    std::string to;
    double length_m = 0.0;
    std::vector<std::optional<Turn>> lanes;
  };
  struct PhaseTableDesc {
    std::string intersection;
    // each phase is a list of (incoming road, outgoing road) pairs
    std::vector<std::vector<std::pair<std::string, std::string>>> phases;
  };
  std::vector<IntersectionDesc> intersections;
  std::vector<RoadDesc> roads;
  std::vector<PhaseTableDesc> phase_tables;
};

class RoadNetwork {
 public:
  static RoadNetwork build(const NetworkDesc& desc);

  const std::vector<Intersection>& intersections() const { return intersections_; }
  const std::vector<Road>& roads() const { return roads_; }
  const std::vector<Lane>& lanes() const { return lanes_; }
  const std::vector<TrafficMovement>& movements() const { return movements_; }

  const Intersection& intersection(int id) const;
  const Road& road(int id) const;
  const TrafficMovement& movement(int id) const;

  int intersection_id(std::string_view name) const;
  int road_id(std::string_view name) const;
  std::optional<int> movement_between(int in_road, int out_road) const;
  // "road:index"
  std::string lane_name(int lane) const;

  std::vector<int> real_intersections() const;
  bool is_real(int intersection) const;

  bool operator==(const RoadNetwork&) const = default;

 private:
  std::vector<Intersection> intersections_;
  std::vector<Road> roads_;
  std::vector<Lane> lanes_;
  std::vector<TrafficMovement> movements_;
};

struct Scenario {
  RoadNetwork network;
  std::vector<RouteSpec> routes;
  std::uint64_t seed = 0;
  SimSettings sim;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);
std::string print_scenario(const Scenario& scenario);

// The 8-phase table of a standard 4-arm intersection: NS-straight, NS-left,
// EW-straight, EW-left, then N, S, E, W straight+left; every phase also
// carries all right turns. Throws UnsupportedGeometry otherwise.
std::vector<Phase> canonical_phases(const RoadNetwork& net, int intersection);

std::set<int> neighbors(const RoadNetwork& net, int intersection);

}  // namespace tsc
