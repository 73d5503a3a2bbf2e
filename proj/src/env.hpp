// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "microsim.hpp"
#include "roadnet.hpp"

namespace tsc {

// Static per-agent view of one real intersection, shared by every model.
struct AgentTopology {
  // Outgoing prediction slot: one downstream movement on a road that leads
  // to another signalised intersection.
  struct Slot {
    int road = 0;
    int downstream_agent = 0;
    int downstream_movement = 0;  // local index at the downstream agent
    Turn turn = Turn::Straight;
    int lanes = 1;                // in-lanes of the downstream movement
  };
  // Where the received prediction of one local movement comes from.
  struct Source {
    int agent = -1;  // -1: fed by a virtual intersection
    int slot = -1;
  };

  int intersection = 0;
  std::vector<int> movements;     // global ids
  std::vector<Turn> turns;
  std::vector<int> in_lanes;      // lane count per movement
  std::vector<int> downstream_road;
  // permits[a][k]: phase a lets movement k through
  std::vector<std::vector<std::uint8_t>> permits;
  std::vector<Slot> slots;
  // incidence[s][k] = in_lanes(k) / lanes(s) when movement k feeds slot s's road
  std::vector<std::vector<double>> incidence;
  std::vector<Source> sources;

  int num_movements() const { return static_cast<int>(movements.size()); }
  int num_phases() const { return static_cast<int>(permits.size()); }
  int num_slots() const { return static_cast<int>(slots.size()); }
};

struct Observation {
  int agent = 0;
  std::vector<double> movement_counts;  // lane-normalised
  int current_phase = 0;
  int num_phases = 0;
  std::vector<Turn> turn_tags;
  std::vector<double> received_predictions;  // zeros without communication

  std::vector<double> current_phase_one_hot() const;
  bool operator==(const Observation&) const = default;
};

struct StepResult {
  std::vector<double> rewards;  // per agent
  double joint_reward = 0.0;
  std::vector<Observation> observations;
  bool done = false;
  // per agent, per local movement: vehicles that entered the movement's lanes
  std::vector<std::vector<double>> arrivals;
  // per agent, per local movement: 1 if the executed phase permits it
  std::vector<std::vector<double>> permissions;
};

std::vector<AgentTopology> build_agent_topologies(const RoadNetwork& net);

class Environment {
 public:
  explicit Environment(std::shared_ptr<const Scenario> scenario, std::uint64_t seed = 0);

  std::vector<Observation> reset(std::uint64_t seed);
  StepResult step(std::span<const int> actions);
  std::vector<Observation> observe() const;

  // Routes each agent's outgoing-slot predictions onto the movements of the
  // downstream agent. predictions[i] has one entry per slot of agent i.
  void attach_predictions(std::vector<Observation>& observations,
                          const std::vector<std::vector<double>>& predictions) const;

  // Lane-normalised recorded arrivals for each outgoing slot of an agent.
  std::vector<double> slot_targets(const StepResult& result, int agent) const;

  const std::vector<AgentTopology>& agents() const { return agents_; }
  int num_agents() const { return static_cast<int>(agents_.size()); }
  const Scenario& scenario() const { return *scenario_; }
  const Simulator& sim() const { return *sim_; }
  int horizon_steps() const { return horizon_steps_; }
  int steps_taken() const { return steps_; }
  bool done() const { return steps_ >= horizon_steps_; }

  void set_trace(std::function<void(const TraceEvent&)> sink);

 private:
  std::shared_ptr<const Scenario> scenario_;
  std::vector<AgentTopology> agents_;
  std::optional<Simulator> sim_;
  std::function<void(const TraceEvent&)> trace_;
  int horizon_steps_ = 0;
  int steps_ = 0;
};

}  // namespace tsc
