// SPDX-License-Identifier: Apache-2.0
#include "env.hpp"

#include <cmath>
#include <map>

#include "error.hpp"

namespace tsc {

std::vector<double> Observation::current_phase_one_hot() const {
  std::vector<double> v(static_cast<std::size_t>(num_phases), 0.0);
  v.at(static_cast<std::size_t>(current_phase)) = 1.0;
  return v;
}

std::vector<AgentTopology> build_agent_topologies(const RoadNetwork& net) {
  std::vector<AgentTopology> agents;
  std::map<int, int> agent_of;
  for (int id : net.real_intersections()) {
    agent_of[id] = static_cast<int>(agents.size());
    AgentTopology a;
    a.intersection = id;
    const auto& inter = net.intersection(id);
    for (int m : inter.movements) {
      const auto& mv = net.movement(m);
      a.movements.push_back(m);
      a.turns.push_back(mv.turn);
      a.in_lanes.push_back(static_cast<int>(mv.in_lanes.size()));
      a.downstream_road.push_back(mv.downstream_road);
    }
    for (const auto& p : inter.phases) {
      std::vector<std::uint8_t> row;
      for (int m : inter.movements) row.push_back(p.permits(m) ? 1 : 0);
      a.permits.push_back(std::move(row));
    }
    agents.push_back(std::move(a));
  }

  for (auto& a : agents) {
    const auto& inter = net.intersection(a.intersection);
    for (int road_id : inter.outgoing_roads) {
      const auto& road = net.road(road_id);
      auto it = agent_of.find(road.to);
      if (it == agent_of.end()) continue;
      const auto& down = agents[it->second];
      for (int k = 0; k < down.num_movements(); ++k) {
        const auto& mv = net.movement(down.movements[k]);
        if (mv.upstream_road != road_id) continue;
        a.slots.push_back({road_id, it->second, k, mv.turn, static_cast<int>(mv.in_lanes.size())});
      }
    }
    for (const auto& slot : a.slots) {
      std::vector<double> row(a.movements.size(), 0.0);
      for (std::size_t k = 0; k < a.movements.size(); ++k)
        if (a.downstream_road[k] == slot.road) row[k] = static_cast<double>(a.in_lanes[k]) / slot.lanes;
      a.incidence.push_back(std::move(row));
    }
  }

  for (auto& a : agents) a.sources.assign(a.movements.size(), {});
  for (int i = 0; i < static_cast<int>(agents.size()); ++i) {
    for (int s = 0; s < agents[i].num_slots(); ++s) {
      const auto& slot = agents[i].slots[s];
      agents[slot.downstream_agent].sources[slot.downstream_movement] = {i, s};
    }
  }
  return agents;
}

Environment::Environment(std::shared_ptr<const Scenario> scenario, std::uint64_t seed)
    : scenario_(std::move(scenario)) {
  agents_ = build_agent_topologies(scenario_->network);
  horizon_steps_ = static_cast<int>(std::floor(scenario_->sim.horizon_s / scenario_->sim.action_interval_s));
  reset(seed);
}

void Environment::set_trace(std::function<void(const TraceEvent&)> sink) {
  trace_ = std::move(sink);
  sim_->set_trace(trace_);
}

std::vector<Observation> Environment::reset(std::uint64_t seed) {
  sim_.emplace(scenario_->network, scenario_->routes, scenario_->sim, seed);
  if (trace_) sim_->set_trace(trace_);
  steps_ = 0;
  return observe();
}

std::vector<Observation> Environment::observe() const {
  std::vector<Observation> out;
  out.reserve(agents_.size());
  for (int i = 0; i < num_agents(); ++i) {
    const auto& a = agents_[i];
    Observation o;
    o.agent = i;
    o.num_phases = a.num_phases();
    o.current_phase = sim_->active_phase(a.intersection);
    o.turn_tags = a.turns;
    for (int m : a.movements) o.movement_counts.push_back(sim_->movement_mean_count(m));
    o.received_predictions.assign(a.movements.size(), 0.0);
    out.push_back(std::move(o));
  }
  return out;
}

StepResult Environment::step(std::span<const int> actions) {
  if (done()) throw Error(ErrorCode::EpisodeFinished, "episode already reached its horizon");
  if (static_cast<int>(actions.size()) != num_agents())
    throw Error(ErrorCode::InvalidAction, "expected " + std::to_string(num_agents()) + " actions");
  for (int i = 0; i < num_agents(); ++i)
    if (actions[i] < 0 || actions[i] >= agents_[i].num_phases())
      throw Error(ErrorCode::InvalidAction, "agent " + std::to_string(i) + " phase " + std::to_string(actions[i]));

  for (int i = 0; i < num_agents(); ++i) sim_->set_phase({agents_[i].intersection, actions[i]});
  sim_->reset_arrivals();
  for (int t = 0; t < scenario_->sim.action_interval_s; ++t) sim_->tick();
  ++steps_;

  StepResult r;
  r.observations = observe();
  r.done = done();
  const auto arrivals = sim_->snapshot_arrivals();
  for (int i = 0; i < num_agents(); ++i) {
    const auto& a = agents_[i];
    double sum = 0.0;
    for (double n : r.observations[i].movement_counts) sum += n;
    const double reward = a.movements.empty() ? 0.0 : -sum / static_cast<double>(a.movements.size());
    r.rewards.push_back(reward);
    r.joint_reward += reward;
    std::vector<double> arr, perm;
    for (std::size_t k = 0; k < a.movements.size(); ++k) {
      arr.push_back(arrivals[a.movements[k]]);
      perm.push_back(a.permits[actions[i]][k]);
    }
    r.arrivals.push_back(std::move(arr));
    r.permissions.push_back(std::move(perm));
  }
  return r;
}

void Environment::attach_predictions(std::vector<Observation>& observations,
                                     const std::vector<std::vector<double>>& predictions) const {
  if (observations.size() != agents_.size() || predictions.size() != agents_.size())
    throw Error(ErrorCode::ShapeMismatch, "one observation and one prediction list per agent required");
  for (int i = 0; i < num_agents(); ++i)
    if (static_cast<int>(predictions[i].size()) != agents_[i].num_slots())
      throw Error(ErrorCode::ShapeMismatch, "agent " + std::to_string(i) + " expects " +
                                                std::to_string(agents_[i].num_slots()) + " predictions");
  for (int j = 0; j < num_agents(); ++j) {
    auto& o = observations[j];
    o.received_predictions.assign(agents_[j].movements.size(), 0.0);
    for (std::size_t k = 0; k < agents_[j].sources.size(); ++k) {
      const auto& src = agents_[j].sources[k];
      if (src.agent >= 0) o.received_predictions[k] = predictions[src.agent][src.slot];
    }
  }
}

std::vector<double> Environment::slot_targets(const StepResult& result, int agent) const {
  const auto& a = agents_.at(agent);
  std::vector<double> out;
  for (const auto& s : a.slots)
    out.push_back(result.arrivals[s.downstream_agent][s.downstream_movement] / static_cast<double>(s.lanes));
  return out;
}

}  // namespace tsc
