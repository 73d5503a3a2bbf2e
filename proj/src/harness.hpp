// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "env.hpp"
#include "params.hpp"
#include "random.hpp"
#include "tensor.hpp"
#include "unilight.hpp"

namespace tsc {

// ---- metrics ----

struct VehicleMetrics {
  int vehicle = 0;
  double travel_time_s = 0.0;
  double delay_s = 0.0;
  double wait_time_s = 0.0;
  bool completed = false;
};

struct EpisodeMetrics {
  double travel_time = 0.0;
  double delay = 0.0;
  double wait_time = 0.0;
  int throughput = 0;
  std::int64_t injected = 0;
  std::int64_t in_system = 0;

  bool operator==(const EpisodeMetrics&) const = default;
};

// Per released vehicle; uncompleted vehicles are charged up to horizon_s.
std::vector<VehicleMetrics> vehicle_metrics(const Simulator& sim, double horizon_s);
EpisodeMetrics episode_metrics(const Simulator& sim, double horizon_s);
// Empty string when throughput + in-system = injected, delay >= 0 and
// wait <= travel all hold; otherwise a description of the first violation.
std::string metric_identity_violation(const Simulator& sim, double horizon_s);

struct MetricReport {
  std::vector<EpisodeMetrics> episodes;
  std::vector<std::uint64_t> seeds;
  EpisodeMetrics mean;  // throughput rounded; exact value in mean_throughput
  double mean_throughput = 0.0;
  double std_travel_time = 0.0;
  double std_delay = 0.0;
  double std_wait_time = 0.0;
  double std_throughput = 0.0;
  bool identities_hold = true;
};

// ---- controllers ----

class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  virtual std::string comm() const { return "none"; }
  virtual void reset(const Environment& env) = 0;
  // One phase per agent for the next action interval. obs may be modified.
  virtual std::vector<int> act(const Environment& env, std::vector<Observation>& obs) = 0;
};

struct CycleEntry {
  int phase = 0;
  int duration_s = 0;
};

// Throws InvalidCycle unless durations are positive multiples of dt.
void validate_cycle(const std::vector<CycleEntry>& cycle, int dt);

class FixedTimeController : public Controller {
 public:
  // Empty cycle: every phase of each intersection for 30 s, in table order.
  explicit FixedTimeController(std::vector<CycleEntry> cycle = {});
  std::string name() const override { return "fixed"; }
  void reset(const Environment& env) override;
  std::vector<int> act(const Environment& env, std::vector<Observation>& obs) override;

 private:
  std::vector<CycleEntry> cycle_;
  std::vector<std::vector<int>> schedule_;  // per agent, phase per step of one cycle
  int step_ = 0;
};

struct SotlParams {
  double keep_threshold = 2.0;
  int max_green_s = 60;
};

// Summed counts over each phase's permitted non-right movements.
std::vector<double> phase_demands(const AgentTopology& topo, const std::vector<double>& counts);
int sotl_decide(const std::vector<double>& demands, int current, int elapsed_s, const SotlParams& params);

class SotlController : public Controller {
 public:
  explicit SotlController(SotlParams params = {}) : params_(params) {}
  std::string name() const override { return "sotl"; }
  void reset(const Environment& env) override;
  std::vector<int> act(const Environment& env, std::vector<Observation>& obs) override;

 private:
  SotlParams params_;
  std::vector<int> current_;
  std::vector<int> elapsed_;
};

// pressure(k) = in_counts[k] - out_counts[k]; phase pressure sums the
// permitted non-right movements.
std::vector<double> phase_pressures(const AgentTopology& topo, const std::vector<double>& in_counts,
                                    const std::vector<double>& out_counts);
// Mean downstream-road count per movement, 0 where the road exits the network.
std::vector<double> downstream_counts(const Simulator& sim, const AgentTopology& topo);
int max_pressure_decide(const std::vector<double>& pressures);

class MaxPressureController : public Controller {
 public:
  std::string name() const override { return "maxpressure"; }
  void reset(const Environment&) override {}
  std::vector<int> act(const Environment& env, std::vector<Observation>& obs) override;
};

class RandomController : public Controller {
 public:
  explicit RandomController(std::uint64_t seed) : seed_(seed), rng_(seed) {}
  std::string name() const override { return "random"; }
  void reset(const Environment&) override { rng_ = Rng(seed_); }
  std::vector<int> act(const Environment& env, std::vector<Observation>& obs) override;

 private:
  std::uint64_t seed_;
  Rng rng_;
};

// Greedy UniLight policy, optionally fed with UniComm predictions.
class UniLightController : public Controller {
 public:
  UniLightController(nn::ParamStore params, bool comm);
  std::string name() const override { return "unilight"; }
  std::string comm() const override { return comm_ ? "unicomm" : "none"; }
  void reset(const Environment&) override {}
  std::vector<int> act(const Environment& env, std::vector<Observation>& obs) override;

 private:
  nn::ParamStore params_;
  UniLightShape shape_;
  bool comm_;
  nn::Graph graph_;
};

// ---- evaluation ----

using TraceSink = std::function<void(const TraceEvent&)>;

EpisodeMetrics run_episode(Controller& controller, Environment& env, std::uint64_t seed, bool* identities_hold = nullptr,
                           const TraceSink& trace = {});

// Episodes use seeds seed, seed+1, ...
MetricReport evaluate(Controller& controller, std::shared_ptr<const Scenario> scenario, int episodes = 10,
                      std::uint64_t seed = 0);

// "controller,comm,seed,travel_time,delay,wait_time,throughput" then one row
// per episode plus mean and std rows.
void write_metrics_csv(std::ostream& out, const std::string& controller, const std::string& comm,
                       const MetricReport& report, bool header = true);
std::string metrics_csv_header();

std::unique_ptr<Controller> make_baseline(const std::string& name);

}  // namespace tsc
