// SPDX-License-Identifier: Apache-2.0
#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "error.hpp"
#include "unicomm.hpp"

namespace tsc {

// ---- metrics ----

std::vector<VehicleMetrics> vehicle_metrics(const Simulator& sim, double horizon_s) {
  std::vector<VehicleMetrics> out;
  for (const auto& v : sim.vehicles()) {
    if (v.status == VehicleStatus::Scheduled) continue;
    VehicleMetrics m;
    m.vehicle = v.id;
    m.completed = v.completed_at_s.has_value();
    const double end = m.completed ? *v.completed_at_s : horizon_s;
    m.travel_time_s = end - v.entered_at_s;
    m.delay_s = std::max(0.0, m.travel_time_s - v.expected_free_travel_s);
    m.wait_time_s = static_cast<double>(v.wait_ticks);
    out.push_back(m);
  }
  return out;
}

EpisodeMetrics episode_metrics(const Simulator& sim, double horizon_s) {
  EpisodeMetrics e;
  const auto per = vehicle_metrics(sim, horizon_s);
  for (const auto& m : per) {
    e.travel_time += m.travel_time_s;
    e.delay += m.delay_s;
    e.wait_time += m.wait_time_s;
    e.throughput += m.completed ? 1 : 0;
  }
  if (!per.empty()) {
    const double n = static_cast<double>(per.size());
    e.travel_time /= n;
    e.delay /= n;
    e.wait_time /= n;
  }
  e.injected = sim.injected_total();
  e.in_system = sim.in_system();
  return e;
}

std::string metric_identity_violation(const Simulator& sim, double horizon_s) {
  const auto per = vehicle_metrics(sim, horizon_s);
  std::int64_t completed = 0;
  for (const auto& m : per) {
    completed += m.completed ? 1 : 0;
    if (m.delay_s < 0.0) return "vehicle " + std::to_string(m.vehicle) + " has negative delay";
    if (m.wait_time_s > m.travel_time_s)
      return "vehicle " + std::to_string(m.vehicle) + " waited longer than it travelled";
  }
  if (completed + sim.in_system() != sim.injected_total())
    return "throughput " + std::to_string(completed) + " + in-system " + std::to_string(sim.in_system()) +
           " != injected " + std::to_string(sim.injected_total());
  return {};
}

// ---- fixed time ----

void validate_cycle(const std::vector<CycleEntry>& cycle, int dt) {
  if (cycle.empty()) throw Error(ErrorCode::InvalidCycle, "empty cycle");
  for (const auto& e : cycle) {
    if (e.phase < 0) throw Error(ErrorCode::InvalidCycle, "negative phase id");
    if (e.duration_s <= 0 || e.duration_s % dt != 0)
      throw Error(ErrorCode::InvalidCycle,
                  "duration " + std::to_string(e.duration_s) + " s is not a positive multiple of " + std::to_string(dt));
  }
}

FixedTimeController::FixedTimeController(std::vector<CycleEntry> cycle) : cycle_(std::move(cycle)) {
  for (const auto& e : cycle_)
    if (e.phase < 0 || e.duration_s <= 0) throw Error(ErrorCode::InvalidCycle, "cycle entries need a phase and a positive duration");
}

void FixedTimeController::reset(const Environment& env) {
  constexpr int kDefaultGreen = 30;
  const int dt = env.scenario().sim.action_interval_s;
  schedule_.clear();
  step_ = 0;
  for (const auto& topo : env.agents()) {
    std::vector<CycleEntry> cycle = cycle_;
    if (cycle.empty())
      for (int p = 0; p < topo.num_phases(); ++p) cycle.push_back({p, kDefaultGreen});
    validate_cycle(cycle, dt);
    std::vector<int> steps;
    for (const auto& e : cycle) {
      if (e.phase >= topo.num_phases())
        throw Error(ErrorCode::InvalidCycle, "phase " + std::to_string(e.phase) + " does not exist at every intersection");
      steps.insert(steps.end(), static_cast<std::size_t>(e.duration_s / dt), e.phase);
    }
    schedule_.push_back(std::move(steps));
  }
}

std::vector<int> FixedTimeController::act(const Environment& env, std::vector<Observation>&) {
  if (static_cast<int>(schedule_.size()) != env.num_agents()) reset(env);
  std::vector<int> out;
  for (const auto& s : schedule_) out.push_back(s[static_cast<std::size_t>(step_) % s.size()]);
  ++step_;
  return out;
}

// ---- SOTL ----

std::vector<double> phase_demands(const AgentTopology& topo, const std::vector<double>& counts) {
  std::vector<double> d(static_cast<std::size_t>(topo.num_phases()), 0.0);
  for (int a = 0; a < topo.num_phases(); ++a)
    for (int k = 0; k < topo.num_movements(); ++k)
      if (topo.permits[a][k] && topo.turns[k] != Turn::Right) d[a] += counts.at(k);
  return d;
}

int sotl_decide(const std::vector<double>& demands, int current, int elapsed_s, const SotlParams& params) {
  const int n = static_cast<int>(demands.size());
  if (n <= 1) return 0;
  int best = -1;
  for (int off = 1; off < n; ++off) {
    const int a = (current + off) % n;
    if (best < 0 || demands[a] > demands[best]) best = a;
  }
  const bool expired = elapsed_s >= params.max_green_s;
  const bool starved = demands[current] < params.keep_threshold && demands[best] > demands[current];
  return expired || starved ? best : current;
}

void SotlController::reset(const Environment& env) {
  current_.assign(static_cast<std::size_t>(env.num_agents()), 0);
  elapsed_.assign(static_cast<std::size_t>(env.num_agents()), 0);
}

std::vector<int> SotlController::act(const Environment& env, std::vector<Observation>& obs) {
  if (static_cast<int>(current_.size()) != env.num_agents()) reset(env);
  const int dt = env.scenario().sim.action_interval_s;
  std::vector<int> out;
  for (int i = 0; i < env.num_agents(); ++i) {
    const auto demands = phase_demands(env.agents()[i], obs[i].movement_counts);
    const int next = sotl_decide(demands, current_[i], elapsed_[i], params_);
    if (next != current_[i]) {
      current_[i] = next;
      elapsed_[i] = 0;
    }
    elapsed_[i] += dt;
    out.push_back(next);
  }
  return out;
}

// ---- MaxPressure ----

std::vector<double> phase_pressures(const AgentTopology& topo, const std::vector<double>& in_counts,
                                    const std::vector<double>& out_counts) {
  std::vector<double> p(static_cast<std::size_t>(topo.num_phases()), 0.0);
  for (int a = 0; a < topo.num_phases(); ++a)
    for (int k = 0; k < topo.num_movements(); ++k)
      if (topo.permits[a][k] && topo.turns[k] != Turn::Right) p[a] += in_counts.at(k) - out_counts.at(k);
  return p;
}

std::vector<double> downstream_counts(const Simulator& sim, const AgentTopology& topo) {
  const auto& net = sim.network();
  std::vector<double> out;
  for (int road : topo.downstream_road)
    out.push_back(net.is_real(net.road(road).to) ? sim.road_mean_count(road) : 0.0);
  return out;
}

int max_pressure_decide(const std::vector<double>& pressures) { return argmax(pressures); }

std::vector<int> MaxPressureController::act(const Environment& env, std::vector<Observation>& obs) {
  std::vector<int> out;
  for (int i = 0; i < env.num_agents(); ++i) {
    const auto& topo = env.agents()[i];
    out.push_back(max_pressure_decide(
        phase_pressures(topo, obs[i].movement_counts, downstream_counts(env.sim(), topo))));
  }
  return out;
}

std::vector<int> RandomController::act(const Environment& env, std::vector<Observation>&) {
  std::vector<int> out;
  for (const auto& topo : env.agents()) out.push_back(static_cast<int>(rng_.below(static_cast<std::uint64_t>(topo.num_phases()))));
  return out;
}

// ---- UniLight ----

UniLightController::UniLightController(nn::ParamStore params, bool comm)
    : params_(std::move(params)), shape_(unilight_shape_of(params_)), comm_(comm) {}

std::vector<int> UniLightController::act(const Environment& env, std::vector<Observation>& obs) {
  if (comm_) attach_unicomm_predictions(env, graph_, params_, obs);
  std::vector<int> out;
  for (int i = 0; i < env.num_agents(); ++i)
    out.push_back(argmax(q_values(graph_, params_, shape_, q_input(obs[i], env.agents()[i]), env.agents()[i])));
  return out;
}

// ---- evaluation ----

EpisodeMetrics run_episode(Controller& controller, Environment& env, std::uint64_t seed, bool* identities_hold,
                           const TraceSink& trace) {
  env.set_trace(trace);
  auto obs = env.reset(seed);
  controller.reset(env);
  while (!env.done()) {
    const auto actions = controller.act(env, obs);
    obs = env.step(actions).observations;
  }
  const double horizon = static_cast<double>(env.sim().clock());
  if (identities_hold) *identities_hold = metric_identity_violation(env.sim(), horizon).empty();
  if (trace) env.set_trace({});
  return episode_metrics(env.sim(), horizon);
}

namespace {

double population_std(const std::vector<double>& xs, double mean) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

}  // namespace

MetricReport evaluate(Controller& controller, std::shared_ptr<const Scenario> scenario, int episodes,
                      std::uint64_t seed) {
  if (episodes < 1) throw Error(ErrorCode::InvalidConfig, "need at least one evaluation episode");
  Environment env(std::move(scenario), seed);
  MetricReport r;
  std::vector<double> tt, de, wt, tp;
  for (int k = 0; k < episodes; ++k) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
    bool ok = true;
    r.episodes.push_back(run_episode(controller, env, s, &ok));
    r.seeds.push_back(s);
    r.identities_hold = r.identities_hold && ok;
    const auto& e = r.episodes.back();
    tt.push_back(e.travel_time);
    de.push_back(e.delay);
    wt.push_back(e.wait_time);
    tp.push_back(e.throughput);
  }
  auto mean = [](const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };
  r.mean.travel_time = mean(tt);
  r.mean.delay = mean(de);
  r.mean.wait_time = mean(wt);
  r.mean_throughput = mean(tp);
  r.mean.throughput = static_cast<int>(std::lround(r.mean_throughput));
  r.std_travel_time = population_std(tt, r.mean.travel_time);
  r.std_delay = population_std(de, r.mean.delay);
  r.std_wait_time = population_std(wt, r.mean.wait_time);
  r.std_throughput = population_std(tp, r.mean_throughput);
  return r;
}

std::string metrics_csv_header() { return "controller,comm,seed,travel_time,delay,wait_time,throughput"; }

void write_metrics_csv(std::ostream& out, const std::string& controller, const std::string& comm,
                       const MetricReport& report, bool header) {
  char buf[256];
  if (header) out << metrics_csv_header() << '\n';
  for (std::size_t i = 0; i < report.episodes.size(); ++i) {
    const auto& e = report.episodes[i];
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%d", e.travel_time, e.delay, e.wait_time, e.throughput);
    out << controller << ',' << comm << ',' << report.seeds[i] << ',' << buf << '\n';
  }
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f", report.mean.travel_time, report.mean.delay,
                report.mean.wait_time, report.mean_throughput);
  out << controller << ',' << comm << ",mean," << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f", report.std_travel_time, report.std_delay,
                report.std_wait_time, report.std_throughput);
  out << controller << ',' << comm << ",std," << buf << '\n';
}

std::unique_ptr<Controller> make_baseline(const std::string& name) {
  if (name == "fixed") return std::make_unique<FixedTimeController>();
  if (name == "sotl") return std::make_unique<SotlController>();
  if (name == "maxpressure") return std::make_unique<MaxPressureController>();
  throw Error(ErrorCode::InvalidConfig, "unknown baseline controller '" + name + "'");
}

}  // namespace tsc
