// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fd_cases.hpp"
#include "generator.hpp"
#include "harness.hpp"
#include "microsim.hpp"
#include "support.hpp"
#include "trainer.hpp"

using namespace tsc;
using tsc::test::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double x, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

std::string join(const std::vector<double>& v, int prec = 2) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i], prec);
  return s + "]";
}

// ---- 1 ----

Verdict gradients() {
  const auto t0 = Clock::now();
  constexpr int kCases = 20;
  Rng rng(20240601);
  int cases = 0, failed_cases = 0;
  double worst = 0.0;
  std::string failures;
  for (const auto& op : test::fd_ops()) {
    for (int i = 0; i < kCases; ++i) {
      auto c = op.make(rng);
      const auto r = test::finite_difference_check(*c.store, c.loss, 1e-4, 1e-6, 1e-6, c.prefix);
      ++cases;
      worst = std::max(worst, r.worst);
      if (r.failed > 0 || r.checked == 0) {
        ++failed_cases;
        failures += " " + op.name;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {failed_cases == 0 && secs < 60.0,
          std::to_string(cases) + " cases over " + std::to_string(test::fd_ops().size()) + " ops, " +
              std::to_string(failed_cases) + " failing" + failures + ", worst error/tolerance " + fmt(worst, 4) + ", " +
              fmt(secs, 1) + " s"};
}

// ---- 2 ----

struct InvariantChecker {
  const RoadNetwork& net;
  Simulator& sim;
  int all_red;
  std::int64_t headway;
  std::vector<std::deque<int>> queued;  // per lane, from queue events
  std::vector<std::int64_t> last_discharge;
  std::vector<int> commanded;  // per intersection
  // per intersection: (tick, phase) of every effective change
  std::vector<std::vector<std::pair<std::int64_t, int>>> changes;
  std::string error;

  InvariantChecker(const RoadNetwork& n, Simulator& s)
      : net(n),
        sim(s),
        all_red(s.settings().all_red_s),
        headway(static_cast<std::int64_t>(std::ceil(s.settings().headway_s - 1e-9))),
        queued(n.lanes().size()),
        last_discharge(n.lanes().size(), INT64_MIN / 2),
        commanded(n.intersections().size(), 0),
        changes(n.intersections().size(), {{INT64_MIN / 2, 0}}) {}

  void fail(const std::string& what) {
    if (error.empty()) error = what;
  }

  void command(int inter, int phase) {
    if (phase != commanded[inter]) {
      commanded[inter] = phase;
      changes[inter].push_back({sim.clock(), phase});
    }
    sim.set_phase({inter, phase});
  }

  // -1 while all-red
  int effective_phase(int inter, std::int64_t tick) const {
    int phase = 0;
    for (const auto& [t, p] : changes[inter]) {
      if (tick >= t + all_red) phase = p;
      else if (tick >= t) return -1;
    }
    return phase;
  }

  void on_event(const TraceEvent& e) {
    if (e.kind == TraceKind::Queue) queued[e.lane].push_back(e.vehicle);
    if (e.kind != TraceKind::Discharge) return;
    auto& q = queued[e.lane];
    if (q.empty() || q.front() != e.vehicle) fail("FIFO violated on lane " + net.lane_name(e.lane));
    if (!q.empty()) q.pop_front();
    if (e.tick - last_discharge[e.lane] < headway) fail("headway violated on lane " + net.lane_name(e.lane));
    last_discharge[e.lane] = e.tick;
    const int m = net.lanes()[e.lane].movement;
    const int inter = net.movement(m).via;
    const int phase = effective_phase(inter, e.tick);
    if (phase < 0) fail("discharge during all-red at tick " + std::to_string(e.tick));
    else if (!net.intersection(inter).phases[phase].permits(m))
      fail("discharge of a blocked movement at tick " + std::to_string(e.tick));
  }

  void after_tick() {
    std::int64_t released = 0, live = 0, done = 0;
    for (const auto& v : sim.vehicles()) {
      if (v.status == VehicleStatus::Scheduled) continue;
      ++released;
      if (v.status == VehicleStatus::Completed) ++done;
      else ++live;
    }
    if (released != live + done) fail("recount does not conserve vehicles");
    if (sim.injected_total() != released || sim.completed_total() != done || sim.in_system() != live)
      fail("counters disagree with recount at tick " + std::to_string(sim.clock()));
    for (const auto& lane : net.lanes())
      if (sim.lane_vehicle_count(lane.id) > sim.lane_capacity(lane.id)) fail("lane over capacity");
  }
};

Verdict conservation() {
  const auto t0 = Clock::now();
  Rng rng(777);
  int scenarios = 0, bad = 0, ticks = 0;
  std::int64_t discharges = 0, red_switches = 0;
  std::string first_error;
  for (int s = 0; s < 100; ++s) {
    GridOptions o;
    o.rows = 1 + static_cast<int>(rng.below(2));
    o.cols = 1 + static_cast<int>(rng.below(3));
    o.min_lanes = 3;
    o.max_lanes = 3 + static_cast<int>(rng.below(2));
    o.min_length_m = 100 + rng.uniform(0, 100);
    o.max_length_m = o.min_length_m + rng.uniform(0, 200);
    o.vehicles_per_hour = rng.uniform(200, 2000);
    o.demand_duration_s = 500;
    o.sim.horizon_s = 500;
    const int red_options[] = {0, 2, 5};
    o.sim.all_red_s = red_options[rng.below(3)];
    o.sim.headway_s = 1.0 + static_cast<double>(rng.below(3));
    o.sim.vehicle_spacing_m = 5.0 + rng.uniform(0, 10);
    o.seed = rng.next();
    const Scenario sc = parse_scenario(generate_grid(o));
    Simulator sim(sc.network, sc.routes, sc.sim, rng.next());
    InvariantChecker check(sc.network, sim);
    sim.set_trace([&](const TraceEvent& e) {
      if (e.kind == TraceKind::Discharge) ++discharges;
      check.on_event(e);
    });
    const auto real = sc.network.real_intersections();
    for (int t = 0; t < 500; ++t) {
      if (t % sc.sim.action_interval_s == 0)
        for (int i : real) {
          const int p = static_cast<int>(rng.below(sc.network.intersection(i).phases.size()));
          if (p != check.commanded[i]) ++red_switches;
          check.command(i, p);
        }
      sim.tick();
      check.after_tick();
      ++ticks;
    }
    ++scenarios;
    if (!check.error.empty()) {
      ++bad;
      if (first_error.empty()) first_error = check.error;
    }
  }
  const double secs = seconds_since(t0);
  std::string detail = std::to_string(scenarios) + " scenarios, " + std::to_string(ticks) + " ticks, " +
                       std::to_string(discharges) + " discharges, " + std::to_string(red_switches) +
                       " phase changes, " + std::to_string(bad) + " with violations, " + fmt(secs, 1) + " s";
  if (!first_error.empty()) detail += "; first: " + first_error;
  return {bad == 0 && discharges > 0 && secs < 60.0, detail};
}

// ---- 3 ----

json one_flow(std::vector<std::string> route, int count) {
  return json::array({json{{"route", route}, {"start", 0}, {"count", count}, {"interval", 0}}});
}

struct Micro {
  std::string name;
  std::string doc;
  std::map<std::int64_t, std::pair<std::string, int>> commands;  // tick -> (intersection, phase)
  std::int64_t ticks;
  std::vector<std::string> expected;  // "tick,vehicle,event,lane"
};

Verdict micro_oracles() {
  const std::string grid = test::grid_json(1, 1, 0, 600, 0);
  const std::vector<std::string> ns = {"R_V_N_0_I_0_0", "R_I_0_0_V_S_0"};
  const std::string in = "R_V_N_0_I_0_0:1", out = "R_I_0_0_V_S_0:";
  std::vector<Micro> cases;
  cases.push_back({"free flow", test::corridor_json(100, 1, one_flow({"AB"}, 1)), {}, 30,
                   {"0,0,enter,AB:0", "10,0,complete,AB:0"}});
  cases.push_back({"headway discharge",
                   test::with_flows(grid, one_flow(ns, 3)),
                   {},
                   100,
                   {"0,0,enter," + in, "0,1,enter," + in, "0,2,enter," + in, "30,0,queue," + in, "30,1,queue," + in,
                    "30,2,queue," + in, "30,0,discharge," + in, "30,0,enter," + out + "0", "32,1,discharge," + in,
                    "32,1,enter," + out + "1", "34,2,discharge," + in, "34,2,enter," + out + "2",
                    "60,0,complete," + out + "0", "62,1,complete," + out + "1", "64,2,complete," + out + "2"}});
  cases.push_back({"all-red interruption",
                   test::with_flows(grid, one_flow(ns, 3)),
                   {{30, {"I_0_0", 1}}, {40, {"I_0_0", 0}}},
                   100,
                   {"0,0,enter," + in, "0,1,enter," + in, "0,2,enter," + in, "30,0,queue," + in, "30,1,queue," + in,
                    "30,2,queue," + in, "45,0,discharge," + in, "45,0,enter," + out + "0", "47,1,discharge," + in,
                    "47,1,enter," + out + "1", "49,2,discharge," + in, "49,2,enter," + out + "2",
                    "75,0,complete," + out + "0", "77,1,complete," + out + "1", "79,2,complete," + out + "2"}});
  cases.push_back({"spillback",
                   test::tee_json(one_flow({"WX", "XE"}, 4), 600, 600, 300, json{{"vehicle_spacing", 150.0}}),
                   {},
                   200,
                   {"0,0,enter,WX:0", "0,1,enter,WX:0", "0,2,enter,WX:0", "0,3,enter,WX:0", "60,0,queue,WX:0",
                    "60,1,queue,WX:0", "60,2,queue,WX:0", "60,3,queue,WX:0", "60,0,discharge,WX:0", "60,0,enter,XE:0",
                    "62,1,discharge,WX:0", "62,1,enter,XE:0", "90,0,complete,XE:0", "90,2,discharge,WX:0",
                    "90,2,enter,XE:0", "92,1,complete,XE:0", "92,3,discharge,WX:0", "92,3,enter,XE:0",
                    "120,2,complete,XE:0", "122,3,complete,XE:0"}});

  int matched = 0;
  std::string detail;
  for (const auto& c : cases) {
    const Scenario sc = parse_scenario(c.doc);
    Simulator sim(sc.network, sc.routes, sc.sim, 0);
    std::vector<std::string> got;
    sim.set_trace([&](const TraceEvent& e) { got.push_back(format_trace_event(sc.network, e)); });
    for (std::int64_t t = 0; t < c.ticks; ++t) {
      if (auto it = c.commands.find(t); it != c.commands.end())
        sim.set_phase({sc.network.intersection_id(it->second.first), it->second.second});
      sim.tick();
    }
    if (got == c.expected) {
      ++matched;
    } else {
      detail += "; " + c.name + " diverged";
      for (std::size_t i = 0; i < std::max(got.size(), c.expected.size()); ++i) {
        const std::string g = i < got.size() ? got[i] : "<none>";
        const std::string e = i < c.expected.size() ? c.expected[i] : "<none>";
        if (g != e) {
          detail += " at event " + std::to_string(i) + ": got " + g + ", expected " + e;
          break;
        }
      }
    }
  }
  return {matched == static_cast<int>(cases.size()),
          std::to_string(matched) + "/" + std::to_string(cases.size()) + " scenarios match event-for-event" + detail};
}

// ---- 4 ----

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism(const std::filesystem::path& dir) {
  auto sc = test::grid(2, 2, 300, 600, 5);
  TrainConfig c;
  c.total_frames = 600;
  c.replay_capacity = 400;
  c.seed = 17;
  c.log_every = 50;
  c.eval_every = 300;
  std::vector<std::string> logs, csvs, ckpts;
  for (int run = 0; run < 2; ++run) {
    const auto log = dir / ("det_log_" + std::to_string(run) + ".csv");
    const auto ckpt = dir / ("det_" + std::to_string(run) + ".ckpt");
    const auto r = run_training(sc, c, log.string(), ckpt.string());
    UniLightController policy(nn::load_checkpoint_file(ckpt.string()), true);
    std::ostringstream os;
    write_metrics_csv(os, policy.name(), policy.comm(), evaluate(policy, sc, 3, 40));
    MaxPressureController mp;
    write_metrics_csv(os, mp.name(), mp.comm(), evaluate(mp, sc, 3, 40), false);
    logs.push_back(read_file(log));
    ckpts.push_back(read_file(ckpt));
    csvs.push_back(os.str());
  }
  const bool same_log = logs[0] == logs[1] && !logs[0].empty();
  const bool same_csv = csvs[0] == csvs[1];
  const bool same_ckpt = ckpts[0] == ckpts[1];
  return {same_log && same_csv && same_ckpt,
          std::string("training log ") + (same_log ? "identical" : "differs") + " (" + std::to_string(logs[0].size()) +
              " bytes), metrics CSV " + (same_csv ? "identical" : "differs") + ", checkpoint " +
              (same_ckpt ? "identical" : "differs")};
}

// ---- 5 ----

// Rule recomputations from raw simulator state.
double lane_mean(const Simulator& sim, const std::vector<int>& lanes) {
  double n = 0;
  for (int l : lanes) n += static_cast<double>(sim.lane_queue(l).size());
  return n;
}

Verdict controller_oracles() {
  auto sc = test::grid(2, 2, 1500, 3600, 21);
  Environment env(sc);
  const auto& net = sc->network;
  Rng rng(99);
  RandomController driver(5);
  MaxPressureController mp;
  SotlParams sp;
  int states = 0, mp_bad = 0, sotl_bad = 0, pressure_bad = 0, nontrivial = 0;

  // occupancy per lane from the vehicle list
  auto lane_counts = [&]() {
    std::vector<double> c(net.lanes().size(), 0.0);
    for (const auto& v : env.sim().vehicles())
      if (v.status == VehicleStatus::Running || v.status == VehicleStatus::Queued) c[v.lane] += 1;
    return c;
  };
  auto mean_over = [](const std::vector<double>& c, const std::vector<int>& lanes) {
    double s = 0;
    for (int l : lanes) s += c[l];
    return s / static_cast<double>(lanes.size());
  };

  std::uint64_t episode = 0;
  auto obs = env.reset(episode);
  while (states < 1000) {
    if (env.done()) obs = env.reset(++episode);
    const auto counts = lane_counts();
    auto obs_copy = obs;
    const auto mp_actions = mp.act(env, obs_copy);
    for (int i = 0; i < env.num_agents() && states < 1000; ++i, ++states) {
      const auto& inter = net.intersection(env.agents()[i].intersection);
      // MaxPressure by enumeration over the intersection's phase table
      std::vector<double> pressure;
      for (const auto& phase : inter.phases) {
        double p = 0;
        for (int m : phase.permitted) {
          const auto& mv = net.movement(m);
          if (mv.turn == Turn::Right) continue;
          const auto& down = net.road(mv.downstream_road);
          const double out = net.is_real(down.to) ? mean_over(counts, down.lanes) : 0.0;
          p += mean_over(counts, mv.in_lanes) - out;
        }
        pressure.push_back(p);
      }
      int best = 0;
      for (int a = 1; a < static_cast<int>(pressure.size()); ++a)
        if (pressure[a] > pressure[best]) best = a;
      if (mp_actions[i] != best) ++mp_bad;
      const auto& topo = env.agents()[i];
      const auto lib_pressure = phase_pressures(topo, obs[i].movement_counts, downstream_counts(env.sim(), topo));
      for (std::size_t a = 0; a < pressure.size(); ++a)
        if (std::abs(lib_pressure[a] - pressure[a]) > 1e-12) ++pressure_bad;
      if (*std::max_element(pressure.begin(), pressure.end()) != pressure[0]) ++nontrivial;

      // SOTL at a random (current phase, elapsed) pair
      const int n = static_cast<int>(inter.phases.size());
      const int current = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      const int elapsed = 10 * static_cast<int>(rng.below(9));
      std::vector<double> demand;
      for (const auto& phase : inter.phases) {
        double d = 0;
        for (int m : phase.permitted)
          if (net.movement(m).turn != Turn::Right) d += mean_over(counts, net.movement(m).in_lanes);
        demand.push_back(d);
      }
      int other = -1;
      for (int off = 1; off < n; ++off) {
        const int a = (current + off) % n;
        if (other < 0 || demand[a] > demand[other]) other = a;
      }
      int expect = current;
      if (elapsed >= sp.max_green_s) expect = other;
      else if (demand[current] < sp.keep_threshold && demand[other] > demand[current]) expect = other;
      if (sotl_decide(phase_demands(topo, obs[i].movement_counts), current, elapsed, sp) != expect) ++sotl_bad;
    }
    driver.reset(env);
    obs = env.step(driver.act(env, obs)).observations;
  }
  (void)lane_mean;
  return {mp_bad == 0 && sotl_bad == 0 && pressure_bad == 0 && nontrivial > 0,
          std::to_string(states) + " states (" + std::to_string(nontrivial) +
              " where phase 0 is not best); MaxPressure mismatches " + std::to_string(mp_bad) +
              ", pressure mismatches " + std::to_string(pressure_bad) + ", SOTL mismatches " + std::to_string(sotl_bad)};
}

// ---- 6-9 ----

struct RunResult {
  std::uint64_t seed = 0;
  bool comm = true;
  PhaseTarget target = PhaseTarget::Replay;
  double final_phase_loss = 0.0;
  MetricReport eval;
  nn::ParamStore params;
  double seconds = 0.0;
};

constexpr int kFrames = 15000;
constexpr int kEvalEpisodes = 5;
constexpr std::uint64_t kEvalSeed = 1000;
constexpr std::uint64_t kSeeds[] = {1, 2, 3};

std::shared_ptr<const Scenario> experiment_scenario() {
  static auto s = test::grid(2, 2, 300, 1800, 2024);
  return s;
}

TrainConfig experiment_config(std::uint64_t seed, bool comm, PhaseTarget target) {
  TrainConfig c;
  c.total_frames = kFrames;
  c.seed = seed;
  c.comm = comm;
  c.phase_target = target;
  c.log_every = 500;
  return c;
}

struct Experiments {
  std::vector<RunResult> runs;
  std::vector<MetricReport> baselines;  // fixed, maxpressure
  double seconds = 0.0;

  const RunResult* find(std::uint64_t seed, bool comm, PhaseTarget target) const {
    for (const auto& r : runs)
      if (r.seed == seed && r.comm == comm && r.target == target) return &r;
    return nullptr;
  }
};

RunResult train_and_evaluate(std::uint64_t seed, bool comm, PhaseTarget target) {
  const auto t0 = Clock::now();
  RunResult r;
  r.seed = seed;
  r.comm = comm;
  r.target = target;
  auto result = run_training(experiment_scenario(), experiment_config(seed, comm, target));
  for (auto it = result.log.rbegin(); it != result.log.rend(); ++it)
    if (it->losses) {
      r.final_phase_loss = it->losses->phase;
      break;
    }
  UniLightController policy(result.params, comm);
  r.eval = evaluate(policy, experiment_scenario(), kEvalEpisodes, kEvalSeed);
  r.params = std::move(result.params);
  r.seconds = seconds_since(t0);
  std::fprintf(stderr, "  seed %llu %s %s: final L_p %.4f, eval travel time %.2f (%.0f s)\n",
               static_cast<unsigned long long>(seed), comm ? "unicomm" : "no-com",
               target == PhaseTarget::Replay ? "replay" : "current", r.final_phase_loss, r.eval.mean.travel_time,
               r.seconds);
  return r;
}

Experiments& experiments(bool need_current, bool need_nocomm) {
  static Experiments e;
  static bool have_current = false, have_nocomm = false, have_base = false;
  const auto t0 = Clock::now();
  if (!have_base) {
    for (const char* name : {"fixed", "maxpressure"}) {
      auto c = make_baseline(name);
      e.baselines.push_back(evaluate(*c, experiment_scenario(), kEvalEpisodes, kEvalSeed));
    }
    for (auto s : kSeeds) e.runs.push_back(train_and_evaluate(s, true, PhaseTarget::Replay));
    have_base = true;
  }
  if (need_current && !have_current) {
    for (auto s : kSeeds) e.runs.push_back(train_and_evaluate(s, true, PhaseTarget::Current));
    have_current = true;
  }
  if (need_nocomm && !have_nocomm) {
    for (auto s : kSeeds) e.runs.push_back(train_and_evaluate(s, false, PhaseTarget::Replay));
    have_nocomm = true;
  }
  e.seconds += seconds_since(t0);
  return e;
}

Verdict phase_target_comparison() {
  auto& e = experiments(true, false);
  std::vector<double> replay, current;
  double secs = 0;
  for (auto s : kSeeds) {
    replay.push_back(e.find(s, true, PhaseTarget::Replay)->final_phase_loss);
    current.push_back(e.find(s, true, PhaseTarget::Current)->final_phase_loss);
    secs += e.find(s, true, PhaseTarget::Replay)->seconds + e.find(s, true, PhaseTarget::Current)->seconds;
  }
  const double mr = median(replay), mc = median(current);
  return {mr <= mc && secs <= 30 * 60,
          "final L_p replay-target " + join(replay, 4) + " median " + fmt(mr, 4) + " vs current-target " +
              join(current, 4) + " median " + fmt(mc, 4) + ", " + fmt(secs, 0) + " s"};
}

Verdict comm_comparison() {
  auto& e = experiments(false, true);
  std::vector<double> with, without;
  double secs = 0;
  for (auto s : kSeeds) {
    with.push_back(e.find(s, true, PhaseTarget::Replay)->eval.mean.travel_time);
    without.push_back(e.find(s, false, PhaseTarget::Replay)->eval.mean.travel_time);
    secs += e.find(s, true, PhaseTarget::Replay)->seconds + e.find(s, false, PhaseTarget::Replay)->seconds;
  }
  const double fixed = e.baselines[0].mean.travel_time, mp = e.baselines[1].mean.travel_time;
  const double mw = median(with), mn = median(without);
  const bool order = mw <= mn;
  const bool beat_fixed = mw <= 0.9 * fixed && mn <= 0.9 * fixed;
  const bool near_mp = mn <= 1.1 * mp;
  std::string detail = "median travel time UniComm " + join(with) + " -> " + fmt(mw, 2) + ", no-com " + join(without) +
                       " -> " + fmt(mn, 2) + ", FixedTime " + fmt(fixed, 2) + ", MaxPressure " + fmt(mp, 2) + "; " +
                       "UniComm<=no-com " + (order ? "yes" : "no") + ", both >=10% under FixedTime " +
                       (beat_fixed ? "yes" : "no") + ", no-com within 10% of MaxPressure " + (near_mp ? "yes" : "no") +
                       ", " + fmt(secs, 0) + " s";
  return {order && beat_fixed && near_mp && secs <= 60 * 60, detail};
}

Verdict metric_identities() {
  auto& e = experiments(true, true);
  int reports = 0, bad = 0;
  auto check = [&](const MetricReport& r) {
    ++reports;
    bool ok = r.identities_hold;
    for (const auto& m : r.episodes)
      ok = ok && m.throughput + m.in_system == m.injected && m.delay >= 0 && m.wait_time <= m.travel_time;
    if (!ok) ++bad;
  };
  for (const auto& r : e.runs) check(r.eval);
  for (const auto& r : e.baselines) check(r);
  return {bad == 0 && reports > 0, std::to_string(reports) + " evaluation reports (" +
                                       std::to_string(reports * kEvalEpisodes) + " episodes), " +
                                       std::to_string(bad) + " with violations"};
}

Verdict checkpoint_round_trip(const std::filesystem::path& dir) {
  auto& e = experiments(false, false);
  const RunResult& r = e.runs.front();
  UniLightController before(r.params, r.comm);
  const auto pre = evaluate(before, experiment_scenario(), kEvalEpisodes, kEvalSeed);
  const auto path = (dir / "roundtrip.ckpt").string();
  nn::save_checkpoint_file(r.params, path);
  UniLightController after(nn::load_checkpoint_file(path), r.comm);
  const auto post = evaluate(after, experiment_scenario(), kEvalEpisodes, kEvalSeed);
  std::ostringstream a, b;
  write_metrics_csv(a, "unilight", "unicomm", pre);
  write_metrics_csv(b, "unilight", "unicomm", post);
  const bool same = pre.episodes == post.episodes && a.str() == b.str();
  return {same, std::string("pre-save and post-load metrics ") + (same ? "identical" : "differ") + " over " +
                    std::to_string(kEvalEpisodes) + " episodes (travel time " + fmt(pre.mean.travel_time, 4) + " vs " +
                    fmt(post.mean.travel_time, 4) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto want = [&](int k) { return wanted.empty() || wanted.count(k) > 0; };

  const auto dir = std::filesystem::temp_directory_path() / ("tsc_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);

  const std::vector<std::pair<int, std::string>> names = {
      {1, "gradient correctness"},     {2, "simulator conservation"}, {3, "micro-scenario oracles"},
      {4, "determinism"},              {5, "controller oracles"},     {6, "phase prediction target"},
      {7, "communication vs no-com"}, {8, "metric identities"},      {9, "checkpoint round-trip"},
  };
  int failures = 0;
  for (const auto& [k, name] : names) {
    if (!want(k)) continue;
    Verdict v;
    try {
      switch (k) {
        case 1: v = gradients(); break;
        case 2: v = conservation(); break;
        case 3: v = micro_oracles(); break;
        case 4: v = determinism(dir); break;
        case 5: v = controller_oracles(); break;
        case 6: v = phase_target_comparison(); break;
        case 7: v = comm_comparison(); break;
        case 8: v = metric_identities(); break;
        case 9: v = checkpoint_round_trip(dir); break;
      }
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", k, name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::filesystem::remove_all(dir);
  return failures == 0 ? 0 : 1;
}
