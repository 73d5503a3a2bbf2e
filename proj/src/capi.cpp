// SPDX-License-Identifier: Apache-2.0
#include "tsc/tsc.h"

#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "env.hpp"
#include "error.hpp"
#include "generator.hpp"
#include "harness.hpp"
#include "params.hpp"
#include "roadnet.hpp"
#include "trainer.hpp"

struct tsc_scenario {
  std::shared_ptr<const tsc::Scenario> scenario;
};

struct tsc_env {
  std::unique_ptr<tsc::Environment> env;
};

namespace {

thread_local std::string g_last_error;

static_assert(static_cast<int>(tsc::ErrorCode::Io) + 1 == TSC_ERR_IO, "status codes follow ErrorCode order");

tsc_status fail(tsc_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
tsc_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return TSC_OK;
  } catch (const tsc::Error& e) {
    return fail(static_cast<tsc_status>(static_cast<int>(e.code()) + 1), e.what());
  } catch (const std::bad_alloc&) {
    return fail(TSC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TSC_ERR_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

tsc::Environment* checked_env(const tsc_env* env) {
  if (!env || !env->env) throw tsc::Error(tsc::ErrorCode::UnknownEntity, "null environment handle");
  return env->env.get();
}

void check_agent(const tsc::Environment& env, int agent) {
  if (agent < 0 || agent >= env.num_agents())
    throw tsc::Error(tsc::ErrorCode::UnknownEntity, "agent " + std::to_string(agent));
}

std::unique_ptr<tsc::Controller> make_controller(const tsc_eval_options& o) {
  const std::string name = o.controller ? o.controller : "";
  if (name == "unilight") {
    if (!o.checkpoint) throw tsc::Error(tsc::ErrorCode::InvalidConfig, "unilight needs a checkpoint");
    return std::make_unique<tsc::UniLightController>(tsc::nn::load_checkpoint_file(o.checkpoint), o.comm != 0);
  }
  return tsc::make_baseline(name);
}

}  // namespace

#define TSC_REQUIRE(cond, what) \
  do {                          \
    if (!(cond)) return fail(TSC_ERR_INVALID_ARGUMENT, what); \
  } while (0)

extern "C" {

const char* tsc_status_name(tsc_status status) {
  switch (status) {
    case TSC_OK: return "Ok";
    case TSC_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case TSC_ERR_INTERNAL: return "Internal";
    default: break;
  }
  if (status > TSC_OK && status <= TSC_ERR_IO)
    return tsc::error_code_name(static_cast<tsc::ErrorCode>(static_cast<int>(status) - 1)).data();
  return "Unknown";
}

const char* tsc_last_error(void) { return g_last_error.c_str(); }

void tsc_string_free(char* s) { delete[] s; }

tsc_status tsc_scenario_parse(const char* json, tsc_scenario** out) {
  TSC_REQUIRE(json && out, "null argument");
  return guarded([&] {
    auto s = std::make_shared<tsc::Scenario>(tsc::parse_scenario(json));
    *out = new tsc_scenario{std::move(s)};
  });
}

tsc_status tsc_scenario_load(const char* path, tsc_scenario** out) {
  TSC_REQUIRE(path && out, "null argument");
  return guarded([&] {
    auto s = std::make_shared<tsc::Scenario>(tsc::load_scenario(path));
    *out = new tsc_scenario{std::move(s)};
  });
}

tsc_status tsc_scenario_to_json(const tsc_scenario* scenario, char** out) {
  TSC_REQUIRE(scenario && out, "null argument");
  return guarded([&] { *out = copy_string(tsc::print_scenario(*scenario->scenario)); });
}

void tsc_scenario_free(tsc_scenario* scenario) { delete scenario; }

void tsc_grid_options_default(tsc_grid_options* options) {
  if (!options) return;
  const tsc::GridOptions d;
  options->rows = d.rows;
  options->cols = d.cols;
  options->min_lanes = d.min_lanes;
  options->max_lanes = d.max_lanes;
  options->min_length_m = d.min_length_m;
  options->max_length_m = d.max_length_m;
  options->vehicles_per_hour = d.vehicles_per_hour;
  options->demand_start_s = d.demand_start_s;
  options->demand_duration_s = d.demand_duration_s;
  options->left_ratio = d.left_ratio;
  options->right_ratio = d.right_ratio;
  options->routes_per_entry = d.routes_per_entry;
  options->jitter_fraction = d.jitter_fraction;
  options->horizon_s = d.sim.horizon_s;
  options->seed = d.seed;
}

tsc_status tsc_generate_grid(const tsc_grid_options* options, char** json_out) {
  TSC_REQUIRE(options && json_out, "null argument");
  return guarded([&] {
    tsc::GridOptions g;
    g.rows = options->rows;
    g.cols = options->cols;
    g.min_lanes = options->min_lanes;
    g.max_lanes = options->max_lanes;
    g.min_length_m = options->min_length_m;
    g.max_length_m = options->max_length_m;
    g.vehicles_per_hour = options->vehicles_per_hour;
    g.demand_start_s = options->demand_start_s;
    g.demand_duration_s = options->demand_duration_s;
    g.left_ratio = options->left_ratio;
    g.right_ratio = options->right_ratio;
    g.routes_per_entry = options->routes_per_entry;
    g.jitter_fraction = options->jitter_fraction;
    g.sim.horizon_s = options->horizon_s;
    g.seed = options->seed;
    *json_out = copy_string(tsc::generate_grid(g));
  });
}

tsc_status tsc_env_create(const tsc_scenario* scenario, uint64_t seed, tsc_env** out) {
  TSC_REQUIRE(scenario && out, "null argument");
  return guarded([&] { *out = new tsc_env{std::make_unique<tsc::Environment>(scenario->scenario, seed)}; });
}

void tsc_env_free(tsc_env* env) { delete env; }

tsc_status tsc_env_reset(tsc_env* env, uint64_t seed) {
  return guarded([&] { checked_env(env)->reset(seed); });
}

int tsc_env_num_agents(const tsc_env* env) { return env && env->env ? env->env->num_agents() : 0; }

tsc_status tsc_env_num_phases(const tsc_env* env, int agent, int* out) {
  TSC_REQUIRE(out, "null argument");
  return guarded([&] {
    auto* e = checked_env(env);
    check_agent(*e, agent);
    *out = e->agents()[agent].num_phases();
  });
}

tsc_status tsc_env_num_movements(const tsc_env* env, int agent, int* out) {
  TSC_REQUIRE(out, "null argument");
  return guarded([&] {
    auto* e = checked_env(env);
    check_agent(*e, agent);
    *out = e->agents()[agent].num_movements();
  });
}

tsc_status tsc_env_current_phase(const tsc_env* env, int agent, int* out) {
  TSC_REQUIRE(out, "null argument");
  return guarded([&] {
    auto* e = checked_env(env);
    check_agent(*e, agent);
    *out = e->sim().active_phase(e->agents()[agent].intersection);
  });
}

tsc_status tsc_env_movement_counts(const tsc_env* env, int agent, double* counts, size_t len) {
  TSC_REQUIRE(counts || len == 0, "null argument");
  return guarded([&] {
    auto* e = checked_env(env);
    check_agent(*e, agent);
    const auto& topo = e->agents()[agent];
    for (size_t k = 0; k < len && k < topo.movements.size(); ++k) counts[k] = e->sim().movement_mean_count(topo.movements[k]);
  });
}

tsc_status tsc_env_step(tsc_env* env, const int* actions, size_t n, double* rewards, int* done) {
  TSC_REQUIRE(actions || n == 0, "null argument");
  return guarded([&] {
    auto* e = checked_env(env);
    const auto r = e->step(std::span<const int>(actions, n));
    if (rewards)
      for (size_t i = 0; i < r.rewards.size(); ++i) rewards[i] = r.rewards[i];
    if (done) *done = r.done ? 1 : 0;
  });
}

tsc_status tsc_train(const tsc_scenario* scenario, const char* config_json, const char* log_path,
                     const char* checkpoint_path, tsc_train_summary* summary) {
  TSC_REQUIRE(scenario, "null scenario");
  return guarded([&] {
    const tsc::TrainConfig config = config_json ? tsc::parse_train_config(config_json) : tsc::TrainConfig{};
    const auto result =
        tsc::run_training(scenario->scenario, config, log_path ? log_path : "", checkpoint_path ? checkpoint_path : "");
    if (summary) {
      *summary = {};
      summary->frames = config.total_frames;
      summary->gradient_steps = result.gradient_steps;
      for (auto it = result.log.rbegin(); it != result.log.rend(); ++it) {
        if (!it->losses) continue;
        summary->final_td_loss = it->losses->td;
        summary->final_phase_loss = it->losses->phase;
        summary->final_volume_loss = it->losses->volume;
        break;
      }
    }
  });
}

void tsc_eval_options_default(tsc_eval_options* options) {
  if (!options) return;
  options->controller = "fixed";
  options->checkpoint = nullptr;
  options->comm = 0;
  options->episodes = 10;
  options->seed = 0;
}

tsc_status tsc_evaluate(const tsc_scenario* scenario, const tsc_eval_options* options, tsc_metrics* metrics,
                        char** csv_out) {
  TSC_REQUIRE(scenario && options, "null argument");
  return guarded([&] {
    auto controller = make_controller(*options);
    const auto report = tsc::evaluate(*controller, scenario->scenario, options->episodes, options->seed);
    if (metrics) {
      metrics->travel_time = report.mean.travel_time;
      metrics->delay = report.mean.delay;
      metrics->wait_time = report.mean.wait_time;
      metrics->throughput = report.mean_throughput;
      metrics->travel_time_std = report.std_travel_time;
      metrics->delay_std = report.std_delay;
      metrics->wait_time_std = report.std_wait_time;
      metrics->throughput_std = report.std_throughput;
      metrics->episodes = static_cast<int>(report.episodes.size());
      metrics->identities_hold = report.identities_hold ? 1 : 0;
    }
    if (csv_out) {
      std::ostringstream os;
      tsc::write_metrics_csv(os, controller->name(), controller->comm(), report);
      *csv_out = copy_string(os.str());
    }
  });
}

tsc_status tsc_trace(const tsc_scenario* scenario, const tsc_eval_options* options, char** out) {
  TSC_REQUIRE(scenario && options && out, "null argument");
  return guarded([&] {
    auto controller = make_controller(*options);
    tsc::Environment env(scenario->scenario, options->seed);
    std::ostringstream os;
    os << "tick,vehicle,event,lane\n";
    const auto& net = scenario->scenario->network;
    tsc::run_episode(*controller, env, options->seed, nullptr,
                     [&](const tsc::TraceEvent& e) { os << tsc::format_trace_event(net, e) << '\n'; });
    *out = copy_string(os.str());
  });
}

}  // extern "C"
