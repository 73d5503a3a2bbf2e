// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsc/tsc.h"

namespace {

struct ScenarioHandle {
  tsc_scenario* p = nullptr;
  ~ScenarioHandle() { tsc_scenario_free(p); }
};

int report(tsc_status s) {
  std::fprintf(stderr, "tsc: %s: %s\n", tsc_status_name(s), tsc_last_error());
  return 1;
}

int write_text(const std::string& path, const char* text) {
  if (path.empty() || path == "-") {
    std::fputs(text, stdout);
    return 0;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    std::fprintf(stderr, "tsc: cannot write '%s'\n", path.c_str());
    return 1;
  }
  out << text;
  return 0;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic signal control: simulation, training and evaluation"};
  app.require_subcommand(1);

  // gen
  tsc_grid_options grid;
  tsc_grid_options_default(&grid);
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic grid scenario");
  gen->add_option("--rows", grid.rows, "Intersection rows");
  gen->add_option("--cols", grid.cols, "Intersection columns");
  gen->add_option("--min-lanes", grid.min_lanes);
  gen->add_option("--max-lanes", grid.max_lanes);
  gen->add_option("--min-length", grid.min_length_m, "Shortest road (m)");
  gen->add_option("--max-length", grid.max_length_m, "Longest road (m)");
  gen->add_option("--vph", grid.vehicles_per_hour, "Vehicles per hour per entry road");
  gen->add_option("--demand-duration", grid.demand_duration_s, "Seconds of demand");
  gen->add_option("--horizon", grid.horizon_s, "Episode length (s)");
  gen->add_option("--seed", grid.seed);
  gen->add_option("--out", gen_out, "Output file (default stdout)");

  // shared by the rest
  std::string scenario_path, config_path, out_path, controller = "fixed", comm = "none", phase_target, checkpoint,
                                                    trace_path, log_path;
  std::uint64_t seed = 0;
  int episodes = 10;
  bool seed_set = false;

  auto* train = app.add_subcommand("train", "Train UniLight (optionally with UniComm)");
  train->add_option("--scenario", scenario_path)->required();
  train->add_option("--config", config_path, "Config document with a train section");
  train->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
  train->add_option("--comm", comm)->check(CLI::IsMember({"none", "unicomm"}));
  train->add_option("--phase-target", phase_target)->check(CLI::IsMember({"replay", "current"}));
  train->add_option("--out", out_path, "Checkpoint path")->required();
  train->add_option("--log", log_path, "Training log CSV");

  auto add_eval_flags = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario_path)->required();
    cmd->add_option("--controller", controller)->check(CLI::IsMember({"fixed", "sotl", "maxpressure", "unilight"}));
    cmd->add_option("--checkpoint", checkpoint, "UniLight checkpoint");
    cmd->add_option("--comm", comm)->check(CLI::IsMember({"none", "unicomm"}));
    cmd->add_option("--seed", seed);
    cmd->add_option("--out", out_path);
  };
  auto* eval = app.add_subcommand("eval", "Evaluate a controller; writes the metrics CSV");
  add_eval_flags(eval);
  eval->add_option("--episodes", episodes);
  eval->add_option("--trace", trace_path, "Also dump the first episode's events here");

  auto* compare = app.add_subcommand("compare", "Evaluate every baseline (and a checkpoint if given)");
  compare->add_option("--scenario", scenario_path)->required();
  compare->add_option("--checkpoint", checkpoint);
  compare->add_option("--comm", comm)->check(CLI::IsMember({"none", "unicomm"}));
  compare->add_option("--seed", seed);
  compare->add_option("--episodes", episodes);
  compare->add_option("--out", out_path);

  auto* trace = app.add_subcommand("trace", "Per-tick event dump of one episode");
  add_eval_flags(trace);

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    char* text = nullptr;
    if (auto s = tsc_generate_grid(&grid, &text); s != TSC_OK) return report(s);
    const int rc = write_text(gen_out, text);
    tsc_string_free(text);
    return rc;
  }

  ScenarioHandle sc;
  if (auto s = tsc_scenario_load(scenario_path.c_str(), &sc.p); s != TSC_OK) return report(s);

  if (train->parsed()) {
    nlohmann::ordered_json doc = {{"format", 1}, {"train", nlohmann::ordered_json::object()}};
    try {
      if (!config_path.empty()) doc = nlohmann::ordered_json::parse(read_text(config_path));
    } catch (const std::exception& e) {
      std::fprintf(stderr, "tsc: %s\n", e.what());
      return 1;
    }
    if (!doc.contains("train")) doc["train"] = nlohmann::ordered_json::object();
    if (seed_set) doc["train"]["seed"] = seed;
    if (train->count("--comm")) doc["train"]["comm"] = comm == "unicomm";
    if (!phase_target.empty()) doc["train"]["phase_target"] = phase_target;
    const std::string text = doc.dump();
    tsc_train_summary summary{};
    if (auto s = tsc_train(sc.p, text.c_str(), log_path.empty() ? nullptr : log_path.c_str(), out_path.c_str(), &summary);
        s != TSC_OK)
      return report(s);
    std::fprintf(stderr, "trained %d frames, %d gradient steps; final td %.4f phase %.4f volume %.4f\n",
                 summary.frames, summary.gradient_steps, summary.final_td_loss, summary.final_phase_loss,
                 summary.final_volume_loss);
    return 0;
  }

  tsc_eval_options opts;
  tsc_eval_options_default(&opts);
  opts.controller = controller.c_str();
  opts.checkpoint = checkpoint.empty() ? nullptr : checkpoint.c_str();
  opts.comm = comm == "unicomm";
  opts.episodes = episodes;
  opts.seed = seed;

  if (eval->parsed() || trace->parsed()) {
    if (!trace_path.empty() || trace->parsed()) {
      char* text = nullptr;
      if (auto s = tsc_trace(sc.p, &opts, &text); s != TSC_OK) return report(s);
      const int rc = write_text(trace->parsed() ? out_path : trace_path, text);
      tsc_string_free(text);
      if (rc != 0 || trace->parsed()) return rc;
    }
    char* csv = nullptr;
    if (auto s = tsc_evaluate(sc.p, &opts, nullptr, &csv); s != TSC_OK) return report(s);
    const int rc = write_text(out_path, csv);
    tsc_string_free(csv);
    return rc;
  }

  // compare
  std::vector<std::string> names = {"fixed", "sotl", "maxpressure"};
  if (!checkpoint.empty()) names.push_back("unilight");
  std::string table;
  for (std::size_t i = 0; i < names.size(); ++i) {
    opts.controller = names[i].c_str();
    char* csv = nullptr;
    if (auto s = tsc_evaluate(sc.p, &opts, nullptr, &csv); s != TSC_OK) return report(s);
    std::string text = csv;
    tsc_string_free(csv);
    if (i > 0) text = text.substr(text.find('\n') + 1);  // one header
    table += text;
  }
  return write_text(out_path, table.c_str());
}
