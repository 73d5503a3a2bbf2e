// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "generator.hpp"
#include "params.hpp"
#include "random.hpp"
#include "roadnet.hpp"
#include "tensor.hpp"

namespace tsc::test {

using json = nlohmann::ordered_json;

inline std::shared_ptr<const Scenario> share(Scenario s) { return std::make_shared<const Scenario>(std::move(s)); }

inline std::string grid_json(int rows, int cols, double vph, double horizon_s, std::uint64_t seed,
                             double demand_s = -1.0) {
  GridOptions o;
  o.rows = rows;
  o.cols = cols;
  o.vehicles_per_hour = vph;
  o.sim.horizon_s = horizon_s;
  o.demand_duration_s = demand_s < 0 ? horizon_s : demand_s;
  o.seed = seed;
  return generate_grid(o);
}

inline std::shared_ptr<const Scenario> grid(int rows, int cols, double vph, double horizon_s, std::uint64_t seed) {
  return share(parse_scenario(grid_json(rows, cols, vph, horizon_s, seed)));
}

// Replaces the flows of a scenario document.
inline std::string with_flows(const std::string& doc_text, const json& flows) {
  json doc = json::parse(doc_text);
  doc["flows"] = flows;
  return doc.dump();
}

inline std::string with_sim(const std::string& doc_text, const json& sim) {
  json doc = json::parse(doc_text);
  for (const auto& [k, v] : sim.items()) doc["sim"][k] = v;
  return doc.dump();
}

// Two virtual intersections joined by a road pair; A->B is `length` metres
// with `lanes` lanes.
inline std::string corridor_json(double length, int lanes, const json& flows, double horizon_s = 600.0) {
  json lane_list = json::array();
  for (int i = 0; i < lanes; ++i) lane_list.push_back(json::object());
  json doc = {
      {"format", 1},
      {"meta", {{"seed", 0}}},
      {"sim", {{"horizon", horizon_s}}},
      {"intersections",
       {{{"id", "A"}, {"kind", "virtual"}, {"x", 0.0}, {"y", 0.0}},
        {{"id", "B"}, {"kind", "virtual"}, {"x", length}, {"y", 0.0}}}},
      {"roads",
       {{{"id", "AB"}, {"from", "A"}, {"to", "B"}, {"length", length}, {"lanes", lane_list}},
        {{"id", "BA"}, {"from", "B"}, {"to", "A"}, {"length", length}, {"lanes", {json::object()}}}}},
      {"flows", flows}};
  return doc.dump();
}

// Three-arm intersection X fed from W, E and S. Lanes: W->X [S, R],
// E->X [L, S], S->X [L, R]; exits are single untagged lanes.
inline std::string tee_json(const json& flows, double horizon_s = 600.0, double wx_length = 300.0,
                            double xe_length = 300.0, const json& sim = json::object()) {
  auto lanes = [](std::initializer_list<const char*> tags) {
    json out = json::array();
    for (const char* t : tags) out.push_back({{"turn", t}});
    return out;
  };
  auto road = [](const char* id, const char* from, const char* to, double len, json lanes) {
    return json{{"id", id}, {"from", from}, {"to", to}, {"length", len}, {"lanes", std::move(lanes)}};
  };
  auto pair = [](const char* in, const char* out) { return json::array({in, out}); };
  json exit_lane = json::array({json::object()});
  json doc = {
      {"format", 1},
      {"meta", {{"seed", 0}}},
      {"sim", {{"horizon", horizon_s}}},
      {"intersections",
       {{{"id", "X"}, {"kind", "real"}, {"x", 0.0}, {"y", 0.0}},
        {{"id", "W"}, {"kind", "virtual"}, {"x", -300.0}, {"y", 0.0}},
        {{"id", "E"}, {"kind", "virtual"}, {"x", 300.0}, {"y", 0.0}},
        {{"id", "S"}, {"kind", "virtual"}, {"x", 0.0}, {"y", -300.0}}}},
      {"roads",
       {road("WX", "W", "X", wx_length, lanes({"S", "R"})), road("EX", "E", "X", 300.0, lanes({"L", "S"})),
        road("SX", "S", "X", 300.0, lanes({"L", "R"})), road("XW", "X", "W", 300.0, exit_lane),
        road("XE", "X", "E", xe_length, exit_lane), road("XS", "X", "S", 300.0, exit_lane)}},
      {"phases", json::array({json{{"intersection", "X"},
                                   {"phases", json::array({json::array({pair("WX", "XE"), pair("EX", "XW"), pair("WX", "XS")}),
                                                           json::array({pair("SX", "XW"), pair("SX", "XE")}),
                                                           json::array({pair("EX", "XS"), pair("WX", "XS")})})}}})},
      {"flows", flows}};
  for (const auto& [k, v] : sim.items()) doc["sim"][k] = v;
  return doc.dump();
}

struct FdResult {
  int checked = 0;
  int failed = 0;
  double worst = 0.0;  // max |analytic - numeric| / (abs_tol + rel_tol * scale)
};

// Central differences of a scalar loss with respect to every entry of every
// parameter in the store.
inline FdResult finite_difference_check(nn::ParamStore& store, const std::function<nn::Var(nn::Graph&)>& loss,
                                        double rel_tol = 1e-4, double abs_tol = 1e-6, double h = 1e-6,
                                        const std::string& prefix = {}) {
  nn::Graph g;
  store.zero_grad();
  g.clear();
  g.backward(loss(g));
  std::vector<std::vector<double>> analytic;
  for (int i = 0; i < store.size(); ++i) analytic.push_back(store[i].grad.data);

  auto eval = [&]() {
    g.clear();
    return g.value(loss(g)).data[0];
  };
  FdResult r;
  for (int i = 0; i < store.size(); ++i) {
    if (store[i].name.rfind(prefix, 0) != 0) continue;
    for (std::size_t k = 0; k < store[i].value.size(); ++k) {
      double& x = store[i].value.data[k];
      const double saved = x;
      x = saved + h;
      const double up = eval();
      x = saved - h;
      const double down = eval();
      x = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[i][k];
      const double ratio = std::abs(a - numeric) / (abs_tol + rel_tol * std::max(std::abs(a), std::abs(numeric)));
      r.worst = std::max(r.worst, ratio);
      ++r.checked;
      if (ratio > 1.0) ++r.failed;
    }
  }
  return r;
}

inline nn::Matrix random_matrix(Rng& rng, int rows, int cols, double lo = -1.0, double hi = 1.0) {
  nn::Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

}  // namespace tsc::test
