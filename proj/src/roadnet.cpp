// SPDX-License-Identifier: Apache-2.0
#include "roadnet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace tsc {

using json = nlohmann::ordered_json;

char turn_tag(Turn t) {
  switch (t) {
    case Turn::Left: return 'L';
    case Turn::Straight: return 'S';
    case Turn::Right: return 'R';
  }
  return '?';
}

std::optional<Turn> parse_turn_tag(std::string_view tag) {
  if (tag == "L") return Turn::Left;
  if (tag == "S") return Turn::Straight;
  if (tag == "R") return Turn::Right;
  return std::nullopt;
}

bool Phase::permits(int movement) const {
  return std::binary_search(permitted.begin(), permitted.end(), movement);
}

namespace {

constexpr double kPi = std::numbers::pi;

double heading(const Intersection& from, const Intersection& to) {
  return std::atan2(to.y - from.y, to.x - from.x);
}

// Signed angle from heading a to heading b, in (-pi, pi].
double relative_angle(double a, double b) {
  double d = b - a;
  while (d <= -kPi) d += 2 * kPi;
  while (d > kPi) d -= 2 * kPi;
  return d;
}

// Right-hand traffic with y pointing north: left turns are counterclockwise.
std::optional<Turn> classify_turn(double delta) {
  const double quarter = kPi / 4;
  if (std::abs(delta) <= quarter) return Turn::Straight;
  if (delta > quarter && delta < 3 * quarter) return Turn::Left;
  if (delta < -quarter && delta > -3 * quarter) return Turn::Right;
  return std::nullopt;  // U-turn
}

}  // namespace

const Intersection& RoadNetwork::intersection(int id) const {
  if (id < 0 || id >= static_cast<int>(intersections_.size()))
    throw Error(ErrorCode::UnknownIntersection, "intersection id " + std::to_string(id));
  return intersections_[id];
}

const Road& RoadNetwork::road(int id) const {
  if (id < 0 || id >= static_cast<int>(roads_.size()))
    throw Error(ErrorCode::UnknownEntity, "road id " + std::to_string(id));
  return roads_[id];
}

const TrafficMovement& RoadNetwork::movement(int id) const {
  if (id < 0 || id >= static_cast<int>(movements_.size()))
    throw Error(ErrorCode::UnknownEntity, "movement id " + std::to_string(id));
  return movements_[id];
}

int RoadNetwork::intersection_id(std::string_view name) const {
  for (const auto& i : intersections_)
    if (i.name == name) return i.id;
  throw Error(ErrorCode::UnknownIntersection, std::string(name));
}

int RoadNetwork::road_id(std::string_view name) const {
  for (const auto& r : roads_)
    if (r.name == name) return r.id;
  throw Error(ErrorCode::DanglingReference, "unknown road '" + std::string(name) + "'");
}

std::optional<int> RoadNetwork::movement_between(int in_road, int out_road) const {
  const Road& in = road(in_road);
  for (int m : intersections_[in.to].movements) {
    const auto& mv = movements_[m];
    if (mv.upstream_road == in_road && mv.downstream_road == out_road) return m;
  }
  return std::nullopt;
}

std::string RoadNetwork::lane_name(int lane) const {
  const Lane& l = lanes_.at(lane);
  return roads_[l.road].name + ":" + std::to_string(l.index);
}

std::vector<int> RoadNetwork::real_intersections() const {
  std::vector<int> out;
  for (const auto& i : intersections_)
    if (i.kind == IntersectionKind::Real) out.push_back(i.id);
  return out;
}

bool RoadNetwork::is_real(int intersection_id) const {
  return intersection(intersection_id).kind == IntersectionKind::Real;
}

RoadNetwork RoadNetwork::build(const NetworkDesc& desc) {
  RoadNetwork net;
  std::map<std::string, int, std::less<>> inter_ids;
  for (const auto& d : desc.intersections) {
    if (d.name.empty()) throw Error(ErrorCode::MalformedDocument, "intersection with empty id");
    if (!inter_ids.emplace(d.name, static_cast<int>(net.intersections_.size())).second)
      throw Error(ErrorCode::InvalidTopology, "duplicate intersection '" + d.name + "'");
    Intersection i;
    i.id = static_cast<int>(net.intersections_.size());
    i.name = d.name;
    i.kind = d.kind;
    i.x = d.x;
    i.y = d.y;
    net.intersections_.push_back(std::move(i));
  }

  auto lookup_intersection = [&](const std::string& name, const std::string& ctx) {
    auto it = inter_ids.find(name);
    if (it == inter_ids.end())
      throw Error(ErrorCode::DanglingReference, ctx + " references unknown intersection '" + name + "'");
    return it->second;
  };

  std::set<std::pair<int, int>> endpoints;
  std::set<std::string, std::less<>> road_names;
  for (const auto& d : desc.roads) {
    if (d.name.empty()) throw Error(ErrorCode::MalformedDocument, "road with empty id");
    if (!road_names.insert(d.name).second)
      throw Error(ErrorCode::InvalidTopology, "duplicate road '" + d.name + "'");
    Road r;
    r.id = static_cast<int>(net.roads_.size());
    r.name = d.name;
    r.from = lookup_intersection(d.from, "road '" + d.name + "'");
    r.to = lookup_intersection(d.to, "road '" + d.name + "'");
    if (r.from == r.to) throw Error(ErrorCode::InvalidTopology, "road '" + d.name + "' is a loop");
    if (!(d.length_m > 0.0) || !std::isfinite(d.length_m))
      throw Error(ErrorCode::InvalidTopology, "road '" + d.name + "' needs a positive length");
    if (d.lanes.empty()) throw Error(ErrorCode::InvalidTopology, "road '" + d.name + "' has no lanes");
    if (!endpoints.emplace(r.from, r.to).second)
      throw Error(ErrorCode::InvalidTopology, "road '" + d.name + "' duplicates an existing (from, to) pair");
    r.length_m = d.length_m;
    for (std::size_t k = 0; k < d.lanes.size(); ++k) {
      Lane lane;
      lane.id = static_cast<int>(net.lanes_.size());
      lane.road = r.id;
      lane.index = static_cast<int>(k);
      lane.turn = d.lanes[k];
      r.lanes.push_back(lane.id);
      net.lanes_.push_back(lane);
    }
    net.intersections_[r.from].outgoing_roads.push_back(r.id);
    net.intersections_[r.to].incoming_roads.push_back(r.id);
    net.roads_.push_back(std::move(r));
  }

  for (const auto& i : net.intersections_) {
    const auto incoming = i.incoming_roads.size();
    if (incoming == 2)
      throw Error(ErrorCode::InvalidTopology, "intersection '" + i.name + "' has exactly two incoming roads");
    if (i.kind == IntersectionKind::Virtual && incoming != 1)
      throw Error(ErrorCode::InvalidTopology, "virtual intersection '" + i.name + "' must have exactly one incoming road");
    if (i.kind == IntersectionKind::Real && incoming < 3)
      throw Error(ErrorCode::InvalidTopology, "real intersection '" + i.name + "' needs at least three incoming roads");
  }

  // Movements from per-lane turn tags.
  for (auto& inter : net.intersections_) {
    if (inter.kind != IntersectionKind::Real) continue;
    for (int in_id : inter.incoming_roads) {
      const Road& in = net.roads_[in_id];
      const double in_heading = heading(net.intersections_[in.from], inter);
      std::array<std::vector<int>, kTurnCount> exits;
      for (int out_id : inter.outgoing_roads) {
        const Road& out = net.roads_[out_id];
        if (out.to == in.from) continue;  // U-turn
        const auto& a = net.intersections_[out.from];
        const auto& b = net.intersections_[out.to];
        if (a.x == b.x && a.y == b.y)
          throw Error(ErrorCode::InvalidTopology, "road '" + out.name + "' has coincident endpoints");
        auto t = classify_turn(relative_angle(in_heading, heading(a, b)));
        if (t) exits[static_cast<int>(*t)].push_back(out_id);
      }
      std::array<std::vector<int>, kTurnCount> lanes_by_turn;
      for (int lane_id : in.lanes) {
        const Lane& lane = net.lanes_[lane_id];
        if (!lane.turn)
          throw Error(ErrorCode::InvalidTopology,
                      "lane " + std::to_string(lane.index) + " of road '" + in.name + "' has no turn");
        lanes_by_turn[static_cast<int>(*lane.turn)].push_back(lane_id);
      }
      for (int t = 0; t < kTurnCount; ++t) {
        if (lanes_by_turn[t].empty()) continue;
        const char tag = turn_tag(static_cast<Turn>(t));
        if (exits[t].empty())
          throw Error(ErrorCode::InvalidTopology, "road '" + in.name + "' has " + tag +
                                                      " lanes but intersection '" + inter.name + "' has no such exit");
        if (exits[t].size() > 1)
          throw Error(ErrorCode::InvalidTopology, "turn " + std::string(1, tag) + " from road '" + in.name +
                                                      "' is ambiguous at '" + inter.name + "'");
        TrafficMovement mv;
        mv.id = static_cast<int>(net.movements_.size());
        mv.upstream_road = in_id;
        mv.via = inter.id;
        mv.downstream_road = exits[t].front();
        mv.turn = static_cast<Turn>(t);
        mv.in_lanes = lanes_by_turn[t];
        mv.out_lanes = net.roads_[mv.downstream_road].lanes;
        for (int lane_id : mv.in_lanes) net.lanes_[lane_id].movement = mv.id;
        inter.movements.push_back(mv.id);
        net.movements_.push_back(std::move(mv));
      }
    }
  }

  std::set<int> explicit_tables;
  for (const auto& table : desc.phase_tables) {
    const int iid = lookup_intersection(table.intersection, "phase table");
    auto& inter = net.intersections_[iid];
    if (inter.kind != IntersectionKind::Real)
      throw Error(ErrorCode::InvalidTopology, "virtual intersection '" + inter.name + "' cannot have phases");
    if (!explicit_tables.insert(iid).second)
      throw Error(ErrorCode::InvalidTopology, "duplicate phase table for '" + inter.name + "'");
    if (table.phases.empty())
      throw Error(ErrorCode::InvalidTopology, "empty phase table for '" + inter.name + "'");
    std::vector<int> rights;
    for (int m : inter.movements)
      if (net.movements_[m].turn == Turn::Right) rights.push_back(m);
    for (const auto& spec : table.phases) {
      std::set<int> permitted(rights.begin(), rights.end());
      for (const auto& [in_name, out_name] : spec) {
        auto in_it = road_names.find(in_name);
        auto out_it = road_names.find(out_name);
        if (in_it == road_names.end() || out_it == road_names.end())
          throw Error(ErrorCode::DanglingReference,
                      "phase at '" + inter.name + "' references unknown road " + in_name + "/" + out_name);
        auto mv = net.movement_between(net.road_id(in_name), net.road_id(out_name));
        if (!mv || net.movements_[*mv].via != iid)
          throw Error(ErrorCode::InvalidTopology,
                      "phase at '" + inter.name + "' names a non-existent movement " + in_name + "->" + out_name);
        permitted.insert(*mv);
      }
      Phase p;
      p.id = static_cast<int>(inter.phases.size());
      p.permitted.assign(permitted.begin(), permitted.end());
      inter.phases.push_back(std::move(p));
    }
  }

  for (auto& inter : net.intersections_) {
    if (inter.kind != IntersectionKind::Real || explicit_tables.count(inter.id)) continue;
    try {
      inter.phases = canonical_phases(net, inter.id);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnsupportedGeometry) throw;
      throw Error(ErrorCode::InvalidTopology,
                  "intersection '" + inter.name + "' is not a standard 4-arm intersection and needs an explicit phase table");
    }
  }
  return net;
}

std::vector<Phase> canonical_phases(const RoadNetwork& net, int intersection_id) {
  const Intersection& inter = net.intersection(intersection_id);
  if (inter.kind != IntersectionKind::Real || inter.incoming_roads.size() != 4 || inter.movements.size() != 12)
    throw Error(ErrorCode::UnsupportedGeometry, "intersection '" + inter.name + "' is not a 12-movement 4-arm intersection");

  // Approach arm by bearing from the intersection to the incoming road's origin.
  enum Arm { North = 0, South = 1, East = 2, West = 3 };
  std::array<int, 4> arm_road{-1, -1, -1, -1};
  for (int road_id : inter.incoming_roads) {
    const auto& from = net.intersection(net.road(road_id).from);
    const double b = std::atan2(from.y - inter.y, from.x - inter.x);
    int arm = -1;
    const double tol = kPi / 4;
    if (std::abs(relative_angle(b, kPi / 2)) < tol) arm = North;
    else if (std::abs(relative_angle(b, -kPi / 2)) < tol) arm = South;
    else if (std::abs(relative_angle(b, 0.0)) < tol) arm = East;
    else if (std::abs(relative_angle(b, kPi)) < tol) arm = West;
    if (arm < 0 || arm_road[arm] >= 0)
      throw Error(ErrorCode::UnsupportedGeometry, "approaches of '" + inter.name + "' are not axis-aligned");
    arm_road[arm] = road_id;
  }

  auto movement_of = [&](Arm arm, Turn turn) {
    for (int m : inter.movements) {
      const auto& mv = net.movement(m);
      if (mv.upstream_road == arm_road[arm] && mv.turn == turn) return m;
    }
    throw Error(ErrorCode::UnsupportedGeometry, "missing movement at '" + inter.name + "'");
  };

  std::vector<int> rights;
  for (int arm = 0; arm < 4; ++arm) rights.push_back(movement_of(static_cast<Arm>(arm), Turn::Right));

  const std::array<std::array<std::pair<Arm, Turn>, 2>, 8> table{{
      {{{North, Turn::Straight}, {South, Turn::Straight}}},
      {{{North, Turn::Left}, {South, Turn::Left}}},
      {{{East, Turn::Straight}, {West, Turn::Straight}}},
      {{{East, Turn::Left}, {West, Turn::Left}}},
      {{{North, Turn::Straight}, {North, Turn::Left}}},
      {{{South, Turn::Straight}, {South, Turn::Left}}},
      {{{East, Turn::Straight}, {East, Turn::Left}}},
      {{{West, Turn::Straight}, {West, Turn::Left}}},
  }};
  std::vector<Phase> phases;
  for (const auto& row : table) {
    std::set<int> permitted(rights.begin(), rights.end());
    for (const auto& [arm, turn] : row) permitted.insert(movement_of(arm, turn));
    Phase p;
    p.id = static_cast<int>(phases.size());
    p.permitted.assign(permitted.begin(), permitted.end());
    phases.push_back(std::move(p));
  }
  return phases;
}

std::set<int> neighbors(const RoadNetwork& net, int intersection_id) {
  const Intersection& inter = net.intersection(intersection_id);
  std::set<int> out;
  for (int r : inter.outgoing_roads) out.insert(net.road(r).to);
  for (int r : inter.incoming_roads) out.insert(net.road(r).from);
  return out;
}

// ---- scenario document ----

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedDocument, what); }

const json& require(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object()) malformed(ctx + " must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) malformed(ctx + " is missing '" + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_string()) malformed(ctx + "." + key + " must be a string");
  return v.get<std::string>();
}

double require_number(const json& obj, const char* key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_number()) malformed(ctx + "." + key + " must be a number");
  return v.get<double>();
}

double optional_number(const json& obj, const char* key, double fallback, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) malformed(ctx + "." + key + " must be a number");
  return it->get<double>();
}

const json& require_array(const json& obj, const char* key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_array()) malformed(ctx + "." + key + " must be an array");
  return v;
}

SimSettings parse_sim(const json& doc) {
  SimSettings s;
  auto it = doc.find("sim");
  if (it == doc.end()) return s;
  const json& sim = *it;
  if (!sim.is_object()) malformed("sim must be an object");
  s.free_speed_mps = optional_number(sim, "free_speed", s.free_speed_mps, "sim");
  s.headway_s = optional_number(sim, "headway", s.headway_s, "sim");
  s.vehicle_spacing_m = optional_number(sim, "vehicle_spacing", s.vehicle_spacing_m, "sim");
  s.action_interval_s = static_cast<int>(optional_number(sim, "action_interval", s.action_interval_s, "sim"));
  s.all_red_s = static_cast<int>(optional_number(sim, "all_red", s.all_red_s, "sim"));
  s.horizon_s = optional_number(sim, "horizon", s.horizon_s, "sim");
  if (!(s.free_speed_mps > 0) || !(s.headway_s >= 1) || !(s.vehicle_spacing_m > 0) || s.action_interval_s < 1 ||
      s.all_red_s < 0 || s.all_red_s >= s.action_interval_s || !(s.horizon_s >= 0))
    throw Error(ErrorCode::InvalidConfig, "sim settings out of range");
  return s;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  if (!doc.is_object()) malformed("scenario document must be an object");
  const json& format = require(doc, "format", "document");
  if (!format.is_number_integer() || format.get<int>() != 1) malformed("unsupported format (expected 1)");

  Scenario scenario;
  const json& meta = require(doc, "meta", "document");
  const json& seed = require(meta, "seed", "meta");
  if (!seed.is_number_integer()) malformed("meta.seed must be an integer");
  scenario.seed = seed.get<std::uint64_t>();
  scenario.sim = parse_sim(doc);

  NetworkDesc desc;
  for (const auto& j : require_array(doc, "intersections", "document")) {
    NetworkDesc::IntersectionDesc d;
    d.name = require_string(j, "id", "intersection");
    const std::string kind = require_string(j, "kind", "intersection '" + d.name + "'");
    if (kind == "real") d.kind = IntersectionKind::Real;
    else if (kind == "virtual") d.kind = IntersectionKind::Virtual;
    else malformed("intersection '" + d.name + "' kind must be 'real' or 'virtual'");
    d.x = require_number(j, "x", "intersection '" + d.name + "'");
    d.y = require_number(j, "y", "intersection '" + d.name + "'");
    desc.intersections.push_back(std::move(d));
  }
  for (const auto& j : require_array(doc, "roads", "document")) {
    NetworkDesc::RoadDesc d;
    d.name = require_string(j, "id", "road");
    const std::string ctx = "road '" + d.name + "'";
    d.from = require_string(j, "from", ctx);
    d.to = require_string(j, "to", ctx);
    d.length_m = require_number(j, "length", ctx);
    for (const auto& lane : require_array(j, "lanes", ctx)) {
      if (!lane.is_object()) malformed(ctx + " lanes must be objects");
      auto it = lane.find("turn");
      if (it == lane.end()) {
        d.lanes.emplace_back(std::nullopt);
        continue;
      }
      if (!it->is_string()) malformed(ctx + " lane turn must be a string");
      const auto tag = it->get<std::string>();
      auto turn = parse_turn_tag(tag);
      if (!turn) {
        if (tag.size() > 1)
          throw Error(ErrorCode::InvalidTopology, ctx + " has a lane with multiple turns '" + tag + "'");
        throw Error(ErrorCode::InvalidTopology, ctx + " has a lane with unknown turn '" + tag + "'");
      }
      d.lanes.emplace_back(turn);
    }
    desc.roads.push_back(std::move(d));
  }
  if (auto it = doc.find("phases"); it != doc.end()) {
    if (!it->is_array()) malformed("phases must be an array");
    for (const auto& j : *it) {
      NetworkDesc::PhaseTableDesc t;
      t.intersection = require_string(j, "intersection", "phase table");
      for (const auto& phase : require_array(j, "phases", "phase table")) {
        if (!phase.is_array()) malformed("phase must be an array of [in, out] road pairs");
        std::vector<std::pair<std::string, std::string>> pairs;
        for (const auto& pair : phase) {
          if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
            malformed("phase entries must be [in_road, out_road]");
          pairs.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
        }
        t.phases.push_back(std::move(pairs));
      }
      desc.phase_tables.push_back(std::move(t));
    }
  }

  scenario.network = RoadNetwork::build(desc);
  const RoadNetwork& net = scenario.network;

  for (const auto& j : require_array(doc, "flows", "document")) {
    RouteSpec r;
    for (const auto& name : require_array(j, "route", "flow")) {
      if (!name.is_string()) malformed("flow route entries must be road ids");
      r.roads.push_back(net.road_id(name.get<std::string>()));
    }
    if (r.roads.empty()) throw Error(ErrorCode::InvalidTopology, "flow with empty route");
    r.entry_time_s = require_number(j, "start", "flow");
    r.count = static_cast<int>(optional_number(j, "count", 1, "flow"));
    r.interval_s = optional_number(j, "interval", 0.0, "flow");
    r.jitter_s = optional_number(j, "jitter", 0.0, "flow");
    if (r.entry_time_s < 0 || r.count < 1 || r.interval_s < 0 || r.jitter_s < 0)
      throw Error(ErrorCode::MalformedDocument, "flow timing out of range");
    const Road& first = net.road(r.roads.front());
    const Road& last = net.road(r.roads.back());
    if (net.is_real(first.from))
      throw Error(ErrorCode::InvalidTopology, "route starting on '" + first.name + "' does not begin at a virtual intersection");
    if (net.is_real(last.to))
      throw Error(ErrorCode::InvalidTopology, "route ending on '" + last.name + "' does not end at a virtual intersection");
    for (std::size_t k = 0; k + 1 < r.roads.size(); ++k) {
      if (!net.movement_between(r.roads[k], r.roads[k + 1]))
        throw Error(ErrorCode::InvalidTopology, "route has no movement from '" + net.road(r.roads[k]).name +
                                                    "' to '" + net.road(r.roads[k + 1]).name + "'");
    }
    scenario.routes.push_back(std::move(r));
  }
  return scenario;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string print_scenario(const Scenario& scenario) {
  const RoadNetwork& net = scenario.network;
  json doc;
  doc["format"] = 1;
  doc["meta"] = {{"seed", scenario.seed}};
  doc["sim"] = {{"free_speed", scenario.sim.free_speed_mps},     {"headway", scenario.sim.headway_s},
                {"vehicle_spacing", scenario.sim.vehicle_spacing_m}, {"action_interval", scenario.sim.action_interval_s},
                {"all_red", scenario.sim.all_red_s},             {"horizon", scenario.sim.horizon_s}};
  json inters = json::array();
  for (const auto& i : net.intersections())
    inters.push_back({{"id", i.name}, {"kind", i.kind == IntersectionKind::Real ? "real" : "virtual"}, {"x", i.x}, {"y", i.y}});
  doc["intersections"] = std::move(inters);
  json roads = json::array();
  for (const auto& r : net.roads()) {
    json lanes = json::array();
    for (int lane_id : r.lanes) {
      const Lane& lane = net.lanes()[lane_id];
      json l = json::object();
      if (lane.turn) l["turn"] = std::string(1, turn_tag(*lane.turn));
      lanes.push_back(std::move(l));
    }
    roads.push_back({{"id", r.name},
                     {"from", net.intersection(r.from).name},
                     {"to", net.intersection(r.to).name},
                     {"length", r.length_m},
                     {"lanes", std::move(lanes)}});
  }
  doc["roads"] = std::move(roads);
  json phases = json::array();
  for (const auto& i : net.intersections()) {
    if (i.kind != IntersectionKind::Real) continue;
    json table = json::array();
    for (const auto& p : i.phases) {
      json pairs = json::array();
      for (int m : p.permitted) {
        const auto& mv = net.movement(m);
        pairs.push_back({net.road(mv.upstream_road).name, net.road(mv.downstream_road).name});
      }
      table.push_back(std::move(pairs));
    }
    phases.push_back({{"intersection", i.name}, {"phases", std::move(table)}});
  }
  doc["phases"] = std::move(phases);
  json flows = json::array();
  for (const auto& r : scenario.routes) {
    json route = json::array();
    for (int road_id : r.roads) route.push_back(net.road(road_id).name);
    flows.push_back({{"route", std::move(route)},
                     {"start", r.entry_time_s},
                     {"count", r.count},
                     {"interval", r.interval_s},
                     {"jitter", r.jitter_s}});
  }
  doc["flows"] = std::move(flows);
  return doc.dump(2) + "\n";
}

}  // namespace tsc
