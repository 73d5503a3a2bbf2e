// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "env.hpp"
#include "error.hpp"
#include "support.hpp"

using namespace tsc;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("reset gives empty observations without demand") {
  Environment env(test::grid(2, 2, 0, 600, 1));
  const auto obs = env.reset(3);
  REQUIRE(obs.size() == 4);
  for (const auto& o : obs) {
    CHECK(o.movement_counts == std::vector<double>(12, 0.0));
    CHECK(o.current_phase == 0);
    CHECK(o.num_phases == 8);
    CHECK(o.received_predictions == std::vector<double>(12, 0.0));
    CHECK(o.current_phase_one_hot() == std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0});
  }
  const std::vector<int> actions(4, 0);
  const auto r = env.step(actions);
  CHECK(r.joint_reward == 0.0);
  for (double x : r.rewards) CHECK(x == 0.0);
}

TEST_CASE("rewards are negated mean movement counts and sum to the joint reward") {
  Environment env(test::grid(2, 2, 1200, 600, 2));
  env.reset(5);
  std::vector<int> actions(4, 0);
  for (int step = 0; step < 20; ++step) {
    for (int i = 0; i < 4; ++i) actions[i] = (step + i) % 8;
    const auto r = env.step(actions);
    double joint = 0;
    for (int i = 0; i < 4; ++i) {
      const auto& topo = env.agents()[i];
      double sum = 0;
      for (int m : topo.movements) sum += env.sim().movement_mean_count(m);
      CHECK(r.rewards[i] == doctest::Approx(-sum / topo.num_movements()));
      joint += r.rewards[i];
      for (int k = 0; k < topo.num_movements(); ++k) CHECK(r.permissions[i][k] == topo.permits[actions[i]][k]);
    }
    CHECK(r.joint_reward == doctest::Approx(joint));
    CHECK(r.observations == env.observe());
  }
}

TEST_CASE("steps are validated") {
  Environment env(test::grid(1, 1, 0, 30, 1));
  CHECK(env.horizon_steps() == 3);
  CHECK(code_of([&] { env.step(std::vector<int>{}); }) == ErrorCode::InvalidAction);
  CHECK(code_of([&] { env.step(std::vector<int>{8}); }) == ErrorCode::InvalidAction);
  CHECK(code_of([&] { env.step(std::vector<int>{0, 0}); }) == ErrorCode::InvalidAction);
  for (int i = 0; i < 3; ++i) CHECK(env.step(std::vector<int>{0}).done == (i == 2));
  CHECK(env.done());
  CHECK(code_of([&] { env.step(std::vector<int>{0}); }) == ErrorCode::EpisodeFinished);
  env.reset(1);
  CHECK_FALSE(env.done());
}

TEST_CASE("agent topology of a 1x2 grid") {
  Environment env(test::grid(1, 2, 0, 600, 1));
  REQUIRE(env.num_agents() == 2);
  const auto& net = env.scenario().network;
  for (int i = 0; i < 2; ++i) {
    const auto& a = env.agents()[i];
    CHECK(a.num_movements() == 12);
    CHECK(a.num_phases() == 8);
    // one connecting road into a 3-movement approach
    CHECK(a.num_slots() == 3);
    for (std::size_t s = 0; s < a.slots.size(); ++s) {
      const auto& slot = a.slots[s];
      CHECK(slot.downstream_agent == 1 - i);
      const auto& down = env.agents()[slot.downstream_agent];
      CHECK(net.movement(down.movements[slot.downstream_movement]).upstream_road == slot.road);
      CHECK(down.sources[slot.downstream_movement].agent == i);
      CHECK(down.sources[slot.downstream_movement].slot == static_cast<int>(s));
      // the three movements feeding the connecting road, weighted by lane ratio
      double fed = 0;
      for (int k = 0; k < a.num_movements(); ++k) {
        const double w = a.incidence[s][k];
        if (a.downstream_road[k] == slot.road) {
          CHECK(w == doctest::Approx(static_cast<double>(a.in_lanes[k]) / slot.lanes));
          ++fed;
        } else {
          CHECK(w == 0.0);
        }
      }
      CHECK(fed == 3);
    }
    int sourced = 0;
    for (const auto& src : a.sources) sourced += src.agent >= 0;
    CHECK(sourced == 3);
  }
}

TEST_CASE("predictions are routed to the downstream movements") {
  Environment env(test::grid(1, 2, 0, 600, 1));
  auto obs = env.reset(0);
  auto untouched = obs;

  env.attach_predictions(obs, {{0, 0, 0}, {0, 0, 0}});
  CHECK(obs == untouched);

  env.attach_predictions(obs, {{1.5, 2.5, 3.5}, {-1, -2, -3}});
  for (int j = 0; j < 2; ++j) {
    const auto& a = env.agents()[j];
    for (int k = 0; k < a.num_movements(); ++k) {
      const auto& src = a.sources[k];
      if (src.agent < 0) {
        CHECK(obs[j].received_predictions[k] == 0.0);
      } else {
        const double expect = src.agent == 0 ? 1.5 + src.slot : -(1.0 + src.slot);
        CHECK(obs[j].received_predictions[k] == expect);
      }
    }
  }

  CHECK(code_of([&] { env.attach_predictions(obs, {{1, 2}, {1, 2, 3}}); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { env.attach_predictions(obs, {{1, 2, 3}}); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("slot targets are lane-normalised downstream arrivals") {
  Environment env(test::grid(1, 2, 1500, 600, 8));
  env.reset(2);
  for (int step = 0; step < 15; ++step) {
    const auto r = env.step(std::vector<int>{2, 2});
    for (int i = 0; i < 2; ++i) {
      const auto t = env.slot_targets(r, i);
      const auto& a = env.agents()[i];
      REQUIRE(t.size() == a.slots.size());
      for (std::size_t s = 0; s < t.size(); ++s) {
        const auto& slot = a.slots[s];
        CHECK(t[s] == doctest::Approx(r.arrivals[slot.downstream_agent][slot.downstream_movement] / slot.lanes));
      }
    }
  }
}

TEST_CASE("same seed, same observations") {
  auto scenario = test::grid(2, 2, 900, 600, 4);
  Environment a(scenario), b(scenario);
  a.reset(11);
  b.reset(11);
  const std::vector<int> actions{0, 2, 4, 6};
  for (int i = 0; i < 30; ++i) CHECK(a.step(actions).observations == b.step(actions).observations);
}
