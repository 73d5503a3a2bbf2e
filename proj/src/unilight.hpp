// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "env.hpp"
#include "params.hpp"
#include "random.hpp"
#include "tensor.hpp"

namespace tsc {

inline constexpr double kPermittedGroupWeight = 5.0;
inline constexpr double kBlockedGroupWeight = 1.0;

enum class PhaseEncoding { Bit, OneHot };

struct UniLightShape {
  PhaseEncoding encoding = PhaseEncoding::Bit;
  int max_phases = 8;  // one-hot width; unused for Bit

  int phase_width() const { return encoding == PhaseEncoding::Bit ? 1 : max_phases; }
  bool operator==(const UniLightShape&) const = default;
};

void register_unilight_params(nn::ParamStore& store, const UniLightShape& shape = {});
// Recovers the encoding from the advantage head of a loaded store.
UniLightShape unilight_shape_of(const nn::ParamStore& store);

struct QInput {
  std::vector<double> counts;
  std::vector<double> permissions;  // active phase
  std::vector<Turn> turns;
  std::vector<double> predictions;  // received l, zeros without communication
  int current_phase = 0;
};

QInput q_input(const Observation& obs, const AgentTopology& topo);

// Group-mean matrices (phases x movements): row a averages the movements
// permitted by phase a (resp. the rest; zero row when none).
nn::Matrix permitted_group_matrix(const AgentTopology& topo);
nn::Matrix blocked_group_matrix(const AgentTopology& topo);

// phases x 1 Q-values. Throws EmptyGroup if a phase permits nothing.
nn::Var unilight_q(nn::Graph& g, nn::ParamStore& store, const UniLightShape& shape, const QInput& in,
                   const AgentTopology& topo);

std::vector<double> q_values(nn::Graph& g, nn::ParamStore& store, const UniLightShape& shape, const QInput& in,
                             const AgentTopology& topo);

// lowest index on ties
int argmax(const std::vector<double>& q);
// uniform random phase with probability epsilon, else argmax
int select_action(const std::vector<double>& q, double epsilon, Rng& rng);

}  // namespace tsc
