// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "env.hpp"
#include "params.hpp"
#include "tensor.hpp"

namespace tsc {

inline constexpr int kEmbedDim = 32;
inline constexpr int kTurnEmbedDim = 2;

// Adds every "unicomm.*" parameter to the store (uninitialised).
void register_unicomm_params(nn::ParamStore& store);

// Per-movement inputs of one intersection at one step.
struct MovementFeatures {
  std::vector<double> counts;       // lane-normalised n
  std::vector<double> permissions;  // g of the active phase
  std::vector<Turn> turns;
};

MovementFeatures movement_features(const Observation& obs, const AgentTopology& topo);

// m x 32 embeddings relu(dense([n, g, emb(d)])).
nn::Var unicomm_embed(nn::Graph& g, nn::ParamStore& store, const MovementFeatures& f);
// m x 1 permission probabilities.
nn::Var unicomm_permissions(nn::Graph& g, nn::ParamStore& store, nn::Var h);
// slots x 1 predicted arrivals. perm is m x 1: the predicted probabilities at
// inference, the recorded permissions when training. Invalid Var when the
// agent has no outgoing slots.
nn::Var unicomm_arrivals(nn::Graph& g, nn::ParamStore& store, nn::Var h, nn::Var perm, const AgentTopology& topo);

// slots x m matrix of lane-ratio weights.
nn::Matrix incidence_matrix(const AgentTopology& topo);

struct UniCommLosses {
  nn::Var phase;   // BCE(gp, permission target)
  nn::Var volume;  // MSE(l(g^r), l^r); invalid without slots
};

UniCommLosses unicomm_losses(nn::Graph& g, nn::ParamStore& store, const MovementFeatures& f, const AgentTopology& topo,
                             const std::vector<double>& permission_target, const std::vector<double>& recorded_perm,
                             const std::vector<double>& recorded_arrivals);

// Inference: one prediction per outgoing slot of the agent.
std::vector<double> unicomm_predict(nn::Graph& g, nn::ParamStore& store, const Observation& obs,
                                    const AgentTopology& topo);

// Computes every agent's slot predictions from obs and routes them onto the
// downstream agents' received_predictions.
void attach_unicomm_predictions(const Environment& env, nn::Graph& g, nn::ParamStore& store,
                                std::vector<Observation>& obs);

}  // namespace tsc
