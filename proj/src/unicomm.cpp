// SPDX-License-Identifier: Apache-2.0
#include "unicomm.hpp"

#include "error.hpp"

namespace tsc {

using nn::Matrix;
using nn::ParamKind;
using nn::Var;

void register_unicomm_params(nn::ParamStore& store) {
  store.add("unicomm.turn_emb", kTurnCount, kTurnEmbedDim);
  store.add("unicomm.embed.W", 2 + kTurnEmbedDim, kEmbedDim);
  store.add("unicomm.embed.b", 1, kEmbedDim, ParamKind::Bias);
  store.add("unicomm.att.Wq", kEmbedDim, kEmbedDim);
  store.add("unicomm.att.Wk", kEmbedDim, kEmbedDim);
  store.add("unicomm.att.Wv", kEmbedDim, kEmbedDim);
  store.add("unicomm.att.wo", kEmbedDim, 1);
  store.add("unicomm.att.bo", 1, 1, ParamKind::Bias);
  // one weight column per downstream turn, one shared bias
  store.add("unicomm.out.W", kEmbedDim, kTurnCount);
  store.add("unicomm.out.b", 1, 1, ParamKind::Bias);
}

MovementFeatures movement_features(const Observation& obs, const AgentTopology& topo) {
  if (static_cast<int>(obs.movement_counts.size()) != topo.num_movements())
    throw Error(ErrorCode::ShapeMismatch, "observation does not match the intersection's movements");
  MovementFeatures f;
  f.counts = obs.movement_counts;
  f.turns = topo.turns;
  const auto& row = topo.permits.at(static_cast<std::size_t>(obs.current_phase));
  f.permissions.assign(row.begin(), row.end());
  return f;
}

namespace {

Matrix turn_one_hot(const std::vector<Turn>& turns) {
  Matrix m(static_cast<int>(turns.size()), kTurnCount);
  for (std::size_t i = 0; i < turns.size(); ++i) m(static_cast<int>(i), static_cast<int>(turns[i])) = 1.0;
  return m;
}

}  // namespace

Var unicomm_embed(nn::Graph& g, nn::ParamStore& store, const MovementFeatures& f) {
  const std::size_t m = f.counts.size();
  if (m == 0 || f.permissions.size() != m || f.turns.size() != m)
    throw Error(ErrorCode::ShapeMismatch, "movement features need one row per movement");
  const Var n = g.constant(Matrix::column(f.counts));
  const Var perm = g.constant(Matrix::column(f.permissions));
  const Var d = g.matmul(g.constant(turn_one_hot(f.turns)), g.param(store, "unicomm.turn_emb"));
  const Var x = g.concat_cols({n, perm, d});
  return g.relu(g.dense(x, g.param(store, "unicomm.embed.W"), g.param(store, "unicomm.embed.b")));
}

Var unicomm_permissions(nn::Graph& g, nn::ParamStore& store, Var h) {
  const Var score = nn::self_attention_1head(g, h, g.param(store, "unicomm.att.Wq"), g.param(store, "unicomm.att.Wk"),
                                             g.param(store, "unicomm.att.Wv"), g.param(store, "unicomm.att.wo"),
                                             g.param(store, "unicomm.att.bo"));
  return g.sigmoid(score);
}

Matrix incidence_matrix(const AgentTopology& topo) {
  Matrix s(topo.num_slots(), topo.num_movements());
  for (int i = 0; i < topo.num_slots(); ++i)
    for (int k = 0; k < topo.num_movements(); ++k) s(i, k) = topo.incidence[i][k];
  return s;
}

Var unicomm_arrivals(nn::Graph& g, nn::ParamStore& store, Var h, Var perm, const AgentTopology& topo) {
  if (g.value(h).rows != topo.num_movements() || g.value(perm).rows != topo.num_movements() ||
      g.value(perm).cols != 1)
    throw Error(ErrorCode::ShapeMismatch, "arrival prediction needs one permission per movement");
  if (topo.num_slots() == 0) return {};
  const Var acc = g.matmul(g.constant(incidence_matrix(topo)), g.scale_rows(h, perm));
  Matrix mask(topo.num_slots(), kTurnCount);
  for (int s = 0; s < topo.num_slots(); ++s) mask(s, static_cast<int>(topo.slots[s].turn)) = 1.0;
  const Var per_turn = g.matmul(acc, g.param(store, "unicomm.out.W"));
  const Var l = g.row_sum(g.mul(per_turn, g.constant(std::move(mask))));
  return g.add_row(l, g.param(store, "unicomm.out.b"));
}

UniCommLosses unicomm_losses(nn::Graph& g, nn::ParamStore& store, const MovementFeatures& f, const AgentTopology& topo,
                             const std::vector<double>& permission_target, const std::vector<double>& recorded_perm,
                             const std::vector<double>& recorded_arrivals) {
  const std::size_t m = f.counts.size();
  if (permission_target.size() != m || recorded_perm.size() != m)
    throw Error(ErrorCode::ShapeMismatch, "permission targets need one entry per movement");
  if (static_cast<int>(recorded_arrivals.size()) != topo.num_slots())
    throw Error(ErrorCode::ShapeMismatch, "recorded arrivals need one entry per slot");
  const Var h = unicomm_embed(g, store, f);
  UniCommLosses out;
  out.phase = g.bce(unicomm_permissions(g, store, h), Matrix::column(permission_target));
  if (topo.num_slots() > 0) {
    const Var l = unicomm_arrivals(g, store, h, g.constant(Matrix::column(recorded_perm)), topo);
    out.volume = g.mse(l, Matrix::column(recorded_arrivals));
  }
  return out;
}

std::vector<double> unicomm_predict(nn::Graph& g, nn::ParamStore& store, const Observation& obs,
                                    const AgentTopology& topo) {
  if (topo.num_slots() == 0) return {};
  g.clear();
  const Var h = unicomm_embed(g, store, movement_features(obs, topo));
  const Var l = unicomm_arrivals(g, store, h, unicomm_permissions(g, store, h), topo);
  return g.value(l).data;
}

void attach_unicomm_predictions(const Environment& env, nn::Graph& g, nn::ParamStore& store,
                                std::vector<Observation>& obs) {
  std::vector<std::vector<double>> preds;
  preds.reserve(obs.size());
  for (int i = 0; i < env.num_agents(); ++i) preds.push_back(unicomm_predict(g, store, obs.at(i), env.agents()[i]));
  env.attach_predictions(obs, preds);
}

}  // namespace tsc
