// SPDX-License-Identifier: Apache-2.0
#include "unilight.hpp"

#include "error.hpp"
#include "unicomm.hpp"

namespace tsc {

using nn::Matrix;
using nn::ParamKind;
using nn::Var;

void register_unilight_params(nn::ParamStore& store, const UniLightShape& shape) {
  if (shape.encoding == PhaseEncoding::OneHot && shape.max_phases < 1)
    throw Error(ErrorCode::InvalidConfig, "one-hot phase encoding needs max_phases >= 1");
  store.add("unilight.turn_emb", kTurnCount, kTurnEmbedDim);
  store.add("unilight.embed.W", 3 + kTurnEmbedDim, kEmbedDim);
  store.add("unilight.embed.b", 1, kEmbedDim, ParamKind::Bias);
  store.add("unilight.adv.W", 2 * kEmbedDim + shape.phase_width(), 1);
  store.add("unilight.adv.b", 1, 1, ParamKind::Bias);
  // the bit encoding carries nothing for the value stream beyond its bias
  store.add("unilight.val.W", kEmbedDim + (shape.encoding == PhaseEncoding::OneHot ? shape.max_phases : 0), 1);
  store.add("unilight.val.b", 1, 1, ParamKind::Bias);
}

UniLightShape unilight_shape_of(const nn::ParamStore& store) {
  const int width = store.at("unilight.adv.W").value.rows - 2 * kEmbedDim;
  if (width < 1) throw Error(ErrorCode::ShapeMismatch, "advantage head is too small");
  UniLightShape s;
  if (width == 1 && store.at("unilight.val.W").value.rows == kEmbedDim) {
    s.encoding = PhaseEncoding::Bit;
  } else {
    s.encoding = PhaseEncoding::OneHot;
    s.max_phases = width;
  }
  return s;
}

QInput q_input(const Observation& obs, const AgentTopology& topo) {
  QInput in;
  const MovementFeatures f = movement_features(obs, topo);
  in.counts = f.counts;
  in.permissions = f.permissions;
  in.turns = f.turns;
  in.predictions = obs.received_predictions;
  in.current_phase = obs.current_phase;
  if (in.predictions.size() != in.counts.size())
    throw Error(ErrorCode::ShapeMismatch, "received predictions need one entry per movement");
  return in;
}

Matrix permitted_group_matrix(const AgentTopology& topo) {
  Matrix a(topo.num_phases(), topo.num_movements());
  for (int p = 0; p < topo.num_phases(); ++p) {
    int n = 0;
    for (auto bit : topo.permits[p]) n += bit;
    if (n == 0) throw Error(ErrorCode::EmptyGroup, "phase " + std::to_string(p) + " permits no movement");
    for (int k = 0; k < topo.num_movements(); ++k)
      if (topo.permits[p][k]) a(p, k) = 1.0 / n;
  }
  return a;
}

Matrix blocked_group_matrix(const AgentTopology& topo) {
  Matrix a(topo.num_phases(), topo.num_movements());
  for (int p = 0; p < topo.num_phases(); ++p) {
    int n = 0;
    for (auto bit : topo.permits[p]) n += bit ? 0 : 1;
    for (int k = 0; k < topo.num_movements(); ++k)
      if (!topo.permits[p][k]) a(p, k) = 1.0 / n;
  }
  return a;
}

Var unilight_q(nn::Graph& g, nn::ParamStore& store, const UniLightShape& shape, const QInput& in,
               const AgentTopology& topo) {
  const int m = topo.num_movements();
  const int phases = topo.num_phases();
  if (static_cast<int>(in.counts.size()) != m || static_cast<int>(in.permissions.size()) != m ||
      static_cast<int>(in.turns.size()) != m || static_cast<int>(in.predictions.size()) != m || m == 0)
    throw Error(ErrorCode::ShapeMismatch, "Q input does not match the intersection");
  if (phases < 1) throw Error(ErrorCode::EmptyGroup, "intersection has no phases");
  if (in.current_phase < 0 || in.current_phase >= phases)
    throw Error(ErrorCode::ShapeMismatch, "current phase out of range");
  if (shape.encoding == PhaseEncoding::OneHot && phases > shape.max_phases)
    throw Error(ErrorCode::ShapeMismatch, "intersection has more phases than the one-hot width");

  Matrix turns(m, kTurnCount);
  for (int k = 0; k < m; ++k) turns(k, static_cast<int>(in.turns[k])) = 1.0;
  const Var d = g.matmul(g.constant(std::move(turns)), g.param(store, "unilight.turn_emb"));
  const Var x = g.concat_cols({g.constant(Matrix::column(in.counts)), g.constant(Matrix::column(in.permissions)), d,
                               g.constant(Matrix::column(in.predictions))});
  const Var h = g.relu(g.dense(x, g.param(store, "unilight.embed.W"), g.param(store, "unilight.embed.b")));

  const Var g1 = g.matmul(g.constant(permitted_group_matrix(topo)), h);
  const Var g2 = g.matmul(g.constant(blocked_group_matrix(topo)), h);
  Matrix p(phases, shape.phase_width());
  for (int a = 0; a < phases; ++a) {
    if (shape.encoding == PhaseEncoding::Bit)
      p(a, 0) = a == in.current_phase ? 1.0 : 0.0;
    else
      p(a, in.current_phase) = 1.0;
  }
  const Var adv_in =
      g.concat_cols({g.scale(g1, kPermittedGroupWeight), g.scale(g2, kBlockedGroupWeight), g.constant(std::move(p))});
  const Var adv = g.dense(adv_in, g.param(store, "unilight.adv.W"), g.param(store, "unilight.adv.b"));

  Var val_in = g.mean_rows(h);
  if (shape.encoding == PhaseEncoding::OneHot) {
    Matrix cur(1, shape.max_phases);
    cur(0, in.current_phase) = 1.0;
    val_in = g.concat_cols({val_in, g.constant(std::move(cur))});
  }
  const Var val = g.dense(val_in, g.param(store, "unilight.val.W"), g.param(store, "unilight.val.b"));
  const Var offset = g.add(val, g.scale(g.mean_rows(adv), -1.0));
  return g.add_row(adv, offset);
}

std::vector<double> q_values(nn::Graph& g, nn::ParamStore& store, const UniLightShape& shape, const QInput& in,
                             const AgentTopology& topo) {
  g.clear();
  return g.value(unilight_q(g, store, shape, in, topo)).data;
}

int argmax(const std::vector<double>& q) {
  if (q.empty()) throw Error(ErrorCode::ShapeMismatch, "argmax of nothing");
  int best = 0;
  for (int i = 1; i < static_cast<int>(q.size()); ++i)
    if (q[i] > q[best]) best = i;
  return best;
}

int select_action(const std::vector<double>& q, double epsilon, Rng& rng) {
  if (q.empty()) throw Error(ErrorCode::ShapeMismatch, "no phases to choose from");
  if (epsilon > 0.0 && rng.uniform() < epsilon) return static_cast<int>(rng.below(q.size()));
  return argmax(q);
}

}  // namespace tsc
