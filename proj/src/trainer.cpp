// SPDX-License-Identifier: Apache-2.0
#include "trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "unicomm.hpp"

namespace tsc {

using json = nlohmann::ordered_json;

// ---- config ----

namespace {

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("train.") + key + ": " + e.what());
  }
}

}  // namespace

void validate_train_config(const TrainConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, what);
  };
  require(c.total_frames >= 0, "total_frames must be >= 0");
  require(c.batch > 0, "batch must be positive");
  require(c.replay_capacity > 0, "replay_capacity must be positive");
  require(c.batch <= c.replay_capacity, "batch exceeds replay_capacity");
  require(c.target_sync_every > 0, "target_sync_every must be positive");
  require(c.eps_end >= 0.0 && c.eps_start <= 1.0 && c.eps_end <= c.eps_start, "need 0 <= eps_end <= eps_start <= 1");
  require(c.eps_decay_fraction >= 0.0 && c.eps_decay_fraction <= 1.0, "eps_decay_fraction must lie in [0, 1]");
  require(c.gamma > 0.0 && c.gamma <= 1.0, "gamma must lie in (0, 1]");
  require(c.n_step > 0, "n_step must be positive");
  require(c.lambda_td >= 0.0 && c.lambda_p >= 0.0 && c.lambda_v >= 0.0, "loss weights must be >= 0");
  require(c.adam.lr > 0.0 && c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0 && c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0 &&
              c.adam.eps > 0.0,
          "invalid optimizer settings");
  require(c.grad_clip > 0.0, "grad_clip must be positive");
  require(c.eval_every >= 0 && c.eval_episodes > 0 && c.log_every >= 0, "invalid logging settings");
  require(c.shape.encoding == PhaseEncoding::Bit || c.shape.max_phases > 0, "max_phases must be positive");
}

TrainConfig parse_train_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != 1)
    throw Error(ErrorCode::MalformedDocument, "expected a format 1 document");
  TrainConfig c;
  if (!doc.contains("train")) return c;
  const json& t = doc["train"];
  if (!t.is_object()) throw Error(ErrorCode::InvalidConfig, "train must be an object");
  static const char* const known[] = {"total_frames", "batch", "replay_capacity", "target_sync_every", "eps_start",
                                      "eps_end", "eps_decay_fraction", "gamma", "n_step", "lambda_td", "lambda_p",
                                      "lambda_v", "lr", "beta1", "beta2", "adam_eps", "grad_clip", "seed", "comm",
                                      "phase_target", "phase_encoding", "max_phases", "eval_every", "eval_episodes",
                                      "log_every"};
  for (const auto& [key, _] : t.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error(ErrorCode::InvalidConfig, "unknown key train." + key);
  }
  read_key(t, "total_frames", c.total_frames);
  read_key(t, "batch", c.batch);
  read_key(t, "replay_capacity", c.replay_capacity);
  read_key(t, "target_sync_every", c.target_sync_every);
  read_key(t, "eps_start", c.eps_start);
  read_key(t, "eps_end", c.eps_end);
  read_key(t, "eps_decay_fraction", c.eps_decay_fraction);
  read_key(t, "gamma", c.gamma);
  read_key(t, "n_step", c.n_step);
  read_key(t, "lambda_td", c.lambda_td);
  read_key(t, "lambda_p", c.lambda_p);
  read_key(t, "lambda_v", c.lambda_v);
  read_key(t, "lr", c.adam.lr);
  read_key(t, "beta1", c.adam.beta1);
  read_key(t, "beta2", c.adam.beta2);
  read_key(t, "adam_eps", c.adam.eps);
  read_key(t, "grad_clip", c.grad_clip);
  read_key(t, "seed", c.seed);
  read_key(t, "comm", c.comm);
  read_key(t, "max_phases", c.shape.max_phases);
  read_key(t, "eval_every", c.eval_every);
  read_key(t, "eval_episodes", c.eval_episodes);
  read_key(t, "log_every", c.log_every);
  std::string s;
  if (t.contains("phase_target")) {
    read_key(t, "phase_target", s);
    if (s == "replay") c.phase_target = PhaseTarget::Replay;
    else if (s == "current") c.phase_target = PhaseTarget::Current;
    else throw Error(ErrorCode::InvalidConfig, "phase_target must be replay or current");
  }
  if (t.contains("phase_encoding")) {
    read_key(t, "phase_encoding", s);
    if (s == "bit") c.shape.encoding = PhaseEncoding::Bit;
    else if (s == "onehot") c.shape.encoding = PhaseEncoding::OneHot;
    else throw Error(ErrorCode::InvalidConfig, "phase_encoding must be bit or onehot");
  }
  validate_train_config(c);
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str());
}

std::string print_train_config(const TrainConfig& c) {
  json t;
  t["total_frames"] = c.total_frames;
  t["batch"] = c.batch;
  t["replay_capacity"] = c.replay_capacity;
  t["target_sync_every"] = c.target_sync_every;
  t["eps_start"] = c.eps_start;
  t["eps_end"] = c.eps_end;
  t["eps_decay_fraction"] = c.eps_decay_fraction;
  t["gamma"] = c.gamma;
  t["n_step"] = c.n_step;
  t["lambda_td"] = c.lambda_td;
  t["lambda_p"] = c.lambda_p;
  t["lambda_v"] = c.lambda_v;
  t["lr"] = c.adam.lr;
  t["beta1"] = c.adam.beta1;
  t["beta2"] = c.adam.beta2;
  t["adam_eps"] = c.adam.eps;
  t["grad_clip"] = c.grad_clip;
  t["seed"] = c.seed;
  t["comm"] = c.comm;
  t["phase_target"] = c.phase_target == PhaseTarget::Replay ? "replay" : "current";
  t["phase_encoding"] = c.shape.encoding == PhaseEncoding::Bit ? "bit" : "onehot";
  t["max_phases"] = c.shape.max_phases;
  t["eval_every"] = c.eval_every;
  t["eval_episodes"] = c.eval_episodes;
  t["log_every"] = c.log_every;
  json doc;
  doc["format"] = 1;
  doc["train"] = t;
  return doc.dump(2) + "\n";
}

double epsilon_at(int frame, const TrainConfig& c) {
  const double ramp = c.eps_decay_fraction * c.total_frames;
  if (ramp <= 0.0 || frame >= ramp) return c.eps_end;
  if (frame <= 0) return c.eps_start;
  return c.eps_start + (c.eps_end - c.eps_start) * (frame / ramp);
}

// ---- n-step ----

double n_step_return(std::span<const double> rewards, double gamma) {
  double r = 0.0;
  double g = 1.0;
  for (double x : rewards) {
    r += g * x;
    g *= gamma;
  }
  return r;
}

Transition NStepAccumulator::emit(std::size_t horizon, const Observation& next, bool done) const {
  std::vector<double> rs;
  for (std::size_t i = 0; i < horizon; ++i) rs.push_back(steps_[i].reward);
  Transition t = steps_.front();
  t.reward = n_step_return(rs, gamma_);
  t.z_next = next;
  t.done = done;
  return t;
}

std::vector<Transition> NStepAccumulator::push(Transition step, const Observation& next, bool done) {
  steps_.push_back(std::move(step));
  std::vector<Transition> out;
  if (done) {
    while (!steps_.empty()) {
      out.push_back(emit(steps_.size(), next, true));
      steps_.pop_front();
    }
  } else if (static_cast<int>(steps_.size()) == n_) {
    out.push_back(emit(steps_.size(), next, false));
    steps_.pop_front();
  }
  return out;
}

// ---- replay ----

ReplayBuffer::ReplayBuffer(std::size_t capacity) : data_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::InvalidConfig, "replay buffer needs a positive capacity");
}

void ReplayBuffer::push(Transition t) {
  data_[cursor_] = std::move(t);
  cursor_ = (cursor_ + 1) % data_.size();
  if (size_ < data_.size()) ++size_;
}

const Transition& ReplayBuffer::oldest(std::size_t i) const {
  if (i >= size_) throw Error(ErrorCode::UnknownEntity, "replay index out of range");
  const std::size_t start = full() ? cursor_ : 0;
  return data_[(start + i) % data_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (batch > size_) throw Error(ErrorCode::BufferNotFull, "cannot sample " + std::to_string(batch) + " of " + std::to_string(size_));
  std::vector<std::size_t> idx(size_);
  for (std::size_t i = 0; i < size_; ++i) idx[i] = i;
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(size_ - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(batch);
  return idx;
}

double double_q_target(double reward, bool done, double gamma_n, const std::vector<double>& q_online_next,
                       const std::vector<double>& q_target_next) {
  if (done) return reward;
  if (q_online_next.size() != q_target_next.size()) throw Error(ErrorCode::ShapeMismatch, "Q vectors differ in length");
  return reward + gamma_n * q_target_next[static_cast<std::size_t>(argmax(q_online_next))];
}

// ---- log ----

std::string training_log_header() {
  return "frame,epsilon,td_loss,phase_loss,volume_loss,eval_travel_time,eval_delay,eval_wait_time,eval_throughput";
}

std::string format_log_row(const LogRow& row) {
  char buf[128];
  std::string s = std::to_string(row.frame);
  std::snprintf(buf, sizeof(buf), ",%.6f", row.epsilon);
  s += buf;
  if (row.losses) {
    std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f", row.losses->td, row.losses->phase, row.losses->volume);
    s += buf;
  } else {
    s += ",,,";
  }
  if (row.eval) {
    std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f,%d", row.eval->travel_time, row.eval->delay, row.eval->wait_time,
                  row.eval->throughput);
    s += buf;
  } else {
    s += ",,,,";
  }
  return s;
}

// ---- trainer ----

nn::ParamStore make_params(const UniLightShape& shape, std::uint64_t seed) {
  nn::ParamStore store;
  register_unicomm_params(store);
  register_unilight_params(store, shape);
  Rng rng(seed);
  store.initialize(rng);
  return store;
}

Trainer::Trainer(std::shared_ptr<const Scenario> scenario, TrainConfig config)
    : scenario_(std::move(scenario)),
      config_(config),
      env_(scenario_, 0),
      online_(make_params(config.shape, config.seed)),
      target_(online_),
      buffer_(static_cast<std::size_t>(config.replay_capacity)),
      action_rng_(config.seed ^ 0xA5A5A5A5ULL),
      sample_rng_(config.seed ^ 0x5A5A5A5A5ULL) {
  validate_train_config(config_);
  if (!config_.comm) {
    config_.lambda_p = 0.0;
    config_.lambda_v = 0.0;
  }
  if (env_.num_agents() == 0) throw Error(ErrorCode::InvalidConfig, "scenario has no signalised intersection");
  for (int i = 0; i < env_.num_agents(); ++i) accumulators_.emplace_back(config_.n_step, config_.gamma);
}

std::uint64_t Trainer::episode_seed(int episode) const {
  return (config_.seed + 1) * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(episode);
}

std::vector<Observation> Trainer::fresh_episode() {
  auto obs = env_.reset(episode_seed(episode_));
  for (auto& a : accumulators_) a.clear();
  if (config_.comm) attach_unicomm_predictions(env_, scratch_, online_, obs);
  return obs;
}

std::vector<double> Trainer::td_targets(const std::vector<std::size_t>& batch) {
  const double gamma_n = std::pow(config_.gamma, config_.n_step);
  std::vector<double> ys;
  ys.reserve(batch.size());
  for (std::size_t i : batch) {
    const Transition& t = buffer_.slot(i);
    if (t.done) {
      ys.push_back(t.reward);
      continue;
    }
    const auto& topo = env_.agents()[t.agent];
    const QInput in = q_input(t.z_next, topo);
    const auto qo = q_values(scratch_, online_, config_.shape, in, topo);
    const auto qt = q_values(scratch_, target_, config_.shape, in, topo);
    ys.push_back(double_q_target(t.reward, false, gamma_n, qo, qt));
  }
  return ys;
}

LossReport Trainer::train_step() {
  if (!buffer_.full() || buffer_.size() < static_cast<std::size_t>(config_.batch))
    throw Error(ErrorCode::BufferNotFull,
                std::to_string(buffer_.size()) + " of " + std::to_string(buffer_.capacity()) + " transitions stored");
  const auto idx = buffer_.sample(static_cast<std::size_t>(config_.batch), sample_rng_);
  const auto ys = td_targets(idx);
  const bool comm_losses = config_.comm && (config_.lambda_p > 0.0 || config_.lambda_v > 0.0);

  online_.zero_grad();
  graph_.clear();
  LossReport rep;
  int volume_terms = 0;
  nn::Var total;
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const Transition& t = buffer_.slot(idx[b]);
    const auto& topo = env_.agents()[t.agent];
    const nn::Var q = unilight_q(graph_, online_, config_.shape, q_input(t.z, topo), topo);
    const nn::Var td = graph_.huber(graph_.pick(q, t.action, 0), nn::Matrix(1, 1, ys[b]));
    rep.td += graph_.value(td).data[0];
    nn::Var term = graph_.scale(td, config_.lambda_td);
    if (comm_losses) {
      std::vector<double> target = t.recorded_permissions;
      if (config_.phase_target == PhaseTarget::Current) {
        const auto& row = topo.permits[static_cast<std::size_t>(argmax(graph_.value(q).data))];
        target.assign(row.begin(), row.end());
      }
      const auto losses = unicomm_losses(graph_, online_, movement_features(t.z, topo), topo, target,
                                         t.recorded_permissions, t.recorded_arrivals);
      rep.phase += graph_.value(losses.phase).data[0];
      term = graph_.add(term, graph_.scale(losses.phase, config_.lambda_p));
      if (losses.volume.valid()) {
        rep.volume += graph_.value(losses.volume).data[0];
        ++volume_terms;
        term = graph_.add(term, graph_.scale(losses.volume, config_.lambda_v));
      }
    }
    total = total.valid() ? graph_.add(total, term) : term;
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  graph_.backward(graph_.scale(total, inv));
  online_.clip_grad_norm(config_.grad_clip);
  nn::adam_step(online_, config_.adam);
  ++grad_steps_;
  if (grad_steps_ % config_.target_sync_every == 0) target_.copy_values_from(online_);

  rep.td *= inv;
  rep.phase *= inv;
  if (volume_terms > 0) rep.volume /= volume_terms;
  return rep;
}

void Trainer::advance_frame() {
  if (obs_.empty()) obs_ = fresh_episode();
  const double eps = epsilon_at(frame_, config_);
  std::vector<int> actions;
  for (int i = 0; i < env_.num_agents(); ++i) {
    const auto& topo = env_.agents()[i];
    actions.push_back(select_action(q_values(scratch_, online_, config_.shape, q_input(obs_[i], topo), topo), eps,
                                    action_rng_));
  }
  StepResult res = env_.step(actions);
  auto next = res.observations;
  if (config_.comm) attach_unicomm_predictions(env_, scratch_, online_, next);
  for (int i = 0; i < env_.num_agents(); ++i) {
    Transition step;
    step.agent = i;
    step.z = obs_[i];
    step.action = actions[i];
    step.reward = res.rewards[i];
    step.recorded_permissions = res.permissions[i];
    step.recorded_arrivals = env_.slot_targets(res, i);
    for (auto& t : accumulators_[i].push(std::move(step), next[i], res.done)) buffer_.push(std::move(t));
  }
  obs_ = std::move(next);
  ++frame_;
  if (buffer_.full()) {
    const LossReport r = train_step();
    window_.td += r.td;
    window_.phase += r.phase;
    window_.volume += r.volume;
    ++window_steps_;
  }
  if (res.done) {
    ++episode_;
    obs_ = fresh_episode();
  }
}

void Trainer::run(const std::function<void(const LogRow&)>& on_row) {
  while (frame_ < config_.total_frames) {
    advance_frame();
    const bool log_now = config_.log_every > 0 && frame_ % config_.log_every == 0;
    const bool eval_now = config_.eval_every > 0 && frame_ % config_.eval_every == 0;
    const bool last = frame_ == config_.total_frames;
    if (!log_now && !eval_now && !last) continue;
    LogRow row;
    row.frame = frame_;
    row.epsilon = epsilon_at(frame_, config_);
    if (window_steps_ > 0) {
      row.losses = LossReport{window_.td / window_steps_, window_.phase / window_steps_, window_.volume / window_steps_};
      window_ = {};
      window_steps_ = 0;
    }
    if (eval_now) {
      UniLightController policy(online_, config_.comm);
      row.eval = evaluate(policy, scenario_, config_.eval_episodes, config_.seed).mean;
    }
    log_.push_back(row);
    if (on_row) on_row(row);
  }
}

TrainingResult run_training(std::shared_ptr<const Scenario> scenario, const TrainConfig& config,
                            const std::string& log_path, const std::string& checkpoint_path) {
  Trainer trainer(std::move(scenario), config);
  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path, std::ios::trunc);
    if (!log) throw Error(ErrorCode::Io, "cannot write '" + log_path + "'");
    log << training_log_header() << '\n';
  }
  trainer.run([&](const LogRow& row) {
    if (log.is_open()) log << format_log_row(row) << '\n' << std::flush;
  });
  if (!checkpoint_path.empty()) nn::save_checkpoint_file(trainer.online(), checkpoint_path);
  return {trainer.online(), trainer.log(), trainer.gradient_steps()};
}

}  // namespace tsc
