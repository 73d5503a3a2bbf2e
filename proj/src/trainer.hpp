// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "env.hpp"
#include "harness.hpp"
#include "params.hpp"
#include "random.hpp"
#include "tensor.hpp"
#include "unilight.hpp"

namespace tsc {

enum class PhaseTarget { Replay, Current };

struct TrainConfig {
  int total_frames = 240000;
  int batch = 30;
  int replay_capacity = 8000;
  int target_sync_every = 5;
  double eps_start = 0.9;
  double eps_end = 0.02;
  double eps_decay_fraction = 0.3;
  double gamma = 0.8;
  int n_step = 5;
  double lambda_td = 1.0;
  double lambda_p = 1.0;
  double lambda_v = 1.0;
  nn::AdamConfig adam;
  double grad_clip = 10.0;
  std::uint64_t seed = 0;
  bool comm = true;
  PhaseTarget phase_target = PhaseTarget::Replay;
  UniLightShape shape;
  int eval_every = 0;  // frames; 0 disables periodic evaluation
  int eval_episodes = 1;
  int log_every = 1000;

  bool operator==(const TrainConfig&) const = default;
};

// {"format": 1, "train": {...}}; absent keys keep their defaults.
TrainConfig parse_train_config(std::string_view text);
TrainConfig load_train_config(const std::string& path);
std::string print_train_config(const TrainConfig& config);
void validate_train_config(const TrainConfig& config);

double epsilon_at(int frame, const TrainConfig& config);

struct Transition {
  int agent = 0;
  Observation z;
  int action = 0;
  double reward = 0.0;  // n-step discounted return
  Observation z_next;
  bool done = false;
  std::vector<double> recorded_permissions;  // g^r
  std::vector<double> recorded_arrivals;     // l^r per outgoing slot, lane-normalised
};

double n_step_return(std::span<const double> rewards, double gamma);

// Turns one agent's per-step records into n-step transitions.
class NStepAccumulator {
 public:
  NStepAccumulator(int n, double gamma) : n_(n), gamma_(gamma) {}
  // step.reward holds the one-step reward; step.z_next/done are ignored.
  std::vector<Transition> push(Transition step, const Observation& next, bool done);
  std::size_t pending() const { return steps_.size(); }
  void clear() { steps_.clear(); }

 private:
  Transition emit(std::size_t horizon, const Observation& next, bool done) const;

  int n_;
  double gamma_;
  std::deque<Transition> steps_;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return data_.size(); }
  bool full() const { return size_ == data_.size(); }
  // i-th oldest stored transition
  const Transition& oldest(std::size_t i) const;
  // distinct indices into storage
  std::vector<std::size_t> sample(std::size_t batch, Rng& rng) const;
  const Transition& slot(std::size_t i) const { return data_.at(i); }

 private:
  std::vector<Transition> data_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
};

// y = R + (1 - done) * gamma^n * q_target_next[argmax q_online_next]
double double_q_target(double reward, bool done, double gamma_n, const std::vector<double>& q_online_next,
                       const std::vector<double>& q_target_next);

struct LossReport {
  double td = 0.0;
  double phase = 0.0;
  double volume = 0.0;
};

struct LogRow {
  int frame = 0;
  double epsilon = 0.0;
  std::optional<LossReport> losses;  // absent before training starts
  std::optional<EpisodeMetrics> eval;
};

std::string training_log_header();
std::string format_log_row(const LogRow& row);

// Registers both models in one store and initialises it from the seed.
nn::ParamStore make_params(const UniLightShape& shape, std::uint64_t seed);

class Trainer {
 public:
  Trainer(std::shared_ptr<const Scenario> scenario, TrainConfig config);

  // One gradient step on a sampled batch. Throws BufferNotFull.
  LossReport train_step();
  // Advances one joint env step (epsilon-greedy), storing transitions and
  // training once the buffer is full.
  void advance_frame();
  // Runs all remaining frames, invoking on_row at every log/eval boundary.
  void run(const std::function<void(const LogRow&)>& on_row = {});

  std::vector<double> td_targets(const std::vector<std::size_t>& batch);

  nn::ParamStore& online() { return online_; }
  const nn::ParamStore& target() const { return target_; }
  ReplayBuffer& buffer() { return buffer_; }
  const TrainConfig& config() const { return config_; }
  Environment& env() { return env_; }
  int frame() const { return frame_; }
  int gradient_steps() const { return grad_steps_; }
  const std::vector<LogRow>& log() const { return log_; }

 private:
  std::vector<Observation> fresh_episode();
  std::uint64_t episode_seed(int episode) const;

  std::shared_ptr<const Scenario> scenario_;
  TrainConfig config_;
  Environment env_;
  nn::ParamStore online_;
  nn::ParamStore target_;
  ReplayBuffer buffer_;
  std::vector<NStepAccumulator> accumulators_;
  Rng action_rng_;
  Rng sample_rng_;
  nn::Graph graph_;
  nn::Graph scratch_;
  std::vector<Observation> obs_;
  int frame_ = 0;
  int episode_ = 0;
  int grad_steps_ = 0;
  LossReport window_{};
  int window_steps_ = 0;
  std::vector<LogRow> log_;
};

struct TrainingResult {
  nn::ParamStore params;
  std::vector<LogRow> log;
  int gradient_steps = 0;
};

// Trains, writing the CSV log and the checkpoint when paths are non-empty.
TrainingResult run_training(std::shared_ptr<const Scenario> scenario, const TrainConfig& config,
                            const std::string& log_path = {}, const std::string& checkpoint_path = {});

}  // namespace tsc
