#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mikt/trainer/agents.hpp"
#include "mikt/trainer/checkpoint.hpp"
#include "mikt/trainer/config.hpp"

namespace mikt::train {

/// One row per training iteration. Fields that do not apply to an algorithm
/// (MI, coupling, KL, mixing weights for the solo learners) stay zero.
struct MetricsRow {
  int iteration = 0;
  std::int64_t env_steps = 0;
  double ret_mean = 0.0;  // undiscounted return of episodes finished this iteration
  double ret_std = 0.0;
  double loss_pi = 0.0;   // losses averaged over the iteration's minibatches
  double loss_v = 0.0;
  double loss_mi = 0.0;
  double loss_couple = 0.0;
  double loss_kl = 0.0;
  double p_pi_mean = 0.0;
  double p_v_mean = 0.0;
  std::vector<double> p_layers;  // policy layers, then value layers
  double wall_s = 0.0;           // 0 unless log_wall_clock is set
};

struct DiagnosticsRow {
  int iteration = 0;
  double encoder_grad_rl = 0.0;  // mean per-update norm over the iteration
  double encoder_grad_mi = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricsRow> metrics;
  std::vector<DiagnosticsRow> diagnostics;
  double initial_p_mean = 0.0;  // mean realized mixing weight before training
  std::uint64_t teacher_hash_before = 0;
  std::uint64_t teacher_hash_after = 0;
};

struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using MetricsSink = std::function<void(const MetricsRow&, const DiagnosticsRow&)>;

// Solo PPO on cfg.env; the result is a teacher checkpoint.
TrainResult pretrain_teacher(const TrainConfig& cfg, const MetricsSink& sink = {});
// PPO from scratch on cfg.env.
TrainResult train_vpg(const TrainConfig& cfg, const MetricsSink& sink = {});
// Teacher's hidden-to-hidden stack with fresh input/output layers.
TrainResult train_mlpp(const TrainConfig& cfg, const Checkpoint& teacher, const MetricsSink& sink = {});
TrainResult train_mikt(const TrainConfig& cfg, const Checkpoint& teacher, const MetricsSink& sink = {});
// Dispatches on cfg.algorithm; teacher may be null for pretrain and vpg.
TrainResult train(const TrainConfig& cfg, const Checkpoint* teacher, const MetricsSink& sink = {});

// Building blocks, exposed for tests and the bindings.
nets::ActorCritic mlpp_student(const Checkpoint& teacher, int state_dim, int action_dim,
                               envs::RngStream& rng);
MiktAgent make_mikt_agent(const TrainConfig& cfg, const Checkpoint& teacher, envs::RngStream& rng);
AgentOptions agent_options(const TrainConfig& cfg);

// Runs the PPO loop of cfg on an arbitrary agent.
TrainResult run_ppo(const TrainConfig& cfg, Agent& agent, const MetricsSink& sink = {});

struct EvalResult {
  double mean = 0.0;
  double std = 0.0;  // population std over episodes
  std::vector<double> returns;
};

// Deterministic (mean-action) rollouts of the decoupled student.
EvalResult evaluate(const Checkpoint& ck, const std::string& env_id, int episodes, std::uint64_t seed);
// Uniform random actions in [-1, 1]^k.
EvalResult evaluate_random(const std::string& env_id, int episodes, std::uint64_t seed);

// Learning-curve summaries: area under ret_mean over env steps divided by the
// step span, and the mean of ret_mean over the last `tail` iterations.
double normalized_auc(const std::vector<MetricsRow>& rows);
double final_return(const std::vector<MetricsRow>& rows, int tail = 5);
double final_p_mean(const std::vector<MetricsRow>& rows);

}  // namespace mikt::train
