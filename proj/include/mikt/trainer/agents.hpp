#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mikt/ndmath/param.hpp"
#include "mikt/nets/coupled.hpp"
#include "mikt/rlcore/losses.hpp"
#include "mikt/rlcore/rollout.hpp"
#include "mikt/trainer/checkpoint.hpp"

namespace mikt::train {

struct AgentOptions {
  double clip_eps = 0.2;
  double learning_rate = 3e-4;
  double c_kl = 0.5;
  bool use_kl_reg = true;
  bool use_mi = true;
  bool rl_grads_to_encoder = true;
};

// Rollout-time policy head and value for one observation.
struct ActOutput {
  std::vector<double> mean;
  std::vector<double> log_std;
  double value = 0.0;
};

struct UpdateStats {
  rl::LossReport losses;
  // Norm of the encoder gradient contributed by the RL pass and by the MI
  // pass of this update (zero for agents without an encoder).
  double encoder_grad_rl = 0.0;
  double encoder_grad_mi = 0.0;
};

/// A learner the PPO loop can drive: acts on single observations without
/// recording gradients and applies one optimizer step per minibatch.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual void act(std::span<const double> obs, ActOutput& out) const = 0;
  virtual double value(std::span<const double> obs) const = 0;
  // c_couple is passed per call so a schedule can ramp it.
  virtual UpdateStats update(const rl::Minibatch& mb, double c_couple) = 0;

  virtual std::vector<double> p_policy() const { return {}; }
  virtual std::vector<double> p_value() const { return {}; }
  virtual Checkpoint checkpoint(const std::string& algorithm, const std::string& env_id) const = 0;
};

/// Plain PPO on a solo actor-critic (teacher pre-training, VPG, MLPP).
class PpoAgent : public Agent {
 public:
  PpoAgent(nets::ActorCritic ac, const AgentOptions& options);

  int state_dim() const override { return ac_.state_dim(); }
  int action_dim() const override { return ac_.action_dim(); }
  void act(std::span<const double> obs, ActOutput& out) const override;
  double value(std::span<const double> obs) const override;
  UpdateStats update(const rl::Minibatch& mb, double c_couple) override;
  Checkpoint checkpoint(const std::string& algorithm, const std::string& env_id) const override;

  const nets::ActorCritic& actor_critic() const { return ac_; }

 private:
  nets::ActorCritic ac_;
  AgentOptions options_;
  nd::AdamConfig adam_;
};

enum class LossTerm { kPolicy, kValue, kMi, kCoupling, kKl };

const char* to_string(LossTerm term);

/// Coupled teacher/student learner with the gradient routing of MIKT.
///
/// Each update runs two backward passes over one graph:
///   RL pass  L_pi + L_v (+ c_kl L_KL) + c_couple L_coupling
///            -> student policy, log-std, student value, mixing weights,
///               and the encoder when rl_grads_to_encoder is set;
///   MI pass  L_MI -> decoder, and the encoder when use_mi is set.
/// The teacher is frozen and never receives gradient.
class MiktAgent : public Agent {
 public:
  MiktAgent(nets::CoupledNetworkPair pair, nets::VariationalDecoder decoder, const AgentOptions& options);

  int state_dim() const override { return pair_.student().state_dim(); }
  int action_dim() const override { return pair_.student().action_dim(); }
  void act(std::span<const double> obs, ActOutput& out) const override;
  double value(std::span<const double> obs) const override;
  UpdateStats update(const rl::Minibatch& mb, double c_couple) override;
  std::vector<double> p_policy() const override { return pair_.mixing().policy_values(); }
  std::vector<double> p_value() const override { return pair_.mixing().value_values(); }
  Checkpoint checkpoint(const std::string& algorithm, const std::string& env_id) const override;

  const nets::CoupledNetworkPair& pair() const { return pair_; }
  nets::CoupledNetworkPair& pair() { return pair_; }
  const nets::VariationalDecoder& decoder() const { return decoder_; }
  nets::VariationalDecoder& decoder() { return decoder_; }

  std::uint64_t teacher_hash() const;

  // Gradient norm per group produced by a single loss term routed exactly as
  // in update(). Groups: student_policy, log_std, student_value, encoder,
  // decoder, mixing_policy, mixing_value, teacher_policy, teacher_value.
  // Parameters are left unchanged and gradient buffers zeroed.
  std::vector<std::pair<std::string, double>> probe(const rl::Minibatch& mb, LossTerm term);

 private:
  struct Terms {
    nd::Tensor policy, value, kl, coupling, mi;
  };
  Terms build(nd::Graph& g, const rl::Minibatch& mb) const;
  nd::GroupMask rl_mask() const;
  nd::GroupMask mi_mask() const;
  std::vector<nd::ParamGroup*> trainable_groups();
  void zero_grads();

  nets::CoupledNetworkPair pair_;
  nets::VariationalDecoder decoder_;
  AgentOptions options_;
  nd::AdamConfig adam_;
};

}  // namespace mikt::train
