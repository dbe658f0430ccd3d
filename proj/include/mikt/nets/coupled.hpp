#pragma once

#include <vector>

#include "mikt/nets/networks.hpp"

namespace mikt::nets {

/// Policy and value network of one agent.
struct ActorCritic {
  GaussianPolicy policy;
  ValueNet value;

  int state_dim() const { return policy.state_dim(); }
  int action_dim() const { return policy.action_dim(); }
};

ActorCritic make_actor_critic(int state_dim, int action_dim, const MlpSpec& hidden,
                              envs::RngStream& rng);

/// One unconstrained scalar per hidden layer of the policy pair and of the
/// value pair; the realized weight is sigmoid(raw), always in (0, 1) for
/// finite raw values.
class MixingWeights {
 public:
  MixingWeights() = default;
  MixingWeights(int policy_layers, int value_layers, double initial_raw = 0.0);
  explicit MixingWeights(nd::ParamGroup group);

  int policy_layers() const;
  int value_layers() const;
  nd::ParamGroup& params() { return group_; }
  const nd::ParamGroup& params() const { return group_; }

  // Sets every raw parameter; raw = 40 realizes p == 1 exactly in double.
  void fill_raw(double raw);

  std::vector<double> policy_values() const;
  std::vector<double> value_values() const;

  // Realized weights as [1 x N] graph tensors.
  nd::Tensor policy(nd::Graph& g) const;
  nd::Tensor value(nd::Graph& g) const;

 private:
  nd::ParamGroup group_;
};

struct CoupledOutput {
  nd::Tensor embedding;
  PolicyOutput policy;
  nd::Tensor value;
};

// Per-layer intermediate values of one coupled forward pass.
struct CoupledTrace {
  std::vector<nd::Tensor> student_policy_hidden;
  std::vector<nd::Tensor> student_value_hidden;
  std::vector<nd::Tensor> teacher_policy_pre;
  std::vector<nd::Tensor> teacher_value_pre;
};

/// Frozen teacher + trainable student joined by per-layer lateral mixing.
///
/// At student hidden layer j the activation is
///   h_j = tanh(p_j * z_j + (1 - p_j) * z'_j)
/// where z_j is the student pre-activation on its own previous layer and
/// z'_j is the teacher pre-activation computed from the teacher's own
/// unmixed stream on phi(s). Output layers are never mixed. The teacher
/// groups are frozen at construction and never receive gradient.
class CoupledNetworkPair {
 public:
  CoupledNetworkPair() = default;
  CoupledNetworkPair(ActorCritic teacher, ActorCritic student, Encoder encoder,
                     MixingWeights mixing);

  // Builds a fresh student, encoder and mixing weights around the teacher.
  static CoupledNetworkPair create(ActorCritic teacher, int target_state_dim, int target_action_dim,
                                   const MlpSpec& hidden, envs::RngStream& rng);

  const ActorCritic& teacher() const { return teacher_; }
  const ActorCritic& student() const { return student_; }
  ActorCritic& student() { return student_; }
  const Encoder& encoder() const { return encoder_; }
  Encoder& encoder() { return encoder_; }
  const MixingWeights& mixing() const { return mixing_; }
  MixingWeights& mixing() { return mixing_; }

  bool coupled() const { return coupled_; }
  // When false, forward() evaluates the student alone.
  void set_coupled(bool coupled) { coupled_ = coupled; }

  CoupledOutput forward(nd::Graph& g, const nd::Tensor& states, CoupledTrace* trace = nullptr) const;
  PolicyOutput policy_forward(nd::Graph& g, const nd::Tensor& states) const;
  nd::Tensor value_forward(nd::Graph& g, const nd::Tensor& states) const;

  // Standalone copy of the student networks.
  ActorCritic decouple() const { return student_; }

 private:
  void validate() const;

  ActorCritic teacher_;
  ActorCritic student_;
  Encoder encoder_;
  MixingWeights mixing_;
  bool coupled_ = true;
};

}  // namespace mikt::nets
