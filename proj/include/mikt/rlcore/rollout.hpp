#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mikt/ndmath/matrix.hpp"

namespace mikt::rl {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;  // as sampled, before environment clipping
  double reward = 0.0;
  double value = 0.0;       // V(s_t) under the rollout networks
  double log_prob = 0.0;    // log pi_old(a_t | s_t)
  bool done = false;        // episode boundary after this step
  double next_value = 0.0;  // bootstrap V(s_{t+1}); time-limit ends keep it
  std::vector<double> policy_mean;     // rollout policy head, for the KL term
  std::vector<double> policy_log_std;
};

/// Rows gathered from a RolloutBatch for one optimizer step.
struct Minibatch {
  nd::Matrix states;
  nd::Matrix actions;
  nd::Matrix old_mean;
  nd::Matrix old_log_std;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> value_targets;

  std::size_t size() const { return old_log_probs.size(); }
};

/// Transitions of one iteration plus their advantages and value targets.
///
/// Transitions are appended during collection; finalize() computes GAE (and
/// optionally normalizes advantages) exactly once, after which the batch is
/// read-only.
class RolloutBatch {
 public:
  RolloutBatch(int state_dim, int action_dim, std::uint64_t policy_version = 0);

  void add(Transition t);
  void finalize(double gamma, double lambda, bool normalize);

  bool finalized() const { return finalized_; }
  std::size_t size() const { return transitions_.size(); }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  std::uint64_t policy_version() const { return policy_version_; }

  const std::vector<Transition>& transitions() const { return transitions_; }
  const std::vector<double>& advantages() const { return advantages_; }
  const std::vector<double>& value_targets() const { return targets_; }

  Minibatch gather(std::span<const std::size_t> indices) const;

 private:
  int state_dim_;
  int action_dim_;
  std::uint64_t policy_version_;
  bool finalized_ = false;
  std::vector<Transition> transitions_;
  std::vector<double> advantages_;
  std::vector<double> targets_;
};

}  // namespace mikt::rl
