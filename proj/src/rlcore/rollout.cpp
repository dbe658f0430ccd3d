#include "mikt/rlcore/rollout.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mikt/rlcore/gae.hpp"

namespace mikt::rl {

RolloutBatch::RolloutBatch(int state_dim, int action_dim, std::uint64_t policy_version)
    : state_dim_(state_dim), action_dim_(action_dim), policy_version_(policy_version) {}

void RolloutBatch::add(Transition t) {
  if (finalized_) throw std::logic_error("rollout batch: add after finalize");
  const auto sd = static_cast<std::size_t>(state_dim_);
  const auto ad = static_cast<std::size_t>(action_dim_);
  if (t.state.size() != sd || t.action.size() != ad || t.policy_mean.size() != ad ||
      t.policy_log_std.size() != ad) {
    throw std::invalid_argument("rollout batch: transition dims do not match (" +
                                std::to_string(state_dim_) + ", " + std::to_string(action_dim_) + ")");
  }
  if (!std::isfinite(t.log_prob)) {
    throw std::invalid_argument("rollout batch: non-finite log-prob at index " +
                                std::to_string(transitions_.size()));
  }
  transitions_.push_back(std::move(t));
}

void RolloutBatch::finalize(double gamma, double lambda, bool normalize) {
  if (finalized_) throw std::logic_error("rollout batch: advantages already computed");
  const std::size_t n = transitions_.size();
  std::vector<double> rewards(n), values(n), next_values(n);
  std::vector<std::uint8_t> dones(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = transitions_[i];
    rewards[i] = t.reward;
    values[i] = t.value;
    next_values[i] = t.next_value;
    dones[i] = t.done ? 1 : 0;
  }
  auto gae = compute_gae(rewards, values, next_values, dones, gamma, lambda);
  advantages_ = std::move(gae.advantages);
  targets_ = std::move(gae.value_targets);
  if (normalize) normalize_advantages(advantages_);
  finalized_ = true;
}

Minibatch RolloutBatch::gather(std::span<const std::size_t> indices) const {
  if (!finalized_) throw std::logic_error("rollout batch: gather before finalize");
  const auto m = static_cast<nd::Index>(indices.size());
  Minibatch mb;
  mb.states.resize(m, state_dim_);
  mb.actions.resize(m, action_dim_);
  mb.old_mean.resize(m, action_dim_);
  mb.old_log_std.resize(m, action_dim_);
  mb.old_log_probs.reserve(indices.size());
  mb.advantages.reserve(indices.size());
  mb.value_targets.reserve(indices.size());
  for (nd::Index r = 0; r < m; ++r) {
    const std::size_t i = indices[static_cast<std::size_t>(r)];
    const auto& t = transitions_.at(i);
    for (int c = 0; c < state_dim_; ++c) mb.states(r, c) = t.state[static_cast<std::size_t>(c)];
    for (int c = 0; c < action_dim_; ++c) {
      const auto k = static_cast<std::size_t>(c);
      mb.actions(r, c) = t.action[k];
      mb.old_mean(r, c) = t.policy_mean[k];
      mb.old_log_std(r, c) = t.policy_log_std[k];
    }
    mb.old_log_probs.push_back(t.log_prob);
    mb.advantages.push_back(advantages_[i]);
    mb.value_targets.push_back(targets_[i]);
  }
  return mb;
}

}  // namespace mikt::rl
