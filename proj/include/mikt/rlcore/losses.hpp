#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "mikt/nets/coupled.hpp"
#include "mikt/ndmath/graph.hpp"

namespace mikt::rl {

struct NonFiniteLossError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scalar values of every loss term of one update, for logging.
struct LossReport {
  double policy = 0.0;    // clipped surrogate
  double value = 0.0;     // value regression
  double mi = 0.0;        // -E[log q(s | phi(s))]
  double coupling = 0.0;
  double kl = 0.0;
  double total = 0.0;
  std::vector<double> p_policy;
  std::vector<double> p_value;
};

/// -mean(min(r A, clip(r, 1-eps, 1+eps) A)) with r = exp(new - old).
/// new_log_probs is [batch x 1]; throws NonFiniteLossError naming the first
/// index whose ratio is not finite.
nd::Tensor ppo_policy_loss(const nd::Tensor& new_log_probs, std::span<const double> old_log_probs,
                           std::span<const double> advantages, double clip_eps);

// mean((V - target)^2); new_values is [batch x 1].
nd::Tensor ppo_value_loss(const nd::Tensor& new_values, std::span<const double> targets);

/// -(1/N_pi) sum log p_pi - (1/N_v) sum log p_v; inputs are [1 x N] rows of
/// realized weights.
nd::Tensor coupling_loss(const nd::Tensor& p_policy, const nd::Tensor& p_value);
nd::Tensor coupling_loss(nd::Graph& g, const nets::MixingWeights& mixing);

/// -mean log q_omega(s | e). Throws NonFiniteLossError on a non-finite
/// density.
nd::Tensor mi_loss(const nets::VariationalDecoder& decoder, const nd::Tensor& states,
                   const nd::Tensor& embeddings);

/// mean over rows of D_KL(current || rollout); rollout head is constant.
nd::Tensor kl_regularizer(const nets::PolicyOutput& current, const nd::Matrix& old_mean,
                          const nd::Matrix& old_log_std);

}  // namespace mikt::rl
