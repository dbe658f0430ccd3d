#include "mikt/rlcore/losses.hpp"

#include <cmath>
#include <string>

namespace mikt::rl {

namespace {

nd::Matrix column(std::span<const double> v) {
  nd::Matrix m(static_cast<nd::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<nd::Index>(i), 0) = v[i];
  return m;
}

void require_column(const char* what, const nd::Tensor& t, std::size_t n) {
  if (t.cols() != 1 || static_cast<std::size_t>(t.rows()) != n) {
    throw nd::ShapeError(std::string(what) + ": expected [" + std::to_string(n) + "x1], got " +
                         nd::to_string(t.shape()));
  }
}

}  // namespace

nd::Tensor ppo_policy_loss(const nd::Tensor& new_log_probs, std::span<const double> old_log_probs,
                           std::span<const double> advantages, double clip_eps) {
  const std::size_t n = old_log_probs.size();
  if (advantages.size() != n) throw std::invalid_argument("ppo_policy_loss: length mismatch");
  require_column("ppo_policy_loss", new_log_probs, n);
  nd::Graph& g = *new_log_probs.graph();
  const auto ratio = nd::exp(nd::sub(new_log_probs, g.constant(column(old_log_probs))));
  const auto& r = ratio.value();
  for (nd::Index i = 0; i < r.rows(); ++i) {
    if (!std::isfinite(r(i, 0))) {
      throw NonFiniteLossError("ppo_policy_loss: non-finite probability ratio at index " +
                               std::to_string(i));
    }
  }
  const auto adv = g.constant(column(advantages));
  const auto unclipped = nd::mul(ratio, adv);
  const auto clipped = nd::mul(nd::clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps), adv);
  return nd::affine(nd::mean(nd::minimum(unclipped, clipped)), -1.0, 0.0);
}

nd::Tensor ppo_value_loss(const nd::Tensor& new_values, std::span<const double> targets) {
  require_column("ppo_value_loss", new_values, targets.size());
  nd::Graph& g = *new_values.graph();
  return nd::mean(nd::square(nd::sub(new_values, g.constant(column(targets)))));
}

nd::Tensor coupling_loss(const nd::Tensor& p_policy, const nd::Tensor& p_value) {
  if (p_policy.rows() != 1 || p_value.rows() != 1) {
    throw nd::ShapeError("coupling_loss: mixing weights must be row vectors");
  }
  const auto lp = nd::mean(nd::log(p_policy));
  const auto lv = nd::mean(nd::log(p_value));
  return nd::affine(nd::add(lp, lv), -1.0, 0.0);
}

nd::Tensor coupling_loss(nd::Graph& g, const nets::MixingWeights& mixing) {
  return coupling_loss(mixing.policy(g), mixing.value(g));
}

nd::Tensor mi_loss(const nets::VariationalDecoder& decoder, const nd::Tensor& states,
                   const nd::Tensor& embeddings) {
  const auto log_q = nets::decoder_log_density(decoder, states, embeddings);
  const auto& v = log_q.value();
  for (nd::Index i = 0; i < v.rows(); ++i) {
    if (!std::isfinite(v(i, 0))) {
      throw NonFiniteLossError("mi_loss: non-finite decoder density at index " + std::to_string(i));
    }
  }
  return nd::affine(nd::mean(log_q), -1.0, 0.0);
}

nd::Tensor kl_regularizer(const nets::PolicyOutput& current, const nd::Matrix& old_mean,
                          const nd::Matrix& old_log_std) {
  nd::Graph& g = *current.mean.graph();
  const nets::PolicyOutput old{g.constant(old_mean), g.constant(old_log_std)};
  return nd::mean(nets::diag_gaussian_kl(current, old));
}

}  // namespace mikt::rl
