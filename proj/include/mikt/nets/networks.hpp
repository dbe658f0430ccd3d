#pragma once

#include <span>
#include <vector>

#include "mikt/nets/mlp.hpp"

namespace mikt::nets {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 4.0;
inline constexpr double kInitialLogStd = -0.5;

/// Diagonal Gaussian head, both tensors [batch x action_dim].
struct PolicyOutput {
  nd::Tensor mean;
  nd::Tensor log_std;
};

/// Diagonal Gaussian policy with a state-independent, trainable log-std.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(const MlpSpec& spec, envs::RngStream& rng);
  GaussianPolicy(Mlp mean, nd::ParamGroup log_std);

  int state_dim() const { return mean_.spec().input_dim; }
  int action_dim() const { return mean_.spec().output_dim; }
  const Mlp& mean_net() const { return mean_; }
  Mlp& mean_net() { return mean_; }
  const nd::ParamGroup& log_std_group() const { return log_std_; }
  nd::ParamGroup& log_std_group() { return log_std_; }

  // Clamped log-std broadcast to `rows` rows.
  nd::Tensor log_std(nd::Graph& g, nd::Index rows) const;
  PolicyOutput forward(nd::Graph& g, const nd::Tensor& states) const;

  void freeze();

 private:
  Mlp mean_;
  nd::ParamGroup log_std_;
};

class ValueNet {
 public:
  ValueNet() = default;
  ValueNet(const MlpSpec& spec, envs::RngStream& rng);
  explicit ValueNet(Mlp net);

  int state_dim() const { return net_.spec().input_dim; }
  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }
  // [batch x 1]
  nd::Tensor forward(nd::Graph& g, const nd::Tensor& states) const { return net_.forward(g, states); }
  void freeze() { net_.params().freeze(); }

 private:
  Mlp net_;
};

/// phi: target state -> embedding with the source state dimension.
class Encoder {
 public:
  Encoder() = default;
  Encoder(int target_state_dim, int source_state_dim, const MlpSpec& hidden, envs::RngStream& rng);
  explicit Encoder(Mlp net) : net_(std::move(net)) {}

  int input_dim() const { return net_.spec().input_dim; }
  int output_dim() const { return net_.spec().output_dim; }
  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }
  nd::Tensor forward(nd::Graph& g, const nd::Tensor& states) const { return net_.forward(g, states); }

 private:
  Mlp net_;
};

struct DecoderOutput {
  nd::Tensor mean;     // [batch x target_dim]
  nd::Tensor log_var;  // [batch x target_dim], clamped
};

/// q_omega(s | e): diagonal Gaussian over target states given an embedding.
class VariationalDecoder {
 public:
  VariationalDecoder() = default;
  VariationalDecoder(int embedding_dim, int target_state_dim, const MlpSpec& hidden,
                     envs::RngStream& rng);
  explicit VariationalDecoder(Mlp net);

  int embedding_dim() const { return net_.spec().input_dim; }
  int target_dim() const { return net_.spec().output_dim / 2; }
  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }
  DecoderOutput forward(nd::Graph& g, const nd::Tensor& embeddings) const;

 private:
  Mlp net_;
};

// log N(a; mean, diag(exp(2 log_std))) per row -> [batch x 1].
nd::Tensor gaussian_log_prob(const PolicyOutput& dist, const nd::Tensor& actions);

// Per-row D_KL(p || q) between diagonal Gaussians -> [batch x 1].
nd::Tensor diag_gaussian_kl(const PolicyOutput& p, const PolicyOutput& q);

// log q_omega(s | e) per row -> [batch x 1].
nd::Tensor decoder_log_density(const VariationalDecoder& dec, const nd::Tensor& states,
                               const nd::Tensor& embeddings);

// mean + exp(log_std) * xi with xi ~ N(0, I) drawn from rng.
std::vector<double> sample_action(std::span<const double> mean, std::span<const double> log_std,
                                  envs::RngStream& rng);

// Scalar reference used by tests and the bindings.
double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action);

}  // namespace mikt::nets
