#include "mikt/nets/networks.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mikt::nets {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_same_shape(const char* what, const nd::Tensor& a, const nd::Tensor& b) {
  if (a.shape() != b.shape()) {
    throw nd::ShapeError(std::string(what) + ": shape mismatch " + nd::to_string(a.shape()) +
                         " vs " + nd::to_string(b.shape()));
  }
}

}  // namespace

GaussianPolicy::GaussianPolicy(const MlpSpec& spec, envs::RngStream& rng)
    : mean_("policy", spec, rng, 0.01), log_std_("log_std", true) {
  log_std_.add("log_std", nd::Matrix::Constant(1, spec.output_dim, kInitialLogStd));
}

GaussianPolicy::GaussianPolicy(Mlp mean, nd::ParamGroup log_std)
    : mean_(std::move(mean)), log_std_(std::move(log_std)) {
  const auto& p = log_std_.at("log_std").value;
  if (p.rows() != 1 || p.cols() != mean_.spec().output_dim) {
    throw std::invalid_argument("policy: log_std has shape " + nd::to_string(nd::shape_of(p)) +
                                ", expected [1x" + std::to_string(mean_.spec().output_dim) + "]");
  }
}

nd::Tensor GaussianPolicy::log_std(nd::Graph& g, nd::Index rows) const {
  const auto raw = g.param(log_std_.at("log_std"), log_std_);
  return nd::broadcast_rows(nd::clip(raw, kLogStdMin, kLogStdMax), rows);
}

PolicyOutput GaussianPolicy::forward(nd::Graph& g, const nd::Tensor& states) const {
  PolicyOutput out;
  out.mean = mean_.forward(g, states);
  out.log_std = log_std(g, states.rows());
  return out;
}

void GaussianPolicy::freeze() {
  mean_.params().freeze();
  log_std_.freeze();
}

ValueNet::ValueNet(const MlpSpec& spec, envs::RngStream& rng) : net_("value", spec, rng, 1.0) {
  if (spec.output_dim != 1) throw std::invalid_argument("value net: output_dim must be 1");
}

ValueNet::ValueNet(Mlp net) : net_(std::move(net)) {
  if (net_.spec().output_dim != 1) throw std::invalid_argument("value net: output_dim must be 1");
}

Encoder::Encoder(int target_state_dim, int source_state_dim, const MlpSpec& hidden,
                 envs::RngStream& rng) {
  MlpSpec spec = hidden;
  spec.input_dim = target_state_dim;
  spec.output_dim = source_state_dim;
  net_ = Mlp("encoder", spec, rng, 1.0);
}

VariationalDecoder::VariationalDecoder(int embedding_dim, int target_state_dim,
                                       const MlpSpec& hidden, envs::RngStream& rng) {
  MlpSpec spec = hidden;
  spec.input_dim = embedding_dim;
  spec.output_dim = 2 * target_state_dim;
  net_ = Mlp("decoder", spec, rng, 1.0);
}

VariationalDecoder::VariationalDecoder(Mlp net) : net_(std::move(net)) {
  if (net_.spec().output_dim % 2 != 0) {
    throw std::invalid_argument("decoder: output_dim must be even (mean and log-variance)");
  }
}

DecoderOutput VariationalDecoder::forward(nd::Graph& g, const nd::Tensor& embeddings) const {
  const auto raw = net_.forward(g, embeddings);
  const nd::Index d = target_dim();
  return {nd::slice_cols(raw, 0, d), nd::clip(nd::slice_cols(raw, d, d), kLogVarMin, kLogVarMax)};
}

nd::Tensor gaussian_log_prob(const PolicyOutput& dist, const nd::Tensor& actions) {
  require_same_shape("gaussian_log_prob", dist.mean, actions);
  require_same_shape("gaussian_log_prob", dist.mean, dist.log_std);
  const auto z = nd::mul(nd::sub(actions, dist.mean), nd::exp(nd::affine(dist.log_std, -1.0, 0.0)));
  const auto per_dim = nd::affine(nd::add(nd::affine(nd::square(z), 0.5, 0.0), dist.log_std), -1.0,
                                  -kHalfLog2Pi);
  return nd::sum_cols(per_dim);
}

nd::Tensor diag_gaussian_kl(const PolicyOutput& p, const PolicyOutput& q) {
  require_same_shape("diag_gaussian_kl", p.mean, q.mean);
  require_same_shape("diag_gaussian_kl", p.log_std, q.log_std);
  // log(sq/sp) + (sp^2 + (mp - mq)^2) / (2 sq^2) - 1/2
  const auto log_ratio = nd::sub(q.log_std, p.log_std);
  const auto var_ratio = nd::exp(nd::affine(log_ratio, -2.0, 0.0));
  const auto diff = nd::mul(nd::sub(p.mean, q.mean), nd::exp(nd::affine(q.log_std, -1.0, 0.0)));
  const auto quad = nd::affine(nd::add(var_ratio, nd::square(diff)), 0.5, -0.5);
  return nd::sum_cols(nd::add(log_ratio, quad));
}

nd::Tensor decoder_log_density(const VariationalDecoder& dec, const nd::Tensor& states,
                               const nd::Tensor& embeddings) {
  if (embeddings.cols() != dec.embedding_dim()) {
    throw nd::ShapeError("decoder_log_density: embedding has " + std::to_string(embeddings.cols()) +
                         " dims, decoder expects " + std::to_string(dec.embedding_dim()));
  }
  if (states.cols() != dec.target_dim() || states.rows() != embeddings.rows()) {
    throw nd::ShapeError("decoder_log_density: states " + nd::to_string(states.shape()) +
                         " do not match decoder target dim " + std::to_string(dec.target_dim()) +
                         " / embedding rows " + std::to_string(embeddings.rows()));
  }
  const auto out = dec.forward(*states.graph(), embeddings);
  // -1/2 [log 2pi + log_var + (s - mu)^2 exp(-log_var)]
  const auto resid = nd::square(nd::sub(states, out.mean));
  const auto scaled = nd::mul(resid, nd::exp(nd::affine(out.log_var, -1.0, 0.0)));
  const auto per_dim = nd::affine(nd::add(scaled, out.log_var), -0.5, -kHalfLog2Pi);
  return nd::sum_cols(per_dim);
}

std::vector<double> sample_action(std::span<const double> mean, std::span<const double> log_std,
                                  envs::RngStream& rng) {
  if (mean.size() != log_std.size()) throw std::invalid_argument("sample_action: dim mismatch");
  std::vector<double> a(mean.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
  return a;
}

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action) {
  if (mean.size() != log_std.size() || mean.size() != action.size()) {
    throw std::invalid_argument("gaussian_log_prob: dim mismatch");
  }
  double lp = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double z = (action[i] - mean[i]) / std::exp(log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

}  // namespace mikt::nets
