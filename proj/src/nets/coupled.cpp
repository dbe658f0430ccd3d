#include "mikt/nets/coupled.hpp"

#include <cmath>
#include <stdexcept>

namespace mikt::nets {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Runs the teacher net on the embedding and returns its hidden
// pre-activations (the output layer is not needed).
std::vector<nd::Tensor> teacher_stream(nd::Graph& g, const Mlp& net, const nd::Tensor& embedding) {
  std::vector<nd::Tensor> pre;
  nd::Tensor h = embedding;
  for (int j = 0; j < net.hidden_layers(); ++j) {
    pre.push_back(net.layer(g, j, h));
    h = activate(net.spec().activation, pre.back());
  }
  return pre;
}

nd::Tensor mixed_stream(nd::Graph& g, const Mlp& student, const nd::Tensor& states,
                        const std::vector<nd::Tensor>& teacher_pre, const nd::Tensor& weights,
                        std::vector<nd::Tensor>* hidden) {
  nd::Tensor h = states;
  for (int j = 0; j < student.hidden_layers(); ++j) {
    const auto z = student.layer(g, j, h);
    const auto p = nd::slice_cols(weights, j, 1);
    const auto q = nd::affine(p, -1.0, 1.0);
    const auto mixed = nd::add(nd::mul(p, z), nd::mul(q, teacher_pre[static_cast<std::size_t>(j)]));
    h = activate(student.spec().activation, mixed);
    if (hidden != nullptr) hidden->push_back(h);
  }
  return student.layer(g, student.hidden_layers(), h);
}

nd::Tensor solo_stream(nd::Graph& g, const Mlp& net, const nd::Tensor& states,
                       std::vector<nd::Tensor>* hidden) {
  nd::Tensor h = states;
  for (int j = 0; j < net.hidden_layers(); ++j) {
    h = activate(net.spec().activation, net.layer(g, j, h));
    if (hidden != nullptr) hidden->push_back(h);
  }
  return net.layer(g, net.hidden_layers(), h);
}

}  // namespace

ActorCritic make_actor_critic(int state_dim, int action_dim, const MlpSpec& hidden,
                              envs::RngStream& rng) {
  MlpSpec pspec = hidden;
  pspec.input_dim = state_dim;
  pspec.output_dim = action_dim;
  MlpSpec vspec = hidden;
  vspec.input_dim = state_dim;
  vspec.output_dim = 1;
  ActorCritic ac;
  ac.policy = GaussianPolicy(pspec, rng);
  ac.value = ValueNet(vspec, rng);
  return ac;
}

MixingWeights::MixingWeights(int policy_layers, int value_layers, double initial_raw)
    : group_("mixing", true) {
  if (policy_layers < 1 || value_layers < 1) {
    throw std::invalid_argument("mixing weights: layer counts must be >= 1");
  }
  group_.add("policy", nd::Matrix::Constant(1, policy_layers, initial_raw));
  group_.add("value", nd::Matrix::Constant(1, value_layers, initial_raw));
}

MixingWeights::MixingWeights(nd::ParamGroup group) : group_(std::move(group)) {
  if (group_.at("policy").value.rows() != 1 || group_.at("value").value.rows() != 1) {
    throw std::invalid_argument("mixing weights: expected row vectors");
  }
}

int MixingWeights::policy_layers() const {
  return static_cast<int>(group_.at("policy").value.cols());
}
int MixingWeights::value_layers() const { return static_cast<int>(group_.at("value").value.cols()); }

void MixingWeights::fill_raw(double raw) {
  for (auto& p : group_.params()) p.value.setConstant(raw);
}

std::vector<double> MixingWeights::policy_values() const {
  std::vector<double> out;
  for (double r : group_.at("policy").value.reshaped()) out.push_back(sigmoid(r));
  return out;
}

std::vector<double> MixingWeights::value_values() const {
  std::vector<double> out;
  for (double r : group_.at("value").value.reshaped()) out.push_back(sigmoid(r));
  return out;
}

nd::Tensor MixingWeights::policy(nd::Graph& g) const {
  return nd::sigmoid(g.param(group_.at("policy"), group_));
}

nd::Tensor MixingWeights::value(nd::Graph& g) const {
  return nd::sigmoid(g.param(group_.at("value"), group_));
}

CoupledNetworkPair::CoupledNetworkPair(ActorCritic teacher, ActorCritic student, Encoder encoder,
                                       MixingWeights mixing)
    : teacher_(std::move(teacher)),
      student_(std::move(student)),
      encoder_(std::move(encoder)),
      mixing_(std::move(mixing)) {
  teacher_.policy.freeze();
  teacher_.value.freeze();
  validate();
}

CoupledNetworkPair CoupledNetworkPair::create(ActorCritic teacher, int target_state_dim,
                                              int target_action_dim, const MlpSpec& hidden,
                                              envs::RngStream& rng) {
  MlpSpec h = hidden;
  h.hidden_layers = teacher.policy.mean_net().hidden_layers();
  h.hidden_units = teacher.policy.mean_net().spec().hidden_units;
  MlpSpec hv = h;
  hv.hidden_layers = teacher.value.net().hidden_layers();
  hv.hidden_units = teacher.value.net().spec().hidden_units;

  ActorCritic student;
  MlpSpec pspec = h;
  pspec.input_dim = target_state_dim;
  pspec.output_dim = target_action_dim;
  student.policy = GaussianPolicy(pspec, rng);
  MlpSpec vspec = hv;
  vspec.input_dim = target_state_dim;
  vspec.output_dim = 1;
  student.value = ValueNet(vspec, rng);

  Encoder encoder(target_state_dim, teacher.state_dim(), hidden, rng);
  MixingWeights mixing(h.hidden_layers, hv.hidden_layers);
  return CoupledNetworkPair(std::move(teacher), std::move(student), std::move(encoder),
                            std::move(mixing));
}

void CoupledNetworkPair::validate() const {
  const auto fail = [](const std::string& msg) { throw std::invalid_argument("coupled pair: " + msg); };
  if (encoder_.output_dim() != teacher_.state_dim() || teacher_.value.state_dim() != teacher_.state_dim()) {
    fail("encoder output dim " + std::to_string(encoder_.output_dim()) +
         " does not match teacher input dim " + std::to_string(teacher_.state_dim()));
  }
  if (encoder_.input_dim() != student_.state_dim() || student_.value.state_dim() != student_.state_dim()) {
    fail("encoder input dim " + std::to_string(encoder_.input_dim()) +
         " does not match student state dim " + std::to_string(student_.state_dim()));
  }
  const auto& tp = teacher_.policy.mean_net().spec();
  const auto& sp = student_.policy.mean_net().spec();
  const auto& tv = teacher_.value.net().spec();
  const auto& sv = student_.value.net().spec();
  if (tp.hidden_layers != sp.hidden_layers || tv.hidden_layers != sv.hidden_layers) {
    fail("teacher and student must have equal hidden-layer counts");
  }
  if (tp.hidden_units != sp.hidden_units || tv.hidden_units != sv.hidden_units) {
    fail("teacher and student hidden widths differ");
  }
  if (mixing_.policy_layers() != sp.hidden_layers || mixing_.value_layers() != sv.hidden_layers) {
    fail("mixing weight count does not match hidden-layer count");
  }
}

CoupledOutput CoupledNetworkPair::forward(nd::Graph& g, const nd::Tensor& states,
                                          CoupledTrace* trace) const {
  if (states.cols() != student_.state_dim()) {
    throw nd::ShapeError("coupled forward: state has " + std::to_string(states.cols()) +
                         " dims, expected " + std::to_string(student_.state_dim()));
  }
  CoupledOutput out;
  const auto& pol = student_.policy.mean_net();
  const auto& val = student_.value.net();
  if (!coupled_) {
    out.policy.mean = solo_stream(g, pol, states, trace ? &trace->student_policy_hidden : nullptr);
    out.policy.log_std = student_.policy.log_std(g, states.rows());
    out.value = solo_stream(g, val, states, trace ? &trace->student_value_hidden : nullptr);
    return out;
  }
  out.embedding = encoder_.forward(g, states);
  auto tpol = teacher_stream(g, teacher_.policy.mean_net(), out.embedding);
  auto tval = teacher_stream(g, teacher_.value.net(), out.embedding);
  out.policy.mean = mixed_stream(g, pol, states, tpol, mixing_.policy(g),
                                 trace ? &trace->student_policy_hidden : nullptr);
  out.policy.log_std = student_.policy.log_std(g, states.rows());
  out.value = mixed_stream(g, val, states, tval, mixing_.value(g),
                           trace ? &trace->student_value_hidden : nullptr);
  if (trace != nullptr) {
    trace->teacher_policy_pre = std::move(tpol);
    trace->teacher_value_pre = std::move(tval);
  }
  return out;
}

PolicyOutput CoupledNetworkPair::policy_forward(nd::Graph& g, const nd::Tensor& states) const {
  return forward(g, states).policy;
}

nd::Tensor CoupledNetworkPair::value_forward(nd::Graph& g, const nd::Tensor& states) const {
  return forward(g, states).value;
}

}  // namespace mikt::nets
