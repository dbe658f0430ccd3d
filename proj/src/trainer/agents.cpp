#include "mikt/trainer/agents.hpp"

#include <cmath>

namespace mikt::train {

namespace {

nd::Matrix row_of(std::span<const double> obs) {
  nd::Matrix m(1, static_cast<nd::Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) m(0, static_cast<nd::Index>(i)) = obs[i];
  return m;
}

std::vector<double> to_vector(const nd::Matrix& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

void fill_act(const nets::PolicyOutput& pol, const nd::Tensor& value, ActOutput& out) {
  out.mean = to_vector(pol.mean.value());
  out.log_std = to_vector(pol.log_std.value());
  out.value = value.item();
}

nd::AdamConfig adam_for(const AgentOptions& o) {
  nd::AdamConfig a;
  a.learning_rate = o.learning_rate;
  a.validate();
  return a;
}

double matrix_norm(const nd::Matrix& m) { return m.size() == 0 ? 0.0 : m.norm(); }

}  // namespace

// -- PpoAgent ----------------------------------------------------------------

PpoAgent::PpoAgent(nets::ActorCritic ac, const AgentOptions& options)
    : ac_(std::move(ac)), options_(options), adam_(adam_for(options)) {}

void PpoAgent::act(std::span<const double> obs, ActOutput& out) const {
  nd::Graph g(false);
  const auto x = g.constant(row_of(obs));
  fill_act(ac_.policy.forward(g, x), ac_.value.forward(g, x), out);
}

double PpoAgent::value(std::span<const double> obs) const {
  nd::Graph g(false);
  return ac_.value.forward(g, g.constant(row_of(obs))).item();
}

UpdateStats PpoAgent::update(const rl::Minibatch& mb, double /*c_couple*/) {
  nd::Graph g;
  const auto x = g.constant(mb.states);
  const auto pol = ac_.policy.forward(g, x);
  const auto logp = nets::gaussian_log_prob(pol, g.constant(mb.actions));
  const auto lpi = rl::ppo_policy_loss(logp, mb.old_log_probs, mb.advantages, options_.clip_eps);
  const auto lv = rl::ppo_value_loss(ac_.value.forward(g, x), mb.value_targets);
  const auto total = nd::add(lpi, lv);
  if (!std::isfinite(total.item())) throw rl::NonFiniteLossError("ppo update: non-finite loss");
  g.backward(total);
  adam_step(ac_.policy.mean_net().params(), adam_);
  adam_step(ac_.policy.log_std_group(), adam_);
  adam_step(ac_.value.net().params(), adam_);

  UpdateStats s;
  s.losses.policy = lpi.item();
  s.losses.value = lv.item();
  s.losses.total = total.item();
  return s;
}

Checkpoint PpoAgent::checkpoint(const std::string& algorithm, const std::string& env_id) const {
  return make_checkpoint(ac_, algorithm, env_id);
}

// -- MiktAgent ---------------------------------------------------------------

const char* to_string(LossTerm term) {
  switch (term) {
    case LossTerm::kPolicy: return "policy";
    case LossTerm::kValue: return "value";
    case LossTerm::kMi: return "mi";
    case LossTerm::kCoupling: return "coupling";
    case LossTerm::kKl: return "kl";
  }
  return "?";
}

MiktAgent::MiktAgent(nets::CoupledNetworkPair pair, nets::VariationalDecoder decoder,
                     const AgentOptions& options)
    : pair_(std::move(pair)), decoder_(std::move(decoder)), options_(options), adam_(adam_for(options)) {
  if (decoder_.embedding_dim() != pair_.encoder().output_dim() ||
      decoder_.target_dim() != pair_.student().state_dim()) {
    throw std::invalid_argument("mikt agent: decoder dims do not match the encoder and target state");
  }
}

void MiktAgent::act(std::span<const double> obs, ActOutput& out) const {
  nd::Graph g(false);
  const auto o = pair_.forward(g, g.constant(row_of(obs)));
  fill_act(o.policy, o.value, out);
}

double MiktAgent::value(std::span<const double> obs) const {
  nd::Graph g(false);
  return pair_.value_forward(g, g.constant(row_of(obs))).item();
}

MiktAgent::Terms MiktAgent::build(nd::Graph& g, const rl::Minibatch& mb) const {
  const auto x = g.constant(mb.states);
  const auto out = pair_.forward(g, x);
  Terms t;
  const auto logp = nets::gaussian_log_prob(out.policy, g.constant(mb.actions));
  t.policy = rl::ppo_policy_loss(logp, mb.old_log_probs, mb.advantages, options_.clip_eps);
  t.value = rl::ppo_value_loss(out.value, mb.value_targets);
  t.kl = rl::kl_regularizer(out.policy, mb.old_mean, mb.old_log_std);
  t.coupling = rl::coupling_loss(g, pair_.mixing());
  const auto emb = out.embedding.valid() ? out.embedding : pair_.encoder().forward(g, x);
  t.mi = rl::mi_loss(decoder_, x, emb);
  return t;
}

nd::GroupMask MiktAgent::rl_mask() const {
  const auto& s = pair_.student();
  std::vector<const nd::ParamGroup*> groups = {&s.policy.mean_net().params(), &s.policy.log_std_group(),
                                               &s.value.net().params(), &pair_.mixing().params()};
  if (options_.rl_grads_to_encoder) groups.push_back(&pair_.encoder().net().params());
  return nd::GroupMask::only(std::move(groups));
}

nd::GroupMask MiktAgent::mi_mask() const {
  std::vector<const nd::ParamGroup*> groups = {&decoder_.net().params()};
  if (options_.use_mi) groups.push_back(&pair_.encoder().net().params());
  return nd::GroupMask::only(std::move(groups));
}

std::vector<nd::ParamGroup*> MiktAgent::trainable_groups() {
  auto& s = pair_.student();
  return {&s.policy.mean_net().params(), &s.policy.log_std_group(), &s.value.net().params(),
          &pair_.encoder().net().params(), &decoder_.net().params(), &pair_.mixing().params()};
}

void MiktAgent::zero_grads() {
  for (auto* g : trainable_groups()) g->zero_grad();
}

UpdateStats MiktAgent::update(const rl::Minibatch& mb, double c_couple) {
  nd::Graph g;
  const Terms t = build(g, mb);
  auto rl_total = nd::add(t.policy, t.value);
  if (options_.use_kl_reg) rl_total = nd::add(rl_total, nd::affine(t.kl, options_.c_kl, 0.0));
  const auto pass1 = nd::add(rl_total, nd::affine(t.coupling, c_couple, 0.0));
  if (!std::isfinite(pass1.item()) || !std::isfinite(t.mi.item())) {
    throw rl::NonFiniteLossError("mikt update: non-finite loss");
  }

  UpdateStats s;
  auto& enc = pair_.encoder().net().params();
  g.backward(pass1, rl_mask());
  s.encoder_grad_rl = enc.grad_norm();
  // Keep the RL contribution aside so the MI pass can be measured alone.
  std::vector<nd::Matrix> rl_grads;
  for (auto& p : enc.params()) rl_grads.push_back(p.grad);
  enc.zero_grad();
  g.backward(t.mi, mi_mask());
  s.encoder_grad_mi = enc.grad_norm();
  for (std::size_t i = 0; i < rl_grads.size(); ++i) enc.params()[i].grad += rl_grads[i];

  for (auto* grp : trainable_groups()) adam_step(*grp, adam_);

  s.losses.policy = t.policy.item();
  s.losses.value = t.value.item();
  s.losses.kl = t.kl.item();
  s.losses.coupling = t.coupling.item();
  s.losses.mi = t.mi.item();
  s.losses.total = pass1.item() + t.mi.item();
  return s;
}

std::vector<std::pair<std::string, double>> MiktAgent::probe(const rl::Minibatch& mb, LossTerm term) {
  zero_grads();
  nd::Graph g;
  const Terms t = build(g, mb);
  switch (term) {
    case LossTerm::kPolicy: g.backward(t.policy, rl_mask()); break;
    case LossTerm::kValue: g.backward(t.value, rl_mask()); break;
    case LossTerm::kKl: g.backward(t.kl, rl_mask()); break;
    case LossTerm::kCoupling: g.backward(t.coupling, rl_mask()); break;
    case LossTerm::kMi: g.backward(t.mi, mi_mask()); break;
  }
  const auto& s = pair_.student();
  const auto& tc = pair_.teacher();
  const auto& mix = pair_.mixing().params();
  std::vector<std::pair<std::string, double>> out = {
      {"student_policy", s.policy.mean_net().params().grad_norm()},
      {"log_std", s.policy.log_std_group().grad_norm()},
      {"student_value", s.value.net().params().grad_norm()},
      {"encoder", pair_.encoder().net().params().grad_norm()},
      {"decoder", decoder_.net().params().grad_norm()},
      {"mixing_policy", matrix_norm(mix.at("policy").grad)},
      {"mixing_value", matrix_norm(mix.at("value").grad)},
      {"teacher_policy", tc.policy.mean_net().params().grad_norm() + tc.policy.log_std_group().grad_norm()},
      {"teacher_value", tc.value.net().params().grad_norm()},
  };
  zero_grads();
  return out;
}

std::uint64_t MiktAgent::teacher_hash() const {
  const auto& t = pair_.teacher();
  std::uint64_t h = t.policy.mean_net().params().hash();
  h = h * 1099511628211ULL ^ t.policy.log_std_group().hash();
  h = h * 1099511628211ULL ^ t.value.net().params().hash();
  return h;
}

Checkpoint MiktAgent::checkpoint(const std::string& algorithm, const std::string& env_id) const {
  Checkpoint ck = make_checkpoint(pair_.student(), algorithm, env_id);
  ck.source_state_dim = pair_.teacher().state_dim();
  ck.source_action_dim = pair_.teacher().action_dim();
  ck.groups.push_back(pair_.encoder().net().params());
  ck.groups.push_back(decoder_.net().params());
  ck.groups.push_back(pair_.mixing().params());
  return ck;
}

}  // namespace mikt::train
