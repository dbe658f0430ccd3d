#include "mikt/trainer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>

#include "mikt/envs/crawler.hpp"

namespace mikt::train {

namespace {

// Stream ids carved out of the run seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kEnvStream = 1;
constexpr std::uint64_t kActionStream = 2;
constexpr std::uint64_t kShuffleStream = 3;

nets::MlpSpec hidden_spec(const TrainConfig& cfg) {
  nets::MlpSpec s;
  s.hidden_layers = cfg.hidden_layers;
  s.hidden_units = cfg.hidden_units;
  return s;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pop_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double sq = 0.0;
  for (double x : v) sq += (x - m) * (x - m);
  return std::sqrt(sq / static_cast<double>(v.size()));
}

double p_mean(const Agent& agent) {
  auto p = agent.p_policy();
  const auto v = agent.p_value();
  p.insert(p.end(), v.begin(), v.end());
  return mean_of(p);
}

// Welford estimate of the discounted-return variance used to scale rewards.
class ReturnScaler {
 public:
  explicit ReturnScaler(double gamma) : gamma_(gamma) {}
  double scale(double reward, bool done) {
    ret_ = gamma_ * ret_ + reward;
    ++n_;
    const double d = ret_ - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (ret_ - mean_);
    if (done) ret_ = 0.0;
    const double var = n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    return var > 1e-8 ? reward / std::sqrt(var) : reward;
  }

 private:
  double gamma_;
  double ret_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  std::int64_t n_ = 0;
};

void check_dims(const envs::EnvSpec& spec, int state_dim, int action_dim, const std::string& what) {
  if (spec.state_dim() != state_dim || spec.action_dim() != action_dim) {
    throw std::invalid_argument(what + " dims (" + std::to_string(state_dim) + ", " +
                                std::to_string(action_dim) + ") do not match env '" + spec.id + "' (" +
                                std::to_string(spec.state_dim()) + ", " +
                                std::to_string(spec.action_dim()) + ")");
  }
}

EvalResult summarize(std::vector<double> returns) {
  EvalResult r;
  r.mean = mean_of(returns);
  r.std = pop_std(returns);
  r.returns = std::move(returns);
  return r;
}

}  // namespace

AgentOptions agent_options(const TrainConfig& cfg) {
  AgentOptions o;
  o.clip_eps = cfg.clip_eps;
  o.learning_rate = cfg.learning_rate;
  o.c_kl = cfg.c_kl;
  o.use_kl_reg = cfg.use_kl_reg;
  o.use_mi = cfg.use_mi;
  o.rl_grads_to_encoder = cfg.rl_grads_to_encoder;
  return o;
}

TrainResult run_ppo(const TrainConfig& cfg, Agent& agent, const MetricsSink& sink) {
  const auto spec = envs::make_env(cfg.env);
  check_dims(spec, agent.state_dim(), agent.action_dim(), "agent");
  const envs::RngStream root(cfg.seed);
  auto env_rng = root.split(kEnvStream);
  auto act_rng = root.split(kActionStream);
  auto shuffle_rng = root.split(kShuffleStream);
  const auto t0 = std::chrono::steady_clock::now();

  TrainResult result;
  result.initial_p_mean = p_mean(agent);
  ReturnScaler scaler(cfg.gamma);
  envs::EnvState state = envs::reset(spec, env_rng);
  double episode_return = 0.0;
  std::int64_t env_steps = 0;
  double last_ret_mean = 0.0;
  double last_ret_std = 0.0;
  ActOutput act;

  for (int iteration = 1; env_steps < cfg.total_steps; ++iteration) {
    const auto n = static_cast<int>(
        std::min<std::int64_t>(cfg.steps_per_iteration, cfg.total_steps - env_steps));
    rl::RolloutBatch batch(spec.state_dim(), spec.action_dim(), static_cast<std::uint64_t>(iteration));
    std::vector<double> finished;
    std::optional<rl::Transition> pending;

    for (int i = 0; i < n; ++i) {
      auto obs = state.observation();
      agent.act(obs, act);
      if (pending) {
        pending->next_value = act.value;
        batch.add(std::move(*pending));
        pending.reset();
      }
      rl::Transition t;
      t.action = nets::sample_action(act.mean, act.log_std, act_rng);
      t.log_prob = nets::gaussian_log_prob(act.mean, act.log_std, t.action);
      t.value = act.value;
      t.policy_mean = act.mean;
      t.policy_log_std = act.log_std;
      auto next = envs::step(spec, state, t.action);
      episode_return += next.reward;
      t.reward = cfg.normalize_rewards ? scaler.scale(next.reward, next.done) : next.reward;
      t.done = next.done;
      t.state = std::move(obs);
      state = std::move(next.state);
      if (t.done) {
        // Time-limit end: bootstrap from the value of the final state.
        t.next_value = agent.value(state.observation());
        batch.add(std::move(t));
        finished.push_back(episode_return);
        episode_return = 0.0;
        state = envs::reset(spec, env_rng);
      } else {
        pending = std::move(t);
      }
    }
    if (pending) {
      pending->next_value = agent.value(state.observation());
      batch.add(std::move(*pending));
    }
    env_steps += n;
    batch.finalize(cfg.gamma, cfg.lambda, cfg.normalize_advantages);

    const double ramp = cfg.couple_ramp ? static_cast<double>(env_steps) / static_cast<double>(cfg.total_steps)
                                        : 1.0;
    const double c_couple = cfg.c_couple * ramp;
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    MetricsRow row;
    DiagnosticsRow diag;
    int updates = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng.below(i)]);
      }
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.minibatch_size)) {
        const std::size_t len = std::min<std::size_t>(cfg.minibatch_size, order.size() - start);
        const auto mb = batch.gather(std::span<const std::size_t>(order.data() + start, len));
        UpdateStats s;
        try {
          s = agent.update(mb, c_couple);
        } catch (const rl::NonFiniteLossError& e) {
          throw TrainingDiverged("training diverged at iteration " + std::to_string(iteration) +
                                 ", epoch " + std::to_string(epoch) + ": " + e.what());
        }
        row.loss_pi += s.losses.policy;
        row.loss_v += s.losses.value;
        row.loss_mi += s.losses.mi;
        row.loss_couple += s.losses.coupling;
        row.loss_kl += s.losses.kl;
        diag.encoder_grad_rl += s.encoder_grad_rl;
        diag.encoder_grad_mi += s.encoder_grad_mi;
        ++updates;
      }
    }
    const double inv = 1.0 / static_cast<double>(updates);
    row.loss_pi *= inv;
    row.loss_v *= inv;
    row.loss_mi *= inv;
    row.loss_couple *= inv;
    row.loss_kl *= inv;
    diag.encoder_grad_rl *= inv;
    diag.encoder_grad_mi *= inv;

    row.iteration = iteration;
    diag.iteration = iteration;
    row.env_steps = env_steps;
    if (!finished.empty()) {
      last_ret_mean = mean_of(finished);
      last_ret_std = pop_std(finished);
    }
    row.ret_mean = last_ret_mean;
    row.ret_std = last_ret_std;
    const auto pp = agent.p_policy();
    const auto pv = agent.p_value();
    row.p_pi_mean = mean_of(pp);
    row.p_v_mean = mean_of(pv);
    row.p_layers = pp;
    row.p_layers.insert(row.p_layers.end(), pv.begin(), pv.end());
    if (cfg.log_wall_clock) {
      row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    if (sink) sink(row, diag);
    result.metrics.push_back(std::move(row));
    result.diagnostics.push_back(diag);
  }

  result.checkpoint = agent.checkpoint(to_string(cfg.algorithm), cfg.env);
  result.checkpoint.source_env_id = cfg.source_env;
  result.checkpoint.metadata.env_steps = env_steps;
  result.checkpoint.metadata.seed = cfg.seed;
  result.checkpoint.metadata.config_hash = cfg.hash();
  return result;
}

TrainResult pretrain_teacher(const TrainConfig& cfg, const MetricsSink& sink) {
  cfg.validate();
  const auto spec = envs::make_env(cfg.env);
  auto init = envs::RngStream(cfg.seed).split(kInitStream);
  PpoAgent agent(nets::make_actor_critic(spec.state_dim(), spec.action_dim(), hidden_spec(cfg), init),
                 agent_options(cfg));
  return run_ppo(cfg, agent, sink);
}

TrainResult train_vpg(const TrainConfig& cfg, const MetricsSink& sink) {
  return pretrain_teacher(cfg, sink);
}

nets::ActorCritic mlpp_student(const Checkpoint& teacher, int state_dim, int action_dim,
                               envs::RngStream& rng) {
  if (teacher.hidden_layers < 2) {
    throw std::invalid_argument("mlpp: teacher needs >= 2 hidden layers to have a middle stack");
  }
  const auto t = actor_critic_from(teacher);
  nets::MlpSpec hidden;
  hidden.hidden_layers = teacher.hidden_layers;
  hidden.hidden_units = teacher.hidden_units;
  auto student = nets::make_actor_critic(state_dim, action_dim, hidden, rng);
  auto copy_middle = [&](const nets::Mlp& from, nets::Mlp& to) {
    for (int j = 1; j < teacher.hidden_layers; ++j) {
      to.weight(j).value = from.weight(j).value;
      to.bias(j).value = from.bias(j).value;
    }
  };
  copy_middle(t.policy.mean_net(), student.policy.mean_net());
  copy_middle(t.value.net(), student.value.net());
  return student;
}

TrainResult train_mlpp(const TrainConfig& cfg, const Checkpoint& teacher, const MetricsSink& sink) {
  cfg.validate();
  const auto spec = envs::make_env(cfg.env);
  auto init = envs::RngStream(cfg.seed).split(kInitStream);
  PpoAgent agent(mlpp_student(teacher, spec.state_dim(), spec.action_dim(), init), agent_options(cfg));
  auto result = run_ppo(cfg, agent, sink);
  if (result.checkpoint.source_env_id.empty()) result.checkpoint.source_env_id = teacher.env_id;
  result.checkpoint.source_state_dim = teacher.state_dim;
  result.checkpoint.source_action_dim = teacher.action_dim;
  return result;
}

MiktAgent make_mikt_agent(const TrainConfig& cfg, const Checkpoint& teacher, envs::RngStream& rng) {
  const auto spec = envs::make_env(cfg.env);
  if (!cfg.source_env.empty()) {
    check_dims(envs::make_env(cfg.source_env), teacher.state_dim, teacher.action_dim, "teacher");
  }
  if (teacher.hidden_layers != cfg.hidden_layers || teacher.hidden_units != cfg.hidden_units) {
    throw std::invalid_argument("mikt: teacher architecture " + std::to_string(teacher.hidden_layers) + "x" +
                                std::to_string(teacher.hidden_units) + " differs from the configured " +
                                std::to_string(cfg.hidden_layers) + "x" + std::to_string(cfg.hidden_units));
  }
  const auto hidden = hidden_spec(cfg);
  auto pair = nets::CoupledNetworkPair::create(actor_critic_from(teacher), spec.state_dim(), spec.action_dim(),
                                               hidden, rng);
  nets::VariationalDecoder decoder(teacher.state_dim, spec.state_dim(), hidden, rng);
  return MiktAgent(std::move(pair), std::move(decoder), agent_options(cfg));
}

TrainResult train_mikt(const TrainConfig& cfg, const Checkpoint& teacher, const MetricsSink& sink) {
  cfg.validate();
  auto init = envs::RngStream(cfg.seed).split(kInitStream);
  MiktAgent agent = make_mikt_agent(cfg, teacher, init);
  const auto before = agent.teacher_hash();
  auto result = run_ppo(cfg, agent, sink);
  result.teacher_hash_before = before;
  result.teacher_hash_after = agent.teacher_hash();
  if (result.checkpoint.source_env_id.empty()) result.checkpoint.source_env_id = teacher.env_id;
  return result;
}

TrainResult train(const TrainConfig& cfg, const Checkpoint* teacher, const MetricsSink& sink) {
  switch (cfg.algorithm) {
    case Algorithm::kPretrain: return pretrain_teacher(cfg, sink);
    case Algorithm::kVpg: return train_vpg(cfg, sink);
    case Algorithm::kMlpp:
    case Algorithm::kMikt:
      if (teacher == nullptr) throw ConfigError(to_string(cfg.algorithm) + " requires a teacher checkpoint");
      return cfg.algorithm == Algorithm::kMlpp ? train_mlpp(cfg, *teacher, sink)
                                               : train_mikt(cfg, *teacher, sink);
  }
  throw ConfigError("unknown algorithm");
}

EvalResult evaluate(const Checkpoint& ck, const std::string& env_id, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  const auto spec = envs::make_env(env_id);
  check_dims(spec, ck.state_dim, ck.action_dim, "checkpoint");
  const PpoAgent agent(actor_critic_from(ck), AgentOptions{});
  auto rng = envs::RngStream(seed).split(kEnvStream);
  std::vector<double> returns;
  ActOutput act;
  for (int e = 0; e < episodes; ++e) {
    auto state = envs::reset(spec, rng);
    double ret = 0.0;
    for (bool done = false; !done;) {
      agent.act(state.observation(), act);
      auto next = envs::step(spec, state, act.mean);
      ret += next.reward;
      done = next.done;
      state = std::move(next.state);
    }
    returns.push_back(ret);
  }
  return summarize(std::move(returns));
}

EvalResult evaluate_random(const std::string& env_id, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate_random: episodes must be >= 1");
  const auto spec = envs::make_env(env_id);
  auto rng = envs::RngStream(seed).split(kEnvStream);
  auto act_rng = envs::RngStream(seed).split(kActionStream);
  std::vector<double> returns;
  std::vector<double> a(static_cast<std::size_t>(spec.action_dim()));
  for (int e = 0; e < episodes; ++e) {
    auto state = envs::reset(spec, rng);
    double ret = 0.0;
    for (bool done = false; !done;) {
      for (auto& x : a) x = act_rng.uniform(-1.0, 1.0);
      auto next = envs::step(spec, state, a);
      ret += next.reward;
      done = next.done;
      state = std::move(next.state);
    }
    returns.push_back(ret);
  }
  return summarize(std::move(returns));
}

double normalized_auc(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) return 0.0;
  if (rows.size() == 1) return rows.front().ret_mean;
  double area = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto dx = static_cast<double>(rows[i].env_steps - rows[i - 1].env_steps);
    area += 0.5 * dx * (rows[i].ret_mean + rows[i - 1].ret_mean);
  }
  return area / static_cast<double>(rows.back().env_steps - rows.front().env_steps);
}

double final_return(const std::vector<MetricsRow>& rows, int tail) {
  if (rows.empty()) return 0.0;
  const auto k = std::min<std::size_t>(rows.size(), static_cast<std::size_t>(std::max(tail, 1)));
  double s = 0.0;
  for (std::size_t i = rows.size() - k; i < rows.size(); ++i) s += rows[i].ret_mean;
  return s / static_cast<double>(k);
}

double final_p_mean(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) return 0.0;
  return mean_of(rows.back().p_layers);
}

}  // namespace mikt::train
