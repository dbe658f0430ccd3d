#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "fixtures.hpp"
#include "mikt/rlcore/losses.hpp"
#include "mikt/trainer/trainer.hpp"

using namespace mikt;
using nd::Matrix;

namespace {

train::TrainConfig tiny(train::Algorithm algo, const std::string& env, std::int64_t steps = 2048) {
  train::TrainConfig c;
  c.algorithm = algo;
  c.env = env;
  c.total_steps = steps;
  c.steps_per_iteration = 512;
  c.epochs = 2;
  c.hidden_units = 16;
  return c;
}

train::MiktAgent tiny_mikt(envs::RngStream& rng, const train::AgentOptions& opts = {}) {
  const auto h = fixture::hidden(2, 8);
  auto pair = fixture::random_pair(5, 2, 9, 4, h, rng);
  nets::VariationalDecoder dec(5, 9, h, rng);
  fixture::randomize(dec.net().params(), rng, 0.5);
  return train::MiktAgent(std::move(pair), std::move(dec), opts);
}

bool same_groups(const train::Checkpoint& a, const train::Checkpoint& b) {
  if (a.groups.size() != b.groups.size()) return false;
  for (std::size_t i = 0; i < a.groups.size(); ++i) {
    if (a.groups[i].name() != b.groups[i].name() || a.groups[i].hash() != b.groups[i].hash()) return false;
  }
  return true;
}

void expect_kind(const std::function<void()>& f, train::CheckpointError::Kind kind) {
  try {
    f();
    FAIL("expected CheckpointError");
  } catch (const train::CheckpointError& e) {
    CHECK(static_cast<int>(e.kind) == static_cast<int>(kind));
  }
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("config defaults are the standard ppo hyper-parameters") {
  const train::TrainConfig c;
  CHECK(c.steps_per_iteration == 2048);
  CHECK(c.epochs == 10);
  CHECK(c.minibatch_size == 64);
  CHECK(c.gamma == 0.99);
  CHECK(c.lambda == 0.95);
  CHECK(c.clip_eps == 0.2);
  CHECK(c.learning_rate == 3e-4);
  CHECK(c.hidden_layers == 2);
  CHECK(c.hidden_units == 64);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config json is strict and round-trips") {
  train::TrainConfig c;
  train::merge_json({{"algorithm", "mikt"}, {"seed", 7}, {"c_couple", 0.01}}, c);
  CHECK(c.algorithm == train::Algorithm::kMikt);
  CHECK(c.seed == 7);
  CHECK(c.c_couple == 0.01);
  CHECK(c.epochs == 10);

  nlohmann::json j;
  train::to_json(j, c);
  train::TrainConfig back;
  train::merge_json(j, back);
  CHECK(back.hash() == c.hash());

  CHECK_THROWS_AS(train::merge_json({{"epoch", 3}}, c), train::ConfigError);
  CHECK_THROWS_AS(train::merge_json({{"seed", -1}}, c), train::ConfigError);
  CHECK_THROWS_AS(train::merge_json({{"epochs", "ten"}}, c), train::ConfigError);
  CHECK_THROWS_AS(train::merge_json({{"algorithm", "sac"}}, c), train::ConfigError);

  train::TrainConfig bad;
  bad.minibatch_size = 4096;
  CHECK_THROWS_AS(bad.validate(), train::ConfigError);
  bad = train::TrainConfig{};
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), train::ConfigError);

  train::TrainConfig w = c;
  w.log_wall_clock = true;
  CHECK(w.hash() == c.hash());
  w.seed = 8;
  CHECK(w.hash() != c.hash());
}

TEST_CASE("checkpoint round trip is bitwise") {
  envs::RngStream rng(3);
  auto agent = tiny_mikt(rng);
  auto ck = agent.checkpoint("mikt", "crawler-4");
  ck.source_env_id = "crawler-2";
  ck.hidden_units = 8;
  ck.metadata = {4096, 11, "abc"};
  const auto path = fixture::scratch_dir("ckpt") / "sub" / "a.ckpt";
  train::save_checkpoint(ck, path);
  const auto back = train::load_checkpoint(path);
  CHECK(same_groups(ck, back));
  CHECK(back.env_id == "crawler-4");
  CHECK(back.state_dim == 9);
  CHECK(back.source_state_dim == 5);
  CHECK(back.metadata.env_steps == 4096);
  CHECK(back.metadata.config_hash == "abc");
  for (std::size_t g = 0; g < ck.groups.size(); ++g) {
    for (std::size_t p = 0; p < ck.groups[g].params().size(); ++p) {
      CHECK(ck.groups[g].params()[p].value == back.groups[g].params()[p].value);
    }
  }
}

TEST_CASE("checkpoint load errors are distinct") {
  envs::RngStream rng(4);
  auto ac = nets::make_actor_critic(5, 2, fixture::hidden(2, 8), rng);
  auto ck = train::make_checkpoint(ac, "pretrain", "crawler-2");
  ck.hidden_units = 8;
  const auto good = train::checkpoint_to_json(ck);
  CHECK_NOTHROW(train::checkpoint_from_json(good));

  auto tampered = good;
  tampered["dims"]["state"] = 7;
  expect_kind([&] { train::checkpoint_from_json(tampered); }, train::CheckpointError::Kind::kDimMismatch);

  auto unknown = good;
  unknown["groups"]["critic"] = good["groups"]["value"];
  expect_kind([&] { train::checkpoint_from_json(unknown); }, train::CheckpointError::Kind::kUnknownGroup);

  auto version = good;
  version["format_version"] = 2;
  expect_kind([&] { train::checkpoint_from_json(version); }, train::CheckpointError::Kind::kVersionMismatch);

  auto missing = good;
  missing["groups"].erase("value");
  expect_kind([&] { train::checkpoint_from_json(missing); }, train::CheckpointError::Kind::kMissingGroup);

  auto short_data = good;
  short_data["groups"]["policy"][0]["data"].erase(0);
  expect_kind([&] { train::checkpoint_from_json(short_data); }, train::CheckpointError::Kind::kCorrupt);

  const auto dir = fixture::scratch_dir("ckpt-errors");
  std::ofstream(dir / "junk.ckpt") << "{not json";
  expect_kind([&] { train::load_checkpoint(dir / "junk.ckpt"); }, train::CheckpointError::Kind::kCorrupt);
  expect_kind([&] { train::load_checkpoint(dir / "absent.ckpt"); }, train::CheckpointError::Kind::kIo);
}

TEST_CASE("mlpp copies the teacher's middle stack") {
  envs::RngStream rng(5);
  auto ac = fixture::random_actor_critic(5, 2, fixture::hidden(2, 8), rng);
  auto teacher = train::make_checkpoint(ac, "pretrain", "crawler-2");
  teacher.hidden_units = 8;
  const auto student = train::mlpp_student(teacher, 9, 4, rng);
  const auto& sp = student.policy.mean_net();
  const auto& tp = ac.policy.mean_net();
  CHECK(sp.weight(1).value == tp.weight(1).value);
  CHECK(sp.bias(1).value == tp.bias(1).value);
  CHECK(student.value.net().weight(1).value == ac.value.net().weight(1).value);
  CHECK(sp.weight(0).value.rows() == 9);
  CHECK(tp.weight(0).value.rows() == 5);
  CHECK(sp.weight(2).value.cols() == 4);
  CHECK(tp.weight(2).value.cols() == 2);
  CHECK(student.policy.mean_net().params().grad_norm() == 0.0);

  auto shallow_ac = nets::make_actor_critic(5, 2, fixture::hidden(1, 8), rng);
  auto shallow = train::make_checkpoint(shallow_ac, "pretrain", "crawler-2");
  shallow.hidden_layers = 1;
  shallow.hidden_units = 8;
  CHECK_THROWS_AS(train::mlpp_student(shallow, 9, 4, rng), std::invalid_argument);
}

TEST_CASE("gradient routing matches the algorithm for every flag setting") {
  for (int flags = 0; flags < 4; ++flags) {
    train::AgentOptions opts;
    opts.use_mi = (flags & 1) == 0;
    opts.rl_grads_to_encoder = (flags & 2) == 0;
    envs::RngStream rng(100 + static_cast<std::uint64_t>(flags));
    auto agent = tiny_mikt(rng, opts);
    const auto mb = fixture::random_minibatch(9, 4, 16, rng);
    const auto before = agent.checkpoint("mikt", "crawler-4");
    for (auto term : {train::LossTerm::kPolicy, train::LossTerm::kValue, train::LossTerm::kMi,
                      train::LossTerm::kCoupling, train::LossTerm::kKl}) {
      const auto expect = fixture::expected_routing(term, opts);
      for (const auto& [group, norm] : agent.probe(mb, term)) {
        INFO(train::to_string(term), " -> ", group, " flags ", flags);
        if (expect.count(group) != 0) {
          CHECK(norm > 0.0);
        } else {
          CHECK(norm == 0.0);
        }
      }
    }
    CHECK(same_groups(before, agent.checkpoint("mikt", "crawler-4")));
  }
}

TEST_CASE("ablation flags zero the recorded encoder gradients") {
  envs::RngStream rng(9);
  train::AgentOptions no_mi;
  no_mi.use_mi = false;
  auto a = tiny_mikt(rng, no_mi);
  train::AgentOptions no_rl;
  no_rl.rl_grads_to_encoder = false;
  auto b = tiny_mikt(rng, no_rl);
  for (int i = 0; i < 5; ++i) {
    const auto mb = fixture::random_minibatch(9, 4, 16, rng);
    const auto sa = a.update(mb, 1e-3);
    CHECK(sa.encoder_grad_mi == 0.0);
    CHECK(sa.encoder_grad_rl > 0.0);
    const auto sb = b.update(mb, 1e-3);
    CHECK(sb.encoder_grad_rl == 0.0);
    CHECK(sb.encoder_grad_mi > 0.0);
  }
}

TEST_CASE("update changes the trainable groups but never the teacher") {
  envs::RngStream rng(10);
  auto agent = tiny_mikt(rng);
  const auto h0 = agent.teacher_hash();
  const auto enc0 = agent.pair().encoder().net().params().hash();
  const auto dec0 = agent.decoder().net().params().hash();
  const auto mb = fixture::random_minibatch(9, 4, 16, rng);
  const auto stats = agent.update(mb, 1e-3);
  CHECK(agent.teacher_hash() == h0);
  CHECK(agent.pair().encoder().net().params().hash() != enc0);
  CHECK(agent.decoder().net().params().hash() != dec0);
  CHECK(stats.losses.total == doctest::Approx(stats.losses.policy + stats.losses.value + 0.5 * stats.losses.kl +
                                              1e-3 * stats.losses.coupling + stats.losses.mi).epsilon(1e-12));
}

TEST_CASE("coupling loss alone drives the mixing weights up") {
  nets::MixingWeights w(2, 2);
  nd::AdamConfig adam;
  double prev = 0.5;
  for (int i = 0; i < 100; ++i) {
    {
      nd::Graph g;
      g.backward(nd::affine(rl::coupling_loss(g, w), 1e-2, 0.0));
    }
    nd::adam_step(w.params(), adam);
    const auto p = w.policy_values();
    const auto v = w.value_values();
    const double mean = (std::accumulate(p.begin(), p.end(), 0.0) + std::accumulate(v.begin(), v.end(), 0.0)) / 4.0;
    CHECK(mean > prev);
    prev = mean;
  }
}

TEST_CASE("first minibatch of an iteration sees ratio one") {
  envs::RngStream rng(12);
  auto agent = tiny_mikt(rng);
  rl::RolloutBatch batch(9, 4);
  train::ActOutput act;
  for (int i = 0; i < 32; ++i) {
    rl::Transition t;
    t.state.resize(9);
    for (auto& x : t.state) x = rng.uniform(-1, 1);
    agent.act(t.state, act);
    t.action = nets::sample_action(act.mean, act.log_std, rng);
    t.log_prob = nets::gaussian_log_prob(act.mean, act.log_std, t.action);
    t.policy_mean = act.mean;
    t.policy_log_std = act.log_std;
    t.value = act.value;
    t.next_value = act.value;
    t.reward = rng.uniform(-1, 1);
    t.done = i == 31;
    batch.add(std::move(t));
  }
  batch.finalize(0.99, 0.95, true);
  std::vector<std::size_t> idx(16);
  std::iota(idx.begin(), idx.end(), 0);
  const auto mb = batch.gather(idx);
  const auto stats = agent.update(mb, 1e-3);
  const double mean_adv = std::accumulate(mb.advantages.begin(), mb.advantages.end(), 0.0) / 16.0;
  CHECK(std::abs(stats.losses.policy + mean_adv) < 1e-12);
  CHECK(stats.losses.kl < 1e-12);
}

TEST_CASE("evaluation examples") {
  envs::RngStream rng(13);
  auto ac = nets::make_actor_critic(9, 4, fixture::hidden(2, 8), rng);
  for (auto& p : ac.policy.mean_net().params().params()) p.value.setZero();
  auto ck = train::make_checkpoint(ac, "vpg", "crawler-4");
  ck.hidden_units = 8;
  const auto zero = train::evaluate(ck, "crawler-4", 3, 0);
  CHECK(zero.mean == 0.0);
  CHECK(zero.returns.size() == 3);

  auto live = fixture::random_actor_critic(9, 4, fixture::hidden(2, 8), rng);
  auto lck = train::make_checkpoint(live, "vpg", "crawler-4");
  lck.hidden_units = 8;
  const auto a = train::evaluate(lck, "crawler-4", 4, 21);
  const auto b = train::evaluate(lck, "crawler-4", 4, 21);
  CHECK(a.returns == b.returns);
  CHECK(a.std == b.std);
  CHECK(train::evaluate(lck, "crawler-4", 1, 21).std == 0.0);
  CHECK_THROWS(train::evaluate(lck, "crawler-2", 1, 0));

  const auto r1 = train::evaluate_random("crawler-4", 5, 1);
  const auto r2 = train::evaluate_random("crawler-4", 5, 1);
  CHECK(r1.returns == r2.returns);
  CHECK(r1.std > 0.0);
}

TEST_CASE("short runs are deterministic and log the shared schema") {
  const auto cfg = tiny(train::Algorithm::kVpg, "crawler-2");
  const auto a = train::train_vpg(cfg);
  const auto b = train::train_vpg(cfg);
  REQUIRE(a.metrics.size() == 4);
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].ret_mean == b.metrics[i].ret_mean);
    CHECK(a.metrics[i].loss_pi == b.metrics[i].loss_pi);
    CHECK(a.metrics[i].loss_mi == 0.0);
    CHECK(a.metrics[i].loss_couple == 0.0);
    CHECK(a.metrics[i].p_pi_mean == 0.0);
    CHECK(a.metrics[i].wall_s == 0.0);
    CHECK(a.metrics[i].env_steps == 512 * static_cast<std::int64_t>(i + 1));
  }
  CHECK(same_groups(a.checkpoint, b.checkpoint));
  CHECK(a.checkpoint.metadata.env_steps == 2048);
  CHECK(a.checkpoint.metadata.config_hash == cfg.hash());

  auto other = cfg;
  other.seed = 1;
  CHECK(train::train_vpg(other).metrics.back().loss_pi != a.metrics.back().loss_pi);
}

TEST_CASE("mikt and mlpp runs keep the teacher intact") {
  auto pre = tiny(train::Algorithm::kPretrain, "crawler-2");
  const auto teacher = train::pretrain_teacher(pre).checkpoint;
  CHECK(teacher.env_id == "crawler-2");
  CHECK(teacher.state_dim == 5);

  auto cfg = tiny(train::Algorithm::kMikt, "crawler-4");
  cfg.source_env = "crawler-2";
  std::vector<train::MetricsRow> streamed;
  const auto r = train::train_mikt(cfg, teacher, [&](const train::MetricsRow& m, const train::DiagnosticsRow&) {
    streamed.push_back(m);
  });
  CHECK(r.teacher_hash_before == r.teacher_hash_after);
  CHECK(streamed.size() == r.metrics.size());
  CHECK(r.initial_p_mean == 0.5);
  CHECK(r.metrics.back().p_layers.size() == 4);
  CHECK(r.metrics.back().loss_mi != 0.0);
  CHECK(r.checkpoint.find("encoder") != nullptr);
  CHECK(r.checkpoint.source_env_id == "crawler-2");
  const auto again = train::train_mikt(cfg, teacher);
  CHECK(again.metrics.back().loss_mi == r.metrics.back().loss_mi);

  auto mlpp = tiny(train::Algorithm::kMlpp, "crawler-4");
  const auto m = train::train(mlpp, &teacher);
  CHECK(m.metrics.size() == 4);
  CHECK(m.metrics.back().p_layers.empty());

  auto wrong = cfg;
  wrong.source_env = "crawler-3";
  CHECK_THROWS(train::train_mikt(wrong, teacher));
  CHECK_THROWS_AS(train::train(cfg, nullptr), train::ConfigError);
}

TEST_CASE("learning-curve summaries") {
  std::vector<train::MetricsRow> rows(3);
  rows[0].env_steps = 100;
  rows[0].ret_mean = 0.0;
  rows[1].env_steps = 200;
  rows[1].ret_mean = 2.0;
  rows[2].env_steps = 300;
  rows[2].ret_mean = 4.0;
  rows[2].p_layers = {0.5, 0.7, 0.9, 0.9};
  CHECK(train::normalized_auc(rows) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(train::final_return(rows, 2) == 3.0);
  CHECK(train::final_return(rows) == 2.0);
  CHECK(train::final_p_mean(rows) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("pretraining on a single segment beats the random policy") {
  auto cfg = tiny(train::Algorithm::kPretrain, "crawler-1", 100000);
  cfg.steps_per_iteration = 2048;
  cfg.epochs = 10;
  cfg.hidden_units = 64;
  const auto r = train::pretrain_teacher(cfg);
  CHECK(r.checkpoint.state_dim == 3);
  CHECK(r.checkpoint.action_dim == 1);
  const auto random = train::evaluate_random("crawler-1", 20, 99);
  const auto trained = train::evaluate(r.checkpoint, "crawler-1", 20, 99);
  MESSAGE("random ", random.mean, " +- ", random.std, ", trained ", trained.mean);
  CHECK(trained.mean > random.mean + 3.0 * random.std);

  const auto path = fixture::scratch_dir("pretrain") / "t.ckpt";
  train::save_checkpoint(r.checkpoint, path);
  CHECK(train::evaluate(train::load_checkpoint(path), "crawler-1", 20, 99).returns == trained.returns);
}

}  // TEST_SUITE
