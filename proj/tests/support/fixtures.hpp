#pragma once

// Small randomized networks shared by the unit and acceptance tests.

#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>

#include "mikt/nets/coupled.hpp"
#include "mikt/nets/networks.hpp"
#include "mikt/rlcore/rollout.hpp"
#include "mikt/trainer/agents.hpp"
#include "oracles.hpp"

namespace mikt::fixture {

// Overwrites every parameter of the group with Uniform(-scale, scale) draws so
// that biases are nonzero too.
inline void randomize(nd::ParamGroup& g, envs::RngStream& rng, double scale = 0.8) {
  for (auto& p : g.params()) p.value = oracle::random_matrix(p.value.rows(), p.value.cols(), rng, scale);
}

inline nets::MlpSpec hidden(int layers, int units) {
  nets::MlpSpec s;
  s.hidden_layers = layers;
  s.hidden_units = units;
  return s;
}

inline nets::ActorCritic random_actor_critic(int state_dim, int action_dim, const nets::MlpSpec& h,
                                             envs::RngStream& rng) {
  auto ac = nets::make_actor_critic(state_dim, action_dim, h, rng);
  randomize(ac.policy.mean_net().params(), rng);
  randomize(ac.value.net().params(), rng);
  randomize(ac.policy.log_std_group(), rng, 0.5);
  return ac;
}

// Teacher on a source_dim state space coupled to a student on target_dim;
// every group (including mixing) holds random values.
inline nets::CoupledNetworkPair random_pair(int source_dim, int source_actions, int target_dim,
                                            int target_actions, const nets::MlpSpec& h,
                                            envs::RngStream& rng) {
  auto teacher = random_actor_critic(source_dim, source_actions, h, rng);
  auto pair = nets::CoupledNetworkPair::create(std::move(teacher), target_dim, target_actions, h, rng);
  randomize(pair.student().policy.mean_net().params(), rng);
  randomize(pair.student().value.net().params(), rng);
  randomize(pair.student().policy.log_std_group(), rng, 0.5);
  randomize(pair.encoder().net().params(), rng);
  randomize(pair.mixing().params(), rng, 2.0);
  return pair;
}

// Minibatch whose rollout head differs from the current policy so that every
// loss term, including the KL regularizer, has a nonzero gradient.
inline rl::Minibatch random_minibatch(int state_dim, int action_dim, nd::Index rows, envs::RngStream& rng) {
  rl::Minibatch mb;
  mb.states = oracle::random_matrix(rows, state_dim, rng);
  mb.actions = oracle::random_matrix(rows, action_dim, rng);
  mb.old_mean = oracle::random_matrix(rows, action_dim, rng, 0.3);
  mb.old_log_std = oracle::random_matrix(rows, action_dim, rng, 0.3);
  for (nd::Index i = 0; i < rows; ++i) {
    mb.old_log_probs.push_back(rng.uniform(-3.0, -1.0));
    mb.advantages.push_back(rng.uniform(-1.0, 1.0));
    mb.value_targets.push_back(rng.uniform(-1.0, 1.0));
  }
  return mb;
}

// Parameter groups a single loss term may reach under MIKT's routing
// (policy/value/KL update the students, the encoder on request, and the
// matching mixing weights; coupling only the mixing weights; MI the decoder
// and, on request, the encoder). The teacher is never reachable.
inline std::set<std::string> expected_routing(train::LossTerm term, const train::AgentOptions& o) {
  switch (term) {
    case train::LossTerm::kPolicy:
    case train::LossTerm::kKl: {
      std::set<std::string> s{"student_policy", "log_std", "mixing_policy"};
      if (o.rl_grads_to_encoder) s.insert("encoder");
      return s;
    }
    case train::LossTerm::kValue: {
      std::set<std::string> s{"student_value", "mixing_value"};
      if (o.rl_grads_to_encoder) s.insert("encoder");
      return s;
    }
    case train::LossTerm::kCoupling: return {"mixing_policy", "mixing_value"};
    case train::LossTerm::kMi: {
      std::set<std::string> s{"decoder"};
      if (o.use_mi) s.insert("encoder");
      return s;
    }
  }
  return {};
}

// Fresh per-test scratch directory below MIKT_TEST_TMP (or the system temp
// directory).
inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* root = std::getenv("MIKT_TEST_TMP");
  const auto dir = (root != nullptr ? std::filesystem::path(root) : std::filesystem::temp_directory_path() / "mikt-tests") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mikt::fixture
