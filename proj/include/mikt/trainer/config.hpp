#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace mikt::train {

enum class Algorithm { kMikt, kVpg, kMlpp, kPretrain };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

/// Every knob of a training run. Defaults are the standard PPO
/// hyper-parameters (2x64 tanh, Adam 3e-4, 10 epochs, minibatch 64,
/// gamma 0.99, lambda 0.95, clip 0.2) at a 200k-step desk-scale budget.
struct TrainConfig {
  Algorithm algorithm = Algorithm::kVpg;
  std::string env = "crawler-4";  // training (target) environment
  std::string source_env;         // teacher environment, metadata only
  std::string teacher;            // teacher checkpoint path (mikt, mlpp)

  std::int64_t total_steps = 200000;
  int steps_per_iteration = 2048;
  int epochs = 10;
  int minibatch_size = 64;
  double gamma = 0.99;
  double lambda = 0.95;
  double clip_eps = 0.2;
  double learning_rate = 3e-4;
  int hidden_layers = 2;
  int hidden_units = 64;

  double c_couple = 1e-3;
  bool couple_ramp = false;  // scale c_couple linearly from 0 over the run
  double c_kl = 0.5;
  bool use_mi = true;
  bool rl_grads_to_encoder = true;
  bool use_kl_reg = true;

  bool normalize_advantages = true;
  bool normalize_rewards = false;

  std::uint64_t seed = 0;
  bool log_wall_clock = false;

  void validate() const;
  std::string hash() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
// Strict: unknown keys and type mismatches throw ConfigError. Keys absent
// from j keep the value already in c.
void merge_json(const nlohmann::json& j, TrainConfig& c);

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace mikt::train
