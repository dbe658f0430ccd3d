#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mikt/envs/rng.hpp"

namespace mikt::envs {

/// SegmentCrawler(k): k actuated joints driving a torso along one axis.
///
/// Observation is (theta_1..k, omega_1..k, v), so state_dim = 2k+1 and
/// action_dim = k. Crippled variants ("crawler-k-cpj") zero the last j
/// action components before the dynamics; reversed variants
/// ("crawler-k-rev") reward backward motion.
struct EnvSpec {
  std::string id;
  int segments = 1;
  int disabled_actions = 0;
  double reward_direction = 1.0;
  int horizon = 200;
  double dt = 0.05;
  double c_damp = 0.1;
  double c_spring = 0.5;
  double c_drag = 0.5;
  double control_cost = 0.01;

  int state_dim() const { return 2 * segments + 1; }
  int action_dim() const { return segments; }
};

struct EnvState {
  std::vector<double> theta;
  std::vector<double> omega;
  double velocity = 0.0;
  int step = 0;

  std::vector<double> observation() const;
};

struct StepResult {
  EnvState state;
  double reward = 0.0;
  bool done = false;
};

struct UnknownEnvError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EpisodeOverError : std::logic_error {
  using std::logic_error::logic_error;
};

// Joint angles are drawn i.i.d. from Uniform(-angle_range, angle_range);
// angle_range = 0 yields the exact zero state.
EnvState reset(const EnvSpec& spec, RngStream& rng, double angle_range = 0.1);

StepResult step(const EnvSpec& spec, const EnvState& state, std::span<const double> action);

EnvSpec make_env(const std::string& id);

// Every id accepted by make_env(), in a stable order.
std::vector<std::string> registered_envs();

}  // namespace mikt::envs
