#include "mikt/rlcore/gae.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mikt::rl {

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const double> next_values, std::span<const std::uint8_t> dones,
                      double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || next_values.size() != n || dones.size() != n) {
    throw std::invalid_argument("compute_gae: length mismatch (rewards " + std::to_string(n) +
                                ", values " + std::to_string(values.size()) + ", next values " +
                                std::to_string(next_values.size()) + ", dones " +
                                std::to_string(dones.size()) + ")");
  }
  if (!(gamma >= 0.0 && gamma < 1.0) || !(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("compute_gae: require gamma in [0,1) and lambda in [0,1]");
  }
  GaeResult out;
  out.advantages.resize(n);
  out.value_targets.resize(n);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double delta = rewards[i] + gamma * next_values[i] - values[i];
    const double carry = dones[i] ? 0.0 : running;
    running = delta + gamma * lambda * carry;
    out.advantages[i] = running;
    out.value_targets[i] = running + values[i];
  }
  return out;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double bootstrap_value, double gamma, double lambda) {
  if (values.size() != rewards.size()) {
    throw std::invalid_argument("compute_gae: length mismatch (rewards " +
                                std::to_string(rewards.size()) + ", values " +
                                std::to_string(values.size()) + ")");
  }
  std::vector<double> next(values.size());
  std::vector<std::uint8_t> dones(values.size(), 0);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) next[i] = values[i + 1];
  if (!next.empty()) next.back() = bootstrap_value;
  return compute_gae(rewards, values, next, dones, gamma, lambda);
}

void normalize_advantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double std = std::max(std::sqrt(var / n), 1e-8);
  for (double& a : advantages) a = (a - mean) / std;
}

}  // namespace mikt::rl
