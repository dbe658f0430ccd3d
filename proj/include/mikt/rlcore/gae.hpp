#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mikt::rl {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> value_targets;  // advantages + values (TD(lambda) return)
};

/// Generalized advantage estimation over a flat stream of transitions.
///
///   delta_t = r_t + gamma * next_value_t - V(s_t)
///   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
///
/// next_values[t] is the bootstrap V(s_{t+1}) (zero it for true terminals);
/// done[t] cuts the recursion at episode boundaries.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const double> next_values, std::span<const std::uint8_t> dones,
                      double gamma, double lambda);

// Single trajectory: next_values are values shifted by one, ending in
// bootstrap_value; no episode boundaries inside.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double bootstrap_value, double gamma, double lambda);

// In-place standardization to mean 0 and std 1 (std floored at 1e-8).
void normalize_advantages(std::span<double> advantages);

}  // namespace mikt::rl
