#include "mikt/envs/crawler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace mikt::envs {

namespace {

constexpr int kMaxSegments = 8;

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void unknown(const std::string& id) {
  throw UnknownEnvError("unknown environment id '" + id +
                        "'; registry: crawler-<k> for k in 1..8, crawler-<k>-cp<j> for 1 <= j < k, "
                        "crawler-<k>-rev");
}

}  // namespace

std::vector<double> EnvState::observation() const {
  std::vector<double> obs;
  obs.reserve(theta.size() + omega.size() + 1);
  obs.insert(obs.end(), theta.begin(), theta.end());
  obs.insert(obs.end(), omega.begin(), omega.end());
  obs.push_back(velocity);
  return obs;
}

EnvState reset(const EnvSpec& spec, RngStream& rng, double angle_range) {
  EnvState s;
  const auto k = static_cast<std::size_t>(spec.segments);
  s.theta.resize(k, 0.0);
  s.omega.assign(k, 0.0);
  if (angle_range > 0.0) {
    for (auto& t : s.theta) t = rng.uniform(-angle_range, angle_range);
  }
  return s;
}

StepResult step(const EnvSpec& spec, const EnvState& state, std::span<const double> action) {
  const auto k = static_cast<std::size_t>(spec.segments);
  if (action.size() != k) {
    throw std::invalid_argument("step: action has " + std::to_string(action.size()) +
                                " components, env '" + spec.id + "' expects " + std::to_string(k));
  }
  if (state.step >= spec.horizon) {
    throw EpisodeOverError("step: episode of '" + spec.id + "' already finished after " +
                           std::to_string(spec.horizon) + " steps");
  }
  StepResult out;
  EnvState& next = out.state;
  next = state;

  const std::size_t enabled = k - static_cast<std::size_t>(spec.disabled_actions);
  double thrust = 0.0;
  double effort = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double a = i < enabled ? std::clamp(action[i], -1.0, 1.0) : 0.0;
    double& omega = next.omega[i];
    double& theta = next.theta[i];
    omega += spec.dt * (a - spec.c_damp * omega - spec.c_spring * theta);
    theta += spec.dt * omega;
    thrust += a * std::cos(theta);
    effort += a * a;
  }
  thrust /= static_cast<double>(k);
  next.velocity = (1.0 - spec.c_drag * spec.dt) * next.velocity + spec.dt * thrust;
  next.step = state.step + 1;

  out.reward = spec.reward_direction * next.velocity - spec.control_cost * effort;
  out.done = next.step == spec.horizon;
  return out;
}

EnvSpec make_env(const std::string& id) {
  constexpr std::string_view prefix = "crawler-";
  if (id.rfind(prefix, 0) != 0) unknown(id);
  std::string_view rest(id);
  rest.remove_prefix(prefix.size());

  std::string_view suffix;
  if (auto dash = rest.find('-'); dash != std::string_view::npos) {
    suffix = rest.substr(dash + 1);
    rest = rest.substr(0, dash);
  }
  int k = 0;
  if (!parse_int(rest, k) || k < 1 || k > kMaxSegments) unknown(id);

  EnvSpec spec;
  spec.id = id;
  spec.segments = k;
  if (suffix.empty()) return spec;
  if (suffix == "rev") {
    spec.reward_direction = -1.0;
    return spec;
  }
  int j = 0;
  if (suffix.size() > 2 && suffix.substr(0, 2) == "cp" && parse_int(suffix.substr(2), j) && j >= 1 &&
      j < k) {
    spec.disabled_actions = j;
    return spec;
  }
  unknown(id);
}

std::vector<std::string> registered_envs() {
  std::vector<std::string> ids;
  for (int k = 1; k <= kMaxSegments; ++k) {
    const std::string base = "crawler-" + std::to_string(k);
    ids.push_back(base);
    for (int j = 1; j < k; ++j) ids.push_back(base + "-cp" + std::to_string(j));
    ids.push_back(base + "-rev");
  }
  return ids;
}

}  // namespace mikt::envs
