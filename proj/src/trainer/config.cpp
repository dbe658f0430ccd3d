#include "mikt/trainer/config.hpp"

#include <cstdio>
#include <functional>
#include <map>

namespace mikt::train {

using nlohmann::json;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kMikt: return "mikt";
    case Algorithm::kVpg: return "vpg";
    case Algorithm::kMlpp: return "mlpp";
    case Algorithm::kPretrain: return "pretrain";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "mikt") return Algorithm::kMikt;
  if (s == "vpg") return Algorithm::kVpg;
  if (s == "mlpp") return Algorithm::kMlpp;
  if (s == "pretrain") return Algorithm::kPretrain;
  throw ConfigError("unknown algorithm '" + s + "' (expected mikt, vpg, mlpp or pretrain)");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  if (total_steps < 1) fail("total_steps must be >= 1");
  if (steps_per_iteration < 1) fail("steps_per_iteration must be >= 1");
  if (minibatch_size < 1 || minibatch_size > steps_per_iteration) {
    fail("minibatch_size must lie in [1, steps_per_iteration]");
  }
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0, 1]");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) fail("clip_eps must lie in (0, 1)");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (hidden_layers < 1 || hidden_units < 1) fail("network must have >= 1 hidden layer and unit");
  if (c_couple < 0.0 || c_kl < 0.0) fail("loss coefficients must be >= 0");
}

void to_json(json& j, const TrainConfig& c) {
  j = json{
      {"algorithm", to_string(c.algorithm)},
      {"env", c.env},
      {"source_env", c.source_env},
      {"teacher", c.teacher},
      {"total_steps", c.total_steps},
      {"steps_per_iteration", c.steps_per_iteration},
      {"epochs", c.epochs},
      {"minibatch_size", c.minibatch_size},
      {"gamma", c.gamma},
      {"lambda", c.lambda},
      {"clip_eps", c.clip_eps},
      {"learning_rate", c.learning_rate},
      {"hidden_layers", c.hidden_layers},
      {"hidden_units", c.hidden_units},
      {"c_couple", c.c_couple},
      {"couple_ramp", c.couple_ramp},
      {"c_kl", c.c_kl},
      {"use_mi", c.use_mi},
      {"rl_grads_to_encoder", c.rl_grads_to_encoder},
      {"use_kl_reg", c.use_kl_reg},
      {"normalize_advantages", c.normalize_advantages},
      {"normalize_rewards", c.normalize_rewards},
      {"seed", c.seed},
      {"log_wall_clock", c.log_wall_clock},
  };
}

namespace {

template <typename T>
void read(const json& v, const std::string& key, T& out) {
  const bool ok = [&] {
    if constexpr (std::is_same_v<T, bool>) return v.is_boolean();
    else if constexpr (std::is_same_v<T, std::string>) return v.is_string();
    else if constexpr (std::is_floating_point_v<T>) return v.is_number();
    else if constexpr (std::is_unsigned_v<T>) return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    else return v.is_number_integer();
  }();
  if (!ok) throw ConfigError("config key '" + key + "': type mismatch (got " + v.type_name() + ")");
  out = v.get<T>();
}

}  // namespace

void merge_json(const json& j, TrainConfig& c) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  using Setter = std::function<void(const json&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"algorithm",
       [&](const json& v, const std::string& k) {
         std::string s;
         read(v, k, s);
         c.algorithm = parse_algorithm(s);
       }},
      {"env", [&](const json& v, const std::string& k) { read(v, k, c.env); }},
      {"source_env", [&](const json& v, const std::string& k) { read(v, k, c.source_env); }},
      {"teacher", [&](const json& v, const std::string& k) { read(v, k, c.teacher); }},
      {"total_steps", [&](const json& v, const std::string& k) { read(v, k, c.total_steps); }},
      {"steps_per_iteration",
       [&](const json& v, const std::string& k) { read(v, k, c.steps_per_iteration); }},
      {"epochs", [&](const json& v, const std::string& k) { read(v, k, c.epochs); }},
      {"minibatch_size", [&](const json& v, const std::string& k) { read(v, k, c.minibatch_size); }},
      {"gamma", [&](const json& v, const std::string& k) { read(v, k, c.gamma); }},
      {"lambda", [&](const json& v, const std::string& k) { read(v, k, c.lambda); }},
      {"clip_eps", [&](const json& v, const std::string& k) { read(v, k, c.clip_eps); }},
      {"learning_rate", [&](const json& v, const std::string& k) { read(v, k, c.learning_rate); }},
      {"hidden_layers", [&](const json& v, const std::string& k) { read(v, k, c.hidden_layers); }},
      {"hidden_units", [&](const json& v, const std::string& k) { read(v, k, c.hidden_units); }},
      {"c_couple", [&](const json& v, const std::string& k) { read(v, k, c.c_couple); }},
      {"couple_ramp", [&](const json& v, const std::string& k) { read(v, k, c.couple_ramp); }},
      {"c_kl", [&](const json& v, const std::string& k) { read(v, k, c.c_kl); }},
      {"use_mi", [&](const json& v, const std::string& k) { read(v, k, c.use_mi); }},
      {"rl_grads_to_encoder",
       [&](const json& v, const std::string& k) { read(v, k, c.rl_grads_to_encoder); }},
      {"use_kl_reg", [&](const json& v, const std::string& k) { read(v, k, c.use_kl_reg); }},
      {"normalize_advantages",
       [&](const json& v, const std::string& k) { read(v, k, c.normalize_advantages); }},
      {"normalize_rewards",
       [&](const json& v, const std::string& k) { read(v, k, c.normalize_rewards); }},
      {"seed", [&](const json& v, const std::string& k) { read(v, k, c.seed); }},
      {"log_wall_clock", [&](const json& v, const std::string& k) { read(v, k, c.log_wall_clock); }},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second(value, key);
  }
}

std::string TrainConfig::hash() const {
  json j;
  to_json(j, *this);
  // Output location and logging do not change results.
  j.erase("log_wall_clock");
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mikt::train
