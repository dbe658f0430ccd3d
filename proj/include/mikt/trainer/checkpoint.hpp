#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mikt/nets/coupled.hpp"

namespace mikt::train {

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr const char* kCheckpointFormat = "mikt-checkpoint";

struct CheckpointError : std::runtime_error {
  enum class Kind { kIo, kCorrupt, kVersionMismatch, kDimMismatch, kUnknownGroup, kMissingGroup };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind(kind) {}
  Kind kind;
};

struct CheckpointMetadata {
  std::int64_t env_steps = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// Versioned set of named parameter groups plus the environment and
/// architecture they belong to.
///
/// On disk this is one JSON document:
///   {"format": "mikt-checkpoint", "format_version": 1,
///    "algorithm": "...", "env_id": "...", "dims": {"state": S, "action": A},
///    "source_env_id": "...", "source_dims": {"state": S', "action": A'},
///    "architecture": {"hidden_layers": N, "hidden_units": H, "activation": "tanh"},
///    "groups": {"<group>": [{"name": "...", "shape": [r, c], "data": [...]}, ...]},
///    "metadata": {"env_steps": n, "seed": s, "config_hash": "..."}}
/// Values are written as shortest round-trip decimal, so a load reproduces
/// every double bitwise. Known groups: policy, log_std, value, encoder,
/// decoder, mixing.
struct Checkpoint {
  std::string algorithm;
  std::string env_id;
  int state_dim = 0;
  int action_dim = 0;
  std::string source_env_id;
  int source_state_dim = 0;
  int source_action_dim = 0;
  int hidden_layers = 2;
  int hidden_units = 64;
  std::vector<nd::ParamGroup> groups;
  CheckpointMetadata metadata;

  const nd::ParamGroup* find(const std::string& group) const;
  const nd::ParamGroup& group(const std::string& group) const;
};

const std::vector<std::string>& known_checkpoint_groups();

nlohmann::json checkpoint_to_json(const Checkpoint& ck);
// Validates version, group names and that every tensor matches the dims.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Policy/value (+ log_std) of an actor-critic as checkpoint groups.
Checkpoint make_checkpoint(const nets::ActorCritic& ac, const std::string& algorithm,
                           const std::string& env_id);
// Rebuilds the actor-critic stored in a checkpoint (trainable groups).
nets::ActorCritic actor_critic_from(const Checkpoint& ck);

}  // namespace mikt::train
