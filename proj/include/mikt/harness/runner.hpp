#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mikt/trainer/trainer.hpp"

namespace mikt::harness {

/// Resolves a run configuration: defaults, then the JSON file (when given),
/// then `overrides` (an object with the same schema, built from CLI flags).
train::TrainConfig load_config(const std::filesystem::path* file, const nlohmann::json& overrides);

struct MissingTeacherError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Trains cfg and writes the run directory:
///   config.json      resolved configuration (feed it back with --config)
///   metrics.csv      one row per iteration
///   diagnostics.csv  per-iteration encoder gradient norms by pass
///   final.ckpt       final checkpoint
/// When `log` is set a one-line progress note is written per iteration.
train::TrainResult run_to_dir(const train::TrainConfig& cfg, const std::filesystem::path& dir,
                              std::ostream* log = nullptr);

// True when dir holds a finished run of exactly this configuration.
bool run_complete(const train::TrainConfig& cfg, const std::filesystem::path& dir);

}  // namespace mikt::harness
