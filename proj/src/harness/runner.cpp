#include "mikt/harness/runner.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>

#include "mikt/envs/crawler.hpp"
#include "mikt/harness/metrics_io.hpp"

namespace mikt::harness {

namespace fs = std::filesystem;
using nlohmann::json;

train::TrainConfig load_config(const fs::path* file, const json& overrides) {
  train::TrainConfig cfg;
  if (file != nullptr) {
    std::ifstream in(*file);
    if (!in) throw train::ConfigError("cannot open config file '" + file->string() + "'");
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw train::ConfigError("config file '" + file->string() + "' is not valid JSON: " + e.what());
    }
    train::merge_json(j, cfg);
  }
  if (!overrides.is_null()) train::merge_json(overrides, cfg);
  return cfg;
}

bool run_complete(const train::TrainConfig& cfg, const fs::path& dir) {
  const auto ck = dir / "final.ckpt";
  if (!fs::exists(ck) || !fs::exists(dir / "metrics.csv")) return false;
  try {
    return train::load_checkpoint(ck).metadata.config_hash == cfg.hash();
  } catch (const std::exception&) {
    return false;
  }
}

train::TrainResult run_to_dir(const train::TrainConfig& cfg, const fs::path& dir, std::ostream* log) {
  cfg.validate();
  envs::make_env(cfg.env);  // fail before anything is written
  std::optional<train::Checkpoint> teacher;
  if (cfg.algorithm == train::Algorithm::kMikt || cfg.algorithm == train::Algorithm::kMlpp) {
    if (!fs::exists(cfg.teacher)) throw MissingTeacherError("teacher checkpoint '" + cfg.teacher + "' not found");
    teacher = train::load_checkpoint(cfg.teacher);
  }
  fs::create_directories(dir);
  {
    json j;
    to_json(j, cfg);
    std::ofstream out(dir / "config.json");
    out << j.dump(2) << '\n';
  }
  // Mixing-weight columns follow the configured architecture for every
  // algorithm so the schema is shared.
  MetricsWriter metrics(dir / "metrics.csv", cfg.hidden_layers, cfg.hidden_layers);
  DiagnosticsWriter diagnostics(dir / "diagnostics.csv");
  const auto total_iters = (cfg.total_steps + cfg.steps_per_iteration - 1) / cfg.steps_per_iteration;
  auto sink = [&](const train::MetricsRow& row, const train::DiagnosticsRow& diag) {
    metrics.write(row);
    diagnostics.write(diag);
    if (log != nullptr) {
      *log << "[" << to_string(cfg.algorithm) << " " << cfg.env << " seed " << cfg.seed << "] iter "
           << row.iteration << "/" << total_iters << " steps " << row.env_steps << " return "
           << format_double(std::round(row.ret_mean * 100.0) / 100.0) << '\n';
    }
  };
  auto result = train::train(cfg, teacher ? &*teacher : nullptr, sink);
  train::save_checkpoint(result.checkpoint, dir / "final.ckpt");
  return result;
}

}  // namespace mikt::harness
