#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mikt/trainer/config.hpp"
#include "mikt/trainer/trainer.hpp"

namespace mikt::harness {

struct RecipeRun {
  std::string variant;  // e.g. "mikt", "mikt-no-mi", "vpg"
  train::Algorithm algorithm = train::Algorithm::kVpg;
  std::string source_env;  // teacher environment (metadata only for vpg)
  std::string target_env;
  nlohmann::json overrides = nlohmann::json::object();
};

struct ExperimentRecipe {
  std::string name;
  std::vector<RecipeRun> runs;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
};

// transfer-matrix, ablations, kl-ablation, dissimilar-teacher.
std::vector<std::string> recipe_names();
ExperimentRecipe make_recipe(const std::string& name);

struct RecipeOptions {
  std::int64_t steps = 200000;
  std::int64_t teacher_steps = 100000;
  std::uint64_t teacher_seed = 0;
};

struct SummaryRow {
  std::string recipe;
  std::string variant;
  std::string algorithm;
  std::string source_env;
  std::string target_env;
  std::uint64_t seed = 0;
  double auc = 0.0;            // normalized area under ret_mean vs env steps
  double final_return = 0.0;   // mean ret_mean of the last 5 iterations
  double final_p_mean = 0.0;   // mean realized mixing weight, last iteration
  double early_p_mean = 0.0;   // mean realized mixing weight over the first quarter
};

SummaryRow summarize_run(const std::vector<train::MetricsRow>& rows);

/// Runs every (run, seed) of the recipe under out/, pre-training one teacher
/// per source environment first. Layout:
///   out/teachers/<source>/          teacher run directory
///   out/runs/<variant>/<source>_to_<target>/seed<k>/   per-seed run
///   out/summary.csv
/// Finished runs whose checkpoint carries the same config hash are reused.
std::vector<SummaryRow> run_recipe(const ExperimentRecipe& recipe, const train::TrainConfig& base,
                                   const RecipeOptions& options, const std::filesystem::path& out,
                                   std::ostream* log = nullptr);

// Recomputes the summary purely from the per-seed metrics.csv/config.json
// files below out/runs.
std::vector<SummaryRow> summarize_recipe_dir(const std::string& recipe, const std::filesystem::path& out);

void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary(const std::filesystem::path& path);

// Per-variant/pair means over seeds, formatted as an aligned table.
std::string format_summary_table(const std::vector<SummaryRow>& rows);

}  // namespace mikt::harness
