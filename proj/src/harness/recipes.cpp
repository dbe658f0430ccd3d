#include "mikt/harness/recipes.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "mikt/harness/metrics_io.hpp"
#include "mikt/harness/runner.hpp"

namespace mikt::harness {

namespace fs = std::filesystem;
using nlohmann::json;
using train::Algorithm;

namespace {

RecipeRun run(std::string variant, Algorithm algo, std::string source, std::string target,
              json overrides = json::object()) {
  return RecipeRun{std::move(variant), algo, std::move(source), std::move(target), std::move(overrides)};
}

void add_transfer_trio(std::vector<RecipeRun>& runs, const std::string& source, const std::string& target) {
  runs.push_back(run("mikt", Algorithm::kMikt, source, target));
  runs.push_back(run("vpg", Algorithm::kVpg, source, target));
  runs.push_back(run("mlpp", Algorithm::kMlpp, source, target));
}

fs::path pair_dir(const RecipeRun& r) {
  return fs::path(r.variant) / (r.source_env + "_to_" + r.target_env);
}

double mean_p(const train::MetricsRow& r) {
  if (r.p_layers.empty()) return 0.0;
  double s = 0.0;
  for (double p : r.p_layers) s += p;
  return s / static_cast<double>(r.p_layers.size());
}

bool needs_teacher(Algorithm a) { return a == Algorithm::kMikt || a == Algorithm::kMlpp; }

bool summary_less(const SummaryRow& a, const SummaryRow& b) {
  return std::tie(a.variant, a.source_env, a.target_env, a.seed) <
         std::tie(b.variant, b.source_env, b.target_env, b.seed);
}

}  // namespace

std::vector<std::string> recipe_names() {
  return {"transfer-matrix", "ablations", "kl-ablation", "dissimilar-teacher"};
}

ExperimentRecipe make_recipe(const std::string& name) {
  ExperimentRecipe r;
  r.name = name;
  if (name == "transfer-matrix") {
    add_transfer_trio(r.runs, "crawler-2", "crawler-4");
    add_transfer_trio(r.runs, "crawler-2", "crawler-6");
    add_transfer_trio(r.runs, "crawler-4", "crawler-6");
    add_transfer_trio(r.runs, "crawler-2", "crawler-4-cp1");
  } else if (name == "ablations") {
    r.runs.push_back(run("mikt", Algorithm::kMikt, "crawler-2", "crawler-4"));
    r.runs.push_back(run("mikt-no-mi", Algorithm::kMikt, "crawler-2", "crawler-4", {{"use_mi", false}}));
    r.runs.push_back(
        run("mikt-no-rl-grad", Algorithm::kMikt, "crawler-2", "crawler-4", {{"rl_grads_to_encoder", false}}));
  } else if (name == "kl-ablation") {
    r.runs.push_back(run("mikt", Algorithm::kMikt, "crawler-2", "crawler-4"));
    r.runs.push_back(run("mikt-no-kl", Algorithm::kMikt, "crawler-2", "crawler-4", {{"use_kl_reg", false}}));
  } else if (name == "dissimilar-teacher") {
    r.runs.push_back(run("mikt-similar", Algorithm::kMikt, "crawler-2", "crawler-4"));
    r.runs.push_back(run("mikt-dissimilar", Algorithm::kMikt, "crawler-2-rev", "crawler-4"));
  } else {
    std::string known;
    for (const auto& n : recipe_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown recipe '" + name + "' (known: " + known + ")");
  }
  return r;
}

SummaryRow summarize_run(const std::vector<train::MetricsRow>& rows) {
  SummaryRow s;
  s.auc = train::normalized_auc(rows);
  s.final_return = train::final_return(rows);
  s.final_p_mean = train::final_p_mean(rows);
  const std::size_t quarter = std::max<std::size_t>(1, rows.size() / 4);
  double acc = 0.0;
  for (std::size_t i = 0; i < std::min(quarter, rows.size()); ++i) acc += mean_p(rows[i]);
  s.early_p_mean = rows.empty() ? 0.0 : acc / static_cast<double>(std::min(quarter, rows.size()));
  return s;
}

std::vector<SummaryRow> run_recipe(const ExperimentRecipe& recipe, const train::TrainConfig& base,
                                   const RecipeOptions& options, const fs::path& out, std::ostream* log) {
  if (recipe.seeds.empty()) throw std::invalid_argument("recipe '" + recipe.name + "' has no seeds");
  std::map<std::string, fs::path> teachers;
  for (const auto& r : recipe.runs) {
    if (!needs_teacher(r.algorithm) || teachers.count(r.source_env) != 0) continue;
    train::TrainConfig t = base;
    t.algorithm = Algorithm::kPretrain;
    t.env = r.source_env;
    t.source_env.clear();
    t.teacher.clear();
    t.total_steps = options.teacher_steps;
    t.seed = options.teacher_seed;
    const fs::path dir = out / "teachers" / r.source_env;
    if (!run_complete(t, dir)) run_to_dir(t, dir, log);
    teachers[r.source_env] = dir / "final.ckpt";
  }

  std::vector<SummaryRow> rows;
  for (const auto& r : recipe.runs) {
    for (auto seed : recipe.seeds) {
      train::TrainConfig c = base;
      c.algorithm = r.algorithm;
      c.env = r.target_env;
      c.source_env = r.source_env;
      c.teacher = needs_teacher(r.algorithm) ? teachers.at(r.source_env).string() : std::string();
      c.total_steps = options.steps;
      c.seed = seed;
      train::merge_json(r.overrides, c);
      const fs::path dir = out / "runs" / pair_dir(r) / ("seed" + std::to_string(seed));
      std::vector<train::MetricsRow> metrics;
      if (run_complete(c, dir)) {
        metrics = read_metrics(dir / "metrics.csv");
      } else {
        metrics = run_to_dir(c, dir, log).metrics;
      }
      SummaryRow s = summarize_run(metrics);
      s.recipe = recipe.name;
      s.variant = r.variant;
      s.algorithm = to_string(r.algorithm);
      s.source_env = r.source_env;
      s.target_env = r.target_env;
      s.seed = seed;
      rows.push_back(std::move(s));
    }
  }
  std::sort(rows.begin(), rows.end(), summary_less);
  write_summary(out / "summary.csv", rows);
  return rows;
}

std::vector<SummaryRow> summarize_recipe_dir(const std::string& recipe, const fs::path& out) {
  std::vector<SummaryRow> rows;
  const fs::path root = out / "runs";
  if (!fs::is_directory(root)) throw std::runtime_error("no runs below '" + root.string() + "'");
  for (const auto& variant : fs::directory_iterator(root)) {
    if (!variant.is_directory()) continue;
    for (const auto& pair : fs::directory_iterator(variant.path())) {
      if (!pair.is_directory()) continue;
      for (const auto& seed_dir : fs::directory_iterator(pair.path())) {
        if (!fs::exists(seed_dir.path() / "metrics.csv")) continue;
        const fs::path cfg_path = seed_dir.path() / "config.json";
        const auto cfg = load_config(&cfg_path, json());
        SummaryRow s = summarize_run(read_metrics(seed_dir.path() / "metrics.csv"));
        s.recipe = recipe;
        s.variant = variant.path().filename().string();
        s.algorithm = to_string(cfg.algorithm);
        s.source_env = cfg.source_env;
        s.target_env = cfg.env;
        s.seed = cfg.seed;
        rows.push_back(std::move(s));
      }
    }
  }
  std::sort(rows.begin(), rows.end(), summary_less);
  return rows;
}

void write_summary(const fs::path& path, const std::vector<SummaryRow>& rows) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "recipe,variant,algorithm,source_env,target_env,seed,auc,final_return,final_p_mean,early_p_mean\n";
  for (const auto& r : rows) {
    out << r.recipe << ',' << r.variant << ',' << r.algorithm << ',' << r.source_env << ',' << r.target_env << ','
        << r.seed << ',' << format_double(r.auc) << ',' << format_double(r.final_return) << ','
        << format_double(r.final_p_mean) << ',' << format_double(r.early_p_mean) << '\n';
  }
}

std::vector<SummaryRow> read_summary(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) c.push_back(cell);
    if (line.back() == ',') c.emplace_back();
    if (c.size() != 10) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    SummaryRow r;
    r.recipe = c[0];
    r.variant = c[1];
    r.algorithm = c[2];
    r.source_env = c[3];
    r.target_env = c[4];
    r.seed = std::stoull(c[5]);
    r.auc = std::stod(c[6]);
    r.final_return = std::stod(c[7]);
    r.final_p_mean = std::stod(c[8]);
    r.early_p_mean = std::stod(c[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_summary_table(const std::vector<SummaryRow>& rows) {
  struct Acc {
    double auc = 0, fin = 0, p = 0;
    int n = 0;
  };
  std::map<std::string, Acc> groups;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    const std::string key = r.variant + "  " + r.source_env + " -> " + r.target_env;
    if (groups.count(key) == 0) order.push_back(key);
    auto& a = groups[key];
    a.auc += r.auc;
    a.fin += r.final_return;
    a.p += r.final_p_mean;
    ++a.n;
  }
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-44s %5s %10s %12s %8s\n", "run", "seeds", "auc", "final", "p_final");
  out += buf;
  for (const auto& k : order) {
    const auto& a = groups[k];
    std::snprintf(buf, sizeof(buf), "%-44s %5d %10.2f %12.2f %8.3f\n", k.c_str(), a.n, a.auc / a.n, a.fin / a.n,
                  a.p / a.n);
    out += buf;
  }
  return out;
}

}  // namespace mikt::harness
