#include "mikt/harness/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>

#include "mikt/envs/crawler.hpp"
#include "mikt/harness/metrics_io.hpp"
#include "mikt/harness/recipes.hpp"
#include "mikt/harness/runner.hpp"

namespace mikt::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flags shared by every subcommand that resolves a TrainConfig. Each flag is
// copied into the override object only when it was given.
struct ConfigFlags {
  std::string config_file;
  std::string env, source_env, teacher, algo;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  int steps_per_iteration = 0, epochs = 0, minibatch = 0, hidden_layers = 0, hidden_units = 0;
  double gamma = 0, lambda = 0, clip_eps = 0, lr = 0, c_couple = 0, c_kl = 0;
  bool no_mi = false, no_rl_grad = false, no_kl = false, couple_ramp = false;
  bool normalize_rewards = false, no_normalize_advantages = false, wall_clock = false;

  std::vector<std::pair<CLI::Option*, std::function<void(json&)>>> bound;

  template <typename T>
  void bind(CLI::App& app, const std::string& flag, T& target, const std::string& key, const std::string& help) {
    auto* opt = app.add_option(flag, target, help);
    bound.emplace_back(opt, [&target, key](json& j) { j[key] = target; });
  }
  void bind_switch(CLI::App& app, const std::string& flag, bool& target, const std::string& key, bool value,
                   const std::string& help) {
    auto* opt = app.add_flag(flag, target, help);
    bound.emplace_back(opt, [key, value](json& j) { j[key] = value; });
  }

  void add_to(CLI::App& app, bool with_algo) {
    app.add_option("--config", config_file, "JSON config file (defaults < file < flags)")
        ->check(CLI::ExistingFile);
    if (with_algo) {
      auto* o = app.add_option("--algo", algo, "mikt | vpg | mlpp");
      bound.emplace_back(o, [this](json& j) { j["algorithm"] = algo; });
      bind(app, "--teacher", teacher, "teacher", "teacher checkpoint (mikt, mlpp)");
      bind(app, "--source-env", source_env, "source_env", "teacher environment id (metadata)");
    }
    bind(app, "--env", env, "env", "environment id");
    bind(app, "--steps", steps, "total_steps", "total environment steps");
    bind(app, "--seed", seed, "seed", "run seed");
    bind(app, "--steps-per-iteration", steps_per_iteration, "steps_per_iteration", "rollout length per iteration");
    bind(app, "--epochs", epochs, "epochs", "epochs per iteration");
    bind(app, "--minibatch", minibatch, "minibatch_size", "minibatch size");
    bind(app, "--gamma", gamma, "gamma", "discount");
    bind(app, "--lambda", lambda, "lambda", "GAE lambda");
    bind(app, "--clip-eps", clip_eps, "clip_eps", "PPO clip range");
    bind(app, "--lr", lr, "learning_rate", "Adam learning rate");
    bind(app, "--hidden-layers", hidden_layers, "hidden_layers", "hidden layers per network");
    bind(app, "--hidden-units", hidden_units, "hidden_units", "units per hidden layer");
    bind(app, "--c-couple", c_couple, "c_couple", "coupling loss weight");
    bind(app, "--c-kl", c_kl, "c_kl", "KL regularizer weight");
    bind_switch(app, "--couple-ramp", couple_ramp, "couple_ramp", true, "ramp c_couple linearly from 0");
    bind_switch(app, "--no-mi", no_mi, "use_mi", false, "drop the MI gradient on the encoder");
    bind_switch(app, "--no-rl-grad", no_rl_grad, "rl_grads_to_encoder", false, "drop RL gradients on the encoder");
    bind_switch(app, "--no-kl", no_kl, "use_kl_reg", false, "disable the KL regularizer");
    bind_switch(app, "--normalize-rewards", normalize_rewards, "normalize_rewards", true,
                "scale rewards by the running std of the discounted return");
    bind_switch(app, "--no-normalize-advantages", no_normalize_advantages, "normalize_advantages", false,
                "keep raw advantages");
    bind_switch(app, "--wall-clock", wall_clock, "log_wall_clock", true, "record wall-clock seconds in metrics");
  }

  train::TrainConfig resolve() const {
    json overrides = json::object();
    for (const auto& [opt, apply] : bound) {
      if (opt->count() > 0) apply(overrides);
    }
    const fs::path file(config_file);
    return load_config(config_file.empty() ? nullptr : &file, overrides);
  }
};

void list_envs(std::ostream& out) {
  for (const auto& id : envs::registered_envs()) {
    const auto spec = envs::make_env(id);
    out << id << ": " << spec.state_dim() << "/" << spec.action_dim() << '\n';
  }
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mikt: teacher-student transfer with laterally coupled networks", "mikt"};
  app.require_subcommand(1);

  ConfigFlags pre_flags;
  auto* pretrain = app.add_subcommand("pretrain", "train a teacher with PPO on --env");
  pre_flags.add_to(*pretrain, false);
  std::string pre_out;
  pretrain->add_option("--out", pre_out, "run directory")->required();

  ConfigFlags train_flags;
  auto* trainc = app.add_subcommand("train", "train mikt, vpg or mlpp on --env");
  train_flags.add_to(*trainc, true);
  std::string train_out;
  trainc->add_option("--out", train_out, "run directory")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint with deterministic actions");
  std::string eval_ckpt, eval_env;
  int episodes = 10;
  std::uint64_t eval_seed = 0;
  bool eval_random = false;
  eval->add_option("--ckpt", eval_ckpt, "checkpoint file");
  eval->add_option("--env", eval_env, "environment id (default: checkpoint env)");
  eval->add_option("--episodes", episodes, "episodes")->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_flag("--random", eval_random, "evaluate the uniform random policy instead");

  ConfigFlags recipe_flags;
  auto* recipe = app.add_subcommand("recipe", "run an experiment recipe");
  recipe_flags.add_to(*recipe, false);
  std::string recipe_name, recipe_out;
  int n_seeds = 5;
  std::int64_t teacher_steps = 100000;
  bool summarize_only = false, list_recipes = false;
  recipe->add_option("name", recipe_name, "transfer-matrix | ablations | kl-ablation | dissimilar-teacher");
  recipe->add_option("--out", recipe_out, "output directory");
  recipe->add_option("--seeds", n_seeds, "number of seeds (0..n-1)")->check(CLI::PositiveNumber);
  recipe->add_option("--teacher-steps", teacher_steps, "teacher pre-training steps");
  recipe->add_flag("--summarize-only", summarize_only, "recompute summary.csv from existing runs");
  recipe->add_flag("--list", list_recipes, "list recipe names");

  app.add_subcommand("list-envs", "print registered environments with state/action dims");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (app.got_subcommand("list-envs")) {
      list_envs(out);
    } else if (pretrain->parsed()) {
      auto cfg = pre_flags.resolve();
      cfg.algorithm = train::Algorithm::kPretrain;
      auto r = run_to_dir(cfg, pre_out, &out);
      out << "wrote " << (fs::path(pre_out) / "final.ckpt").string() << " (final return "
          << format_double(train::final_return(r.metrics)) << ")\n";
    } else if (trainc->parsed()) {
      auto cfg = train_flags.resolve();
      auto r = run_to_dir(cfg, train_out, &out);
      out << "wrote " << (fs::path(train_out) / "final.ckpt").string() << " (final return "
          << format_double(train::final_return(r.metrics)) << ")\n";
    } else if (eval->parsed()) {
      if (eval_random) {
        if (eval_env.empty()) throw std::invalid_argument("eval --random needs --env");
        const auto r = train::evaluate_random(eval_env, episodes, eval_seed);
        out << "mean " << format_double(r.mean) << " std " << format_double(r.std) << '\n';
      } else {
        if (eval_ckpt.empty()) throw std::invalid_argument("eval needs --ckpt (or --random)");
        const auto ck = train::load_checkpoint(eval_ckpt);
        const auto r = train::evaluate(ck, eval_env.empty() ? ck.env_id : eval_env, episodes, eval_seed);
        out << "mean " << format_double(r.mean) << " std " << format_double(r.std) << '\n';
      }
    } else if (recipe->parsed()) {
      if (list_recipes) {
        for (const auto& n : recipe_names()) out << n << '\n';
        return 0;
      }
      if (recipe_name.empty() || recipe_out.empty()) {
        throw std::invalid_argument("recipe needs a name and --out");
      }
      auto rec = make_recipe(recipe_name);
      std::vector<SummaryRow> rows;
      if (summarize_only) {
        rows = summarize_recipe_dir(recipe_name, recipe_out);
        write_summary(fs::path(recipe_out) / "summary.csv", rows);
      } else {
        rec.seeds.clear();
        for (int s = 0; s < n_seeds; ++s) rec.seeds.push_back(static_cast<std::uint64_t>(s));
        auto base = recipe_flags.resolve();
        RecipeOptions opts;
        opts.steps = base.total_steps;
        opts.teacher_steps = teacher_steps;
        opts.teacher_seed = base.seed;
        rows = run_recipe(rec, base, opts, recipe_out, &out);
      }
      out << format_summary_table(rows);
    }
  } catch (const train::ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const envs::UnknownEnvError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const MissingTeacherError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace mikt::harness
