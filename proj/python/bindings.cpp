#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mikt/envs/crawler.hpp"
#include "mikt/harness/cli.hpp"
#include "mikt/harness/metrics_io.hpp"
#include "mikt/harness/runner.hpp"
#include "mikt/rlcore/gae.hpp"
#include "mikt/trainer/config.hpp"

namespace py = pybind11;
using namespace mikt;

namespace {

// Thin stateful wrapper so Python can drive an episode step by step.
class Env {
 public:
  Env(const std::string& id, std::uint64_t seed) : spec_(envs::make_env(id)), rng_(seed) {}

  std::vector<double> reset() {
    state_ = envs::reset(spec_, rng_);
    return state_.observation();
  }

  py::tuple step(const std::vector<double>& action) {
    auto r = envs::step(spec_, state_, action);
    state_ = std::move(r.state);
    return py::make_tuple(state_.observation(), r.reward, r.done);
  }

  const envs::EnvSpec& spec() const { return spec_; }

 private:
  envs::EnvSpec spec_;
  envs::RngStream rng_;
  envs::EnvState state_;
};

nlohmann::json to_json(const py::handle& obj) {
  // Round trip through the json module keeps the conversion exact for the
  // scalar types a configuration holds.
  const auto dumps = py::module_::import("json").attr("dumps");
  return nlohmann::json::parse(dumps(obj).cast<std::string>());
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict row_dict(const train::MetricsRow& r) {
  py::dict d;
  d["iteration"] = r.iteration;
  d["env_steps"] = r.env_steps;
  d["ret_mean"] = r.ret_mean;
  d["ret_std"] = r.ret_std;
  d["loss_pi"] = r.loss_pi;
  d["loss_v"] = r.loss_v;
  d["loss_mi"] = r.loss_mi;
  d["loss_couple"] = r.loss_couple;
  d["loss_kl"] = r.loss_kl;
  d["p_pi_mean"] = r.p_pi_mean;
  d["p_v_mean"] = r.p_v_mean;
  d["p_layers"] = r.p_layers;
  d["wall_s"] = r.wall_s;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mikt, m) {
  m.doc() = "Coupled-network policy transfer on SegmentCrawler tasks";

  py::register_exception<envs::UnknownEnvError>(m, "UnknownEnvError", PyExc_ValueError);
  py::register_exception<train::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<harness::MissingTeacherError>(m, "MissingTeacherError", PyExc_FileNotFoundError);

  m.def("list_envs", &envs::registered_envs);
  m.def("env_dims", [](const std::string& id) {
    const auto s = envs::make_env(id);
    return py::make_tuple(s.state_dim(), s.action_dim());
  });

  py::class_<Env>(m, "Env")
      .def(py::init<const std::string&, std::uint64_t>(), py::arg("id"), py::arg("seed") = 0)
      .def("reset", &Env::reset)
      .def("step", &Env::step, py::arg("action"))
      .def_property_readonly("state_dim", [](const Env& e) { return e.spec().state_dim(); })
      .def_property_readonly("action_dim", [](const Env& e) { return e.spec().action_dim(); })
      .def_property_readonly("horizon", [](const Env& e) { return e.spec().horizon; });

  m.def(
      "gae",
      [](const std::vector<double>& rewards, const std::vector<double>& values, double bootstrap, double gamma,
         double lam) {
        auto r = rl::compute_gae(rewards, values, bootstrap, gamma, lam);
        return py::make_tuple(r.advantages, r.value_targets);
      },
      py::arg("rewards"), py::arg("values"), py::arg("bootstrap_value"), py::arg("gamma"), py::arg("lam"));

  m.def(
      "default_config",
      [] {
        nlohmann::json j;
        train::to_json(j, train::TrainConfig{});
        return to_python(j);
      },
      "Default run configuration as a dict.");

  m.def(
      "train",
      [](const py::dict& config, const std::filesystem::path& out_dir, bool verbose) {
        train::TrainConfig cfg;
        train::merge_json(to_json(config), cfg);
        std::ostringstream log;
        train::TrainResult r;
        {
          py::gil_scoped_release release;
          r = harness::run_to_dir(cfg, out_dir, verbose ? &log : nullptr);
        }
        if (verbose) py::print(log.str(), py::arg("end") = "");
        py::dict summary;
        summary["auc"] = train::normalized_auc(r.metrics);
        summary["final_return"] = train::final_return(r.metrics);
        summary["final_p_mean"] = train::final_p_mean(r.metrics);
        return summary;
      },
      py::arg("config"), py::arg("out_dir"), py::arg("verbose") = false,
      "Trains one run into out_dir (config.json, metrics.csv, diagnostics.csv, final.ckpt) and returns its "
      "summary.");

  m.def(
      "read_metrics",
      [](const std::filesystem::path& path) {
        py::list rows;
        for (const auto& r : harness::read_metrics(path)) rows.append(row_dict(r));
        return rows;
      },
      py::arg("path"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = harness::cli_main(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
