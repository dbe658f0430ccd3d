#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mikt/trainer/trainer.hpp"

namespace mikt::harness {

// metrics.csv columns, in order:
//   iteration, env_steps, ret_mean, ret_std, loss_pi, loss_v, loss_mi,
//   loss_couple, loss_kl, p_pi_mean, p_v_mean, p_pi_<j>..., p_v_<j>..., wall_s
// The p_* layer columns (1-based) follow the run's architecture; solo
// learners keep one zero column per hidden layer of each net so every
// algorithm shares the schema.
std::string metrics_header(int policy_layers, int value_layers);
std::string metrics_line(const train::MetricsRow& row, int policy_layers, int value_layers);

// Shortest round-trip decimal.
std::string format_double(double v);

class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, int policy_layers, int value_layers);
  void write(const train::MetricsRow& row);

 private:
  std::ofstream out_;
  int policy_layers_;
  int value_layers_;
};

class DiagnosticsWriter {
 public:
  explicit DiagnosticsWriter(const std::filesystem::path& path);
  void write(const train::DiagnosticsRow& row);

 private:
  std::ofstream out_;
};

struct MetricsParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parses a metrics.csv written by MetricsWriter; validates the header and
// that env_steps strictly increases.
std::vector<train::MetricsRow> read_metrics(const std::filesystem::path& path);

}  // namespace mikt::harness
