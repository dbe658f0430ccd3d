#include "mikt/harness/metrics_io.hpp"

#include <charconv>
#include <sstream>

namespace mikt::harness {

namespace {

constexpr const char* kFixedColumns[] = {"iteration", "env_steps", "ret_mean", "ret_std",
                                         "loss_pi",   "loss_v",    "loss_mi",  "loss_couple",
                                         "loss_kl",   "p_pi_mean", "p_v_mean"};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& s, const std::string& where) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw MetricsParseError(where + ": cannot parse '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string metrics_header(int policy_layers, int value_layers) {
  std::string h;
  for (const char* c : kFixedColumns) {
    h += c;
    h += ',';
  }
  for (int j = 1; j <= policy_layers; ++j) h += "p_pi_" + std::to_string(j) + ",";
  for (int j = 1; j <= value_layers; ++j) h += "p_v_" + std::to_string(j) + ",";
  return h + "wall_s";
}

std::string metrics_line(const train::MetricsRow& r, int policy_layers, int value_layers) {
  std::string s = std::to_string(r.iteration) + "," + std::to_string(r.env_steps);
  for (double v : {r.ret_mean, r.ret_std, r.loss_pi, r.loss_v, r.loss_mi, r.loss_couple, r.loss_kl,
                   r.p_pi_mean, r.p_v_mean}) {
    s += "," + format_double(v);
  }
  const auto n = static_cast<std::size_t>(policy_layers + value_layers);
  for (std::size_t j = 0; j < n; ++j) s += "," + format_double(j < r.p_layers.size() ? r.p_layers[j] : 0.0);
  return s + "," + format_double(r.wall_s);
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, int policy_layers, int value_layers)
    : out_(path), policy_layers_(policy_layers), value_layers_(value_layers) {
  if (!out_) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out_ << metrics_header(policy_layers_, value_layers_) << '\n';
}

void MetricsWriter::write(const train::MetricsRow& row) {
  out_ << metrics_line(row, policy_layers_, value_layers_) << '\n';
  out_.flush();
}

DiagnosticsWriter::DiagnosticsWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out_ << "iteration,enc_grad_rl,enc_grad_mi\n";
}

void DiagnosticsWriter::write(const train::DiagnosticsRow& row) {
  out_ << row.iteration << ',' << format_double(row.encoder_grad_rl) << ','
       << format_double(row.encoder_grad_mi) << '\n';
  out_.flush();
}

std::vector<train::MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MetricsParseError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw MetricsParseError(path.string() + ": empty file");
  const auto header = split(line);
  constexpr std::size_t kFixed = std::size(kFixedColumns);
  if (header.size() < kFixed + 1 || header.back() != "wall_s") {
    throw MetricsParseError(path.string() + ": unexpected header");
  }
  for (std::size_t i = 0; i < kFixed; ++i) {
    if (header[i] != kFixedColumns[i]) {
      throw MetricsParseError(path.string() + ": column " + std::to_string(i) + " is '" + header[i] +
                              "', expected '" + kFixedColumns[i] + "'");
    }
  }
  const std::size_t n_layers = header.size() - kFixed - 1;

  std::vector<train::MetricsRow> rows;
  for (int lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (cells.size() != header.size()) throw MetricsParseError(where + ": wrong number of columns");
    train::MetricsRow r;
    r.iteration = parse_number<int>(cells[0], where);
    r.env_steps = parse_number<std::int64_t>(cells[1], where);
    double* fields[] = {&r.ret_mean, &r.ret_std, &r.loss_pi,   &r.loss_v,  &r.loss_mi,
                        &r.loss_couple, &r.loss_kl, &r.p_pi_mean, &r.p_v_mean};
    for (std::size_t i = 0; i < std::size(fields); ++i) *fields[i] = parse_number<double>(cells[2 + i], where);
    for (std::size_t j = 0; j < n_layers; ++j) r.p_layers.push_back(parse_number<double>(cells[kFixed + j], where));
    r.wall_s = parse_number<double>(cells.back(), where);
    if (!rows.empty() && r.env_steps <= rows.back().env_steps) {
      throw MetricsParseError(where + ": env_steps does not increase");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace mikt::harness
