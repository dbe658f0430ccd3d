#include "mikt/trainer/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mikt::train {

using nlohmann::json;
using Kind = CheckpointError::Kind;

namespace {

[[noreturn]] void fail(Kind kind, const std::string& msg) {
  throw CheckpointError(kind, "checkpoint: " + msg);
}

json dims_json(int state, int action) { return json{{"state", state}, {"action", action}}; }

json group_to_json(const nd::ParamGroup& g) {
  json arr = json::array();
  for (const auto& p : g.params()) {
    json data = json::array();
    for (nd::Index i = 0; i < p.value.size(); ++i) data.push_back(p.value.data()[i]);
    arr.push_back(json{{"name", p.name}, {"shape", {p.value.rows(), p.value.cols()}}, {"data", data}});
  }
  return arr;
}

nd::ParamGroup group_from_json(const std::string& name, const json& arr) {
  if (!arr.is_array()) fail(Kind::kCorrupt, "group '" + name + "' is not an array");
  nd::ParamGroup g(name, true);
  for (const auto& t : arr) {
    if (!t.is_object() || !t.contains("name") || !t.contains("shape") || !t.contains("data")) {
      fail(Kind::kCorrupt, "group '" + name + "' has a malformed tensor entry");
    }
    const auto& shape = t.at("shape");
    const auto& data = t.at("data");
    if (!shape.is_array() || shape.size() != 2 || !shape[0].is_number_integer() ||
        !shape[1].is_number_integer() || !data.is_array() || !t.at("name").is_string()) {
      fail(Kind::kCorrupt, "group '" + name + "' has a malformed tensor entry");
    }
    const auto rows = shape[0].get<nd::Index>();
    const auto cols = shape[1].get<nd::Index>();
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
      fail(Kind::kCorrupt, "tensor '" + name + "/" + t.at("name").get<std::string>() +
                               "' data length does not match its shape");
    }
    nd::Matrix m(rows, cols);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!data[i].is_number()) fail(Kind::kCorrupt, "non-numeric value in group '" + name + "'");
      m.data()[i] = data[i].get<double>();
    }
    try {
      g.add(t.at("name").get<std::string>(), std::move(m));
    } catch (const std::invalid_argument& e) {
      fail(Kind::kCorrupt, e.what());
    }
  }
  return g;
}

void expect_shape(const nd::ParamGroup& g, const std::string& param, nd::Index rows, nd::Index cols) {
  const nd::Param* p = const_cast<nd::ParamGroup&>(g).find(param);
  if (p == nullptr) fail(Kind::kCorrupt, "group '" + g.name() + "' lacks parameter '" + param + "'");
  if (p->value.rows() != rows || p->value.cols() != cols) {
    fail(Kind::kDimMismatch, "'" + g.name() + "/" + param + "' has shape " +
                                 nd::to_string(nd::shape_of(p->value)) + ", dims imply [" +
                                 std::to_string(rows) + "x" + std::to_string(cols) + "]");
  }
}

void expect_mlp(const nd::ParamGroup& g, int in, int out, int layers, int units) {
  if (g.params().size() != static_cast<std::size_t>(2 * (layers + 1))) {
    fail(Kind::kDimMismatch, "group '" + g.name() + "' has " + std::to_string(g.params().size()) +
                                 " tensors, architecture implies " + std::to_string(2 * (layers + 1)));
  }
  int width = in;
  for (int j = 0; j <= layers; ++j) {
    const int next = j == layers ? out : units;
    expect_shape(g, "l" + std::to_string(j) + ".weight", width, next);
    expect_shape(g, "l" + std::to_string(j) + ".bias", 1, next);
    width = next;
  }
}

void validate(const Checkpoint& ck) {
  const int n = ck.hidden_layers;
  const int h = ck.hidden_units;
  for (const auto& name : {"policy", "log_std", "value"}) {
    if (ck.find(name) == nullptr) fail(Kind::kMissingGroup, std::string("missing group '") + name + "'");
  }
  expect_mlp(ck.group("policy"), ck.state_dim, ck.action_dim, n, h);
  expect_shape(ck.group("log_std"), "log_std", 1, ck.action_dim);
  expect_mlp(ck.group("value"), ck.state_dim, 1, n, h);
  if (const auto* enc = ck.find("encoder")) expect_mlp(*enc, ck.state_dim, ck.source_state_dim, n, h);
  if (const auto* dec = ck.find("decoder")) {
    expect_mlp(*dec, ck.source_state_dim, 2 * ck.state_dim, n, h);
  }
  if (const auto* mix = ck.find("mixing")) {
    expect_shape(*mix, "policy", 1, n);
    expect_shape(*mix, "value", 1, n);
  }
}

}  // namespace

const std::vector<std::string>& known_checkpoint_groups() {
  static const std::vector<std::string> names = {"policy", "log_std", "value",
                                                 "encoder", "decoder", "mixing"};
  return names;
}

const nd::ParamGroup* Checkpoint::find(const std::string& name) const {
  for (const auto& g : groups) {
    if (g.name() == name) return &g;
  }
  return nullptr;
}

const nd::ParamGroup& Checkpoint::group(const std::string& name) const {
  if (const auto* g = find(name)) return *g;
  fail(Kind::kMissingGroup, "missing group '" + name + "'");
}

json checkpoint_to_json(const Checkpoint& ck) {
  json groups = json::object();
  for (const auto& g : ck.groups) groups[g.name()] = group_to_json(g);
  return json{
      {"format", kCheckpointFormat},
      {"format_version", kCheckpointFormatVersion},
      {"algorithm", ck.algorithm},
      {"env_id", ck.env_id},
      {"dims", dims_json(ck.state_dim, ck.action_dim)},
      {"source_env_id", ck.source_env_id},
      {"source_dims", dims_json(ck.source_state_dim, ck.source_action_dim)},
      {"architecture",
       {{"hidden_layers", ck.hidden_layers}, {"hidden_units", ck.hidden_units}, {"activation", "tanh"}}},
      {"groups", groups},
      {"metadata",
       {{"env_steps", ck.metadata.env_steps},
        {"seed", ck.metadata.seed},
        {"config_hash", ck.metadata.config_hash}}},
  };
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat) {
    fail(Kind::kCorrupt, "not a mikt checkpoint document");
  }
  if (!j.contains("format_version") || !j.at("format_version").is_number_integer()) {
    fail(Kind::kCorrupt, "missing format_version");
  }
  const int version = j.at("format_version").get<int>();
  if (version != kCheckpointFormatVersion) {
    fail(Kind::kVersionMismatch, "format version " + std::to_string(version) + " is not supported (expected " +
                                     std::to_string(kCheckpointFormatVersion) + ")");
  }
  Checkpoint ck;
  try {
    ck.algorithm = j.at("algorithm").get<std::string>();
    ck.env_id = j.at("env_id").get<std::string>();
    ck.state_dim = j.at("dims").at("state").get<int>();
    ck.action_dim = j.at("dims").at("action").get<int>();
    ck.source_env_id = j.at("source_env_id").get<std::string>();
    ck.source_state_dim = j.at("source_dims").at("state").get<int>();
    ck.source_action_dim = j.at("source_dims").at("action").get<int>();
    const auto& arch = j.at("architecture");
    ck.hidden_layers = arch.at("hidden_layers").get<int>();
    ck.hidden_units = arch.at("hidden_units").get<int>();
    if (arch.at("activation").get<std::string>() != "tanh") {
      fail(Kind::kCorrupt, "unsupported activation '" + arch.at("activation").get<std::string>() + "'");
    }
    const auto& meta = j.at("metadata");
    ck.metadata.env_steps = meta.at("env_steps").get<std::int64_t>();
    ck.metadata.seed = meta.at("seed").get<std::uint64_t>();
    ck.metadata.config_hash = meta.at("config_hash").get<std::string>();
  } catch (const json::exception& e) {
    fail(Kind::kCorrupt, std::string("malformed header: ") + e.what());
  }
  const auto& groups = j.contains("groups") ? j.at("groups") : json();
  if (!groups.is_object()) fail(Kind::kCorrupt, "missing groups object");
  const auto& known = known_checkpoint_groups();
  for (const auto& [name, arr] : groups.items()) {
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      fail(Kind::kUnknownGroup, "unknown parameter group '" + name + "'");
    }
  }
  // JSON objects are unordered; groups come back in canonical order.
  for (const auto& name : known) {
    if (groups.contains(name)) ck.groups.push_back(group_from_json(name, groups.at(name)));
  }
  validate(ck);
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(Kind::kIo, "cannot open '" + path.string() + "' for writing");
  out << checkpoint_to_json(ck).dump() << '\n';
  if (!out) fail(Kind::kIo, "write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Kind::kIo, "cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Kind::kCorrupt, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

Checkpoint make_checkpoint(const nets::ActorCritic& ac, const std::string& algorithm,
                           const std::string& env_id) {
  Checkpoint ck;
  ck.algorithm = algorithm;
  ck.env_id = env_id;
  ck.state_dim = ac.state_dim();
  ck.action_dim = ac.action_dim();
  ck.hidden_layers = ac.policy.mean_net().hidden_layers();
  ck.hidden_units = ac.policy.mean_net().spec().hidden_units;
  ck.groups.push_back(ac.policy.mean_net().params());
  ck.groups.push_back(ac.policy.log_std_group());
  ck.groups.push_back(ac.value.net().params());
  return ck;
}

nets::ActorCritic actor_critic_from(const Checkpoint& ck) {
  auto rebuild = [&](const std::string& name, int in, int out) {
    nets::MlpSpec spec{in, ck.hidden_layers, ck.hidden_units, out};
    envs::RngStream scratch(0);
    nets::Mlp mlp(name, spec, scratch, 1.0);
    const auto& src = ck.group(name);
    for (auto& p : mlp.params().params()) p.value = src.at(p.name).value;
    return mlp;
  };
  nets::ActorCritic ac;
  nd::ParamGroup log_std("log_std", true);
  log_std.add("log_std", ck.group("log_std").at("log_std").value);
  ac.policy = nets::GaussianPolicy(rebuild("policy", ck.state_dim, ck.action_dim), std::move(log_std));
  ac.value = nets::ValueNet(rebuild("value", ck.state_dim, 1));
  return ac;
}

}  // namespace mikt::train
