#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mikt/ndmath/matrix.hpp"

namespace mikt::nd {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct Param {
  std::string name;
  Matrix value;
  // Accumulation buffer written by Graph::backward(); same shape as value
  // for trainable groups, empty for frozen ones.
  mutable Matrix grad;
};

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step = 0;
};

/// A named set of parameters that is optimized (or frozen) as a unit.
///
/// Frozen groups carry no optimizer state, never receive gradients and
/// reject adam_step(). Parameters are stored by value; graph leaves keep a
/// pointer to them, so a group must not be moved while a Graph that
/// references it is alive.
class ParamGroup {
 public:
  ParamGroup() = default;
  ParamGroup(std::string name, bool trainable);

  const std::string& name() const { return name_; }
  bool trainable() const { return trainable_; }
  // Freezing drops optimizer state and gradient buffers.
  void freeze();

  Param& add(std::string name, Matrix value);
  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  Param* find(const std::string& name);

  const std::optional<AdamState>& adam_state() const { return adam_; }

  void zero_grad();
  double grad_norm() const;
  std::size_t parameter_count() const;
  // FNV-1a over the raw parameter bytes, used to assert immutability.
  std::uint64_t hash() const;

  friend void adam_step(ParamGroup& group, const AdamConfig& config);

 private:
  std::string name_;
  bool trainable_ = true;
  std::vector<Param> params_;
  std::optional<AdamState> adam_;
};

// Bias-corrected Adam update followed by zeroing the gradient buffers.
void adam_step(ParamGroup& group, const AdamConfig& config);

}  // namespace mikt::nd
