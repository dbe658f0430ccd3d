#include "mikt/ndmath/param.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mikt::nd {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("adam: learning rate must be > 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam: betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("adam: epsilon must be > 0");
  }
}

ParamGroup::ParamGroup(std::string name, bool trainable)
    : name_(std::move(name)), trainable_(trainable) {
  if (trainable_) adam_.emplace();
}

void ParamGroup::freeze() {
  trainable_ = false;
  adam_.reset();
  for (auto& p : params_) p.grad.resize(0, 0);
}

Param& ParamGroup::add(std::string name, Matrix value) {
  if (find(name) != nullptr) {
    throw std::invalid_argument("param group '" + name_ + "': duplicate parameter '" + name + "'");
  }
  Param p;
  p.name = std::move(name);
  if (trainable_) p.grad = Matrix::Zero(value.rows(), value.cols());
  p.value = std::move(value);
  params_.push_back(std::move(p));
  if (adam_) {
    const auto& v = params_.back().value;
    adam_->first_moment.push_back(Matrix::Zero(v.rows(), v.cols()));
    adam_->second_moment.push_back(Matrix::Zero(v.rows(), v.cols()));
  }
  return params_.back();
}

Param* ParamGroup::find(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Param& ParamGroup::at(const std::string& name) {
  if (Param* p = find(name)) return *p;
  throw std::out_of_range("param group '" + name_ + "' has no parameter '" + name + "'");
}

const Param& ParamGroup::at(const std::string& name) const {
  return const_cast<ParamGroup*>(this)->at(name);
}

void ParamGroup::zero_grad() {
  if (!trainable_) return;
  for (auto& p : params_) p.grad.setZero();
}

double ParamGroup::grad_norm() const {
  if (!trainable_) return 0.0;
  double sq = 0.0;
  for (const auto& p : params_) sq += p.grad.squaredNorm();
  return std::sqrt(sq);
}

std::size_t ParamGroup::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

std::uint64_t ParamGroup::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : params_) {
    mix(p.name.data(), p.name.size());
    const Index dims[2] = {p.value.rows(), p.value.cols()};
    mix(dims, sizeof(dims));
    mix(p.value.data(), sizeof(double) * static_cast<std::size_t>(p.value.size()));
  }
  return h;
}

void adam_step(ParamGroup& group, const AdamConfig& config) {
  if (!group.trainable_ || !group.adam_) {
    throw std::logic_error("adam_step called on frozen parameter group '" + group.name_ + "'");
  }
  auto& state = *group.adam_;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < group.params_.size(); ++i) {
    Param& p = group.params_[i];
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    m = config.beta1 * m + (1.0 - config.beta1) * p.grad;
    v = config.beta2 * v + (1.0 - config.beta2) * p.grad.cwiseAbs2();
    const auto m_hat = m.array() / c1;
    const auto v_hat = v.array() / c2;
    p.value.array() -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    p.grad.setZero();
  }
}

}  // namespace mikt::nd
