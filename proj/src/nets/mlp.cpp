#include "mikt/nets/mlp.hpp"

#include <Eigen/QR>

#include <cmath>
#include <stdexcept>

namespace mikt::nets {

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1 || hidden_units < 1) {
    throw std::invalid_argument("mlp: all dimensions must be >= 1 (input " + std::to_string(input_dim) +
                                ", hidden " + std::to_string(hidden_units) + ", output " +
                                std::to_string(output_dim) + ")");
  }
  if (hidden_layers < 1) throw std::invalid_argument("mlp: at least one hidden layer is required");
}

nd::Matrix orthogonal(nd::Index rows, nd::Index cols, double gain, envs::RngStream& rng) {
  const nd::Index big = std::max(rows, cols);
  const nd::Index small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (nd::Index i = 0; i < big; ++i) {
    for (nd::Index j = 0; j < small; ++j) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(small, small);
  for (nd::Index j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  nd::Matrix out = rows >= cols ? nd::Matrix(q) : nd::Matrix(q.transpose());
  return gain * out;
}

nd::Tensor activate(Activation act, const nd::Tensor& z) {
  switch (act) {
    case Activation::kTanh: return nd::tanh(z);
  }
  throw std::logic_error("unknown activation");
}

Mlp::Mlp(std::string name, const MlpSpec& spec, envs::RngStream& rng, double output_gain)
    : spec_(spec), group_(std::move(name), true) {
  spec_.validate();
  int in = spec_.input_dim;
  for (int j = 0; j <= spec_.hidden_layers; ++j) {
    const bool output = j == spec_.hidden_layers;
    const int out = output ? spec_.output_dim : spec_.hidden_units;
    const double gain = output ? output_gain : std::sqrt(2.0);
    group_.add("l" + std::to_string(j) + ".weight", orthogonal(in, out, gain, rng));
    group_.add("l" + std::to_string(j) + ".bias", nd::Matrix::Zero(1, out));
    in = out;
  }
}

const nd::Param& Mlp::weight(int layer) const {
  return group_.params().at(static_cast<std::size_t>(2 * layer));
}
const nd::Param& Mlp::bias(int layer) const {
  return group_.params().at(static_cast<std::size_t>(2 * layer + 1));
}
nd::Param& Mlp::weight(int layer) { return group_.params().at(static_cast<std::size_t>(2 * layer)); }
nd::Param& Mlp::bias(int layer) { return group_.params().at(static_cast<std::size_t>(2 * layer + 1)); }

nd::Tensor Mlp::layer(nd::Graph& g, int j, const nd::Tensor& input) const {
  const auto w = g.param(weight(j), group_);
  const auto b = g.param(bias(j), group_);
  return nd::add_row(nd::matmul(input, w), b);
}

nd::Tensor Mlp::forward(nd::Graph& g, const nd::Tensor& x,
                        std::vector<nd::Tensor>* pre_activations) const {
  if (x.cols() != spec_.input_dim) {
    throw nd::ShapeError("mlp '" + group_.name() + "': input has " + std::to_string(x.cols()) +
                         " features, expected " + std::to_string(spec_.input_dim));
  }
  nd::Tensor h = x;
  for (int j = 0; j < spec_.hidden_layers; ++j) {
    const nd::Tensor z = layer(g, j, h);
    if (pre_activations != nullptr) pre_activations->push_back(z);
    h = activate(spec_.activation, z);
  }
  return layer(g, spec_.hidden_layers, h);
}

}  // namespace mikt::nets
