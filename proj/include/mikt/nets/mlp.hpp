#pragma once

#include <string>
#include <vector>

#include "mikt/envs/rng.hpp"
#include "mikt/ndmath/graph.hpp"

namespace mikt::nets {

enum class Activation { kTanh };

struct MlpSpec {
  int input_dim = 1;
  int hidden_layers = 2;
  int hidden_units = 64;
  int output_dim = 1;
  Activation activation = Activation::kTanh;

  void validate() const;
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Fully connected network with tanh hidden layers and a linear output.
///
/// Layer j maps x -> x W_j + b_j with W_j stored [in x out]; layers
/// 0..hidden_layers-1 are hidden, layer hidden_layers is the output. Params
/// are named "l<j>.weight" / "l<j>.bias".
class Mlp {
 public:
  Mlp() = default;
  // Orthogonal init: gain sqrt(2) on hidden layers, output_gain on the
  // output layer, zero biases.
  Mlp(std::string name, const MlpSpec& spec, envs::RngStream& rng, double output_gain);

  const MlpSpec& spec() const { return spec_; }
  int hidden_layers() const { return spec_.hidden_layers; }
  nd::ParamGroup& params() { return group_; }
  const nd::ParamGroup& params() const { return group_; }

  const nd::Param& weight(int layer) const;
  const nd::Param& bias(int layer) const;
  nd::Param& weight(int layer);
  nd::Param& bias(int layer);

  // Pre-activation of one layer applied to its input.
  nd::Tensor layer(nd::Graph& g, int j, const nd::Tensor& input) const;

  // Plain forward pass. When pre_activations is given it receives z_j of
  // every hidden layer.
  nd::Tensor forward(nd::Graph& g, const nd::Tensor& x,
                     std::vector<nd::Tensor>* pre_activations = nullptr) const;

 private:
  MlpSpec spec_;
  nd::ParamGroup group_;
};

nd::Tensor activate(Activation act, const nd::Tensor& z);

// Orthogonal (rows x cols) matrix scaled by gain.
nd::Matrix orthogonal(nd::Index rows, nd::Index cols, double gain, envs::RngStream& rng);

}  // namespace mikt::nets
