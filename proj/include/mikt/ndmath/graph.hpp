#pragma once

#include <cstdint>
#include <deque>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "mikt/ndmath/matrix.hpp"
#include "mikt/ndmath/param.hpp"

namespace mikt::nd {

class Graph;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Handle to a value recorded on a Graph. Cheap to copy; only valid while
/// the owning graph is alive.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  Shape shape() const { return shape_of(value()); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  // Value of a 1x1 tensor.
  double item() const;
  bool requires_grad() const;

  int id() const { return id_; }
  Graph* graph() const { return graph_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Tensor(Graph* graph, int id) : graph_(graph), id_(id) {}
  Graph* graph_ = nullptr;
  int id_ = -1;
};

/// Selects which parameter groups receive gradient in a backward pass.
class GroupMask {
 public:
  static GroupMask all() { return GroupMask{}; }
  static GroupMask only(std::initializer_list<const ParamGroup*> groups) {
    GroupMask m;
    m.restricted_ = true;
    m.groups_.assign(groups.begin(), groups.end());
    return m;
  }
  static GroupMask only(std::vector<const ParamGroup*> groups) {
    GroupMask m;
    m.restricted_ = true;
    m.groups_ = std::move(groups);
    return m;
  }
  bool allows(const ParamGroup* g) const;

 private:
  bool restricted_ = false;
  std::vector<const ParamGroup*> groups_;
};

enum class Op : std::uint8_t {
  kConstant,
  kParam,
  kMatMul,
  kAdd,
  kAddRow,
  kSub,
  kMul,
  kTanh,
  kSigmoid,
  kExp,
  kLog,
  kSquare,
  kMean,
  kSum,
  kSumCols,
  kClip,
  kMin,
  kAffine,
  kSliceCols,
  kBroadcastRows,
};

const char* op_name(Op op);

/// Tape of operations for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the tape is topologically
/// sorted by construction and backward() walks it once in reverse. A graph
/// built with record_gradients = false evaluates forward values only; it is
/// what rollouts and evaluation use.
class Graph {
 public:
  explicit Graph(bool record_gradients = true) : record_(record_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Tensor constant(Matrix value);
  Tensor scalar(double v);
  // Leaf bound to a parameter. Parameters of frozen groups become constants.
  Tensor param(const Param& p, const ParamGroup& group);

  std::size_t size() const { return nodes_.size(); }
  bool records_gradients() const { return record_; }

  /// Accumulates dloss/dparam into Param::grad for every parameter leaf
  /// whose group is trainable and allowed by the mask. May be called more
  /// than once on the same graph; node gradients are reset each time.
  void backward(const Tensor& loss, const GroupMask& mask = GroupMask::all());

  // Gradient of the last backward() w.r.t. an arbitrary node; zero matrix
  // if the node was not reached.
  Matrix grad(const Tensor& t) const;

  const Matrix& value(const Tensor& t) const;

  // Primitive ops. Prefer the free functions below.
  Tensor unary(Op op, const Tensor& a, double p0 = 0.0, double p1 = 0.0);
  Tensor binary(Op op, const Tensor& a, const Tensor& b);
  Tensor slice_cols(const Tensor& a, Index start, Index count);
  Tensor broadcast_rows(const Tensor& a, Index rows);

 private:
  friend class Tensor;

  struct Node {
    Op op = Op::kConstant;
    int in0 = -1;
    int in1 = -1;
    double p0 = 0.0;
    double p1 = 0.0;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    const Param* param = nullptr;
    const ParamGroup* group = nullptr;
  };

  int push(Node node);
  const Node& node(const Tensor& t) const;
  void check_owner(const Tensor& t, const char* what) const;
  void accumulate(int id, const Matrix& g);
  void propagate(Node& n);

  bool record_;
  std::deque<Node> nodes_;
};

// -- forward ops ------------------------------------------------------------
// Elementwise binaries accept identical shapes, or a 1x1 operand on either
// side (scalar broadcast). Shape violations throw ShapeError naming the op and
// both shapes.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
// a: [n x c], row: [1 x c]; row is added to every row of a.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum(const Tensor& a);
// Row sums: [n x c] -> [n x 1].
Tensor sum_cols(const Tensor& a);
// Gradient is 1 on [lo, hi] and 0 outside.
Tensor clip(const Tensor& a, double lo, double hi);
// Gradient flows to the smaller argument; ties go to a.
Tensor minimum(const Tensor& a, const Tensor& b);
// scale * a + shift
Tensor affine(const Tensor& a, double scale, double shift);
Tensor slice_cols(const Tensor& a, Index start, Index count);
Tensor broadcast_rows(const Tensor& a, Index rows);

}  // namespace mikt::nd
