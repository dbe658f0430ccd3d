#include "mikt/ndmath/graph.hpp"

#include <algorithm>
#include <cmath>

namespace mikt::nd {

namespace {

[[noreturn]] void shape_error(Op op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op_name(op)) + ": shape mismatch " + to_string(a) + " vs " +
                   to_string(b));
}

bool elementwise_compatible(const Shape& a, const Shape& b) {
  return a == b || a.is_scalar() || b.is_scalar();
}

// Applies f elementwise with scalar broadcast on either side.
template <typename F>
Matrix broadcast_apply(const Matrix& a, const Matrix& b, F f) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) {
    return a.binaryExpr(b, f);
  }
  if (b.size() == 1) {
    const double s = b(0, 0);
    return a.unaryExpr([&](double x) { return f(x, s); });
  }
  const double s = a(0, 0);
  return b.unaryExpr([&](double y) { return f(s, y); });
}

// Reduces a broadcast gradient back onto an operand of the given shape.
Matrix reduce_to(const Matrix& g, const Matrix& operand) {
  if (operand.rows() == g.rows() && operand.cols() == g.cols()) return g;
  Matrix r(1, 1);
  r(0, 0) = g.sum();
  return r;
}

Graph& owner(const Tensor& t) {
  if (!t.valid()) throw std::logic_error("tensor: use of an empty handle");
  return *t.graph();
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kParam: return "param";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kAddRow: return "add_row";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSquare: return "square";
    case Op::kMean: return "mean";
    case Op::kSum: return "sum";
    case Op::kSumCols: return "sum_cols";
    case Op::kClip: return "clip";
    case Op::kMin: return "minimum";
    case Op::kAffine: return "affine";
    case Op::kSliceCols: return "slice_cols";
    case Op::kBroadcastRows: return "broadcast_rows";
  }
  return "?";
}

bool GroupMask::allows(const ParamGroup* g) const {
  if (!restricted_) return true;
  return std::find(groups_.begin(), groups_.end(), g) != groups_.end();
}

const Matrix& Tensor::value() const {
  if (graph_ == nullptr) throw std::logic_error("tensor: use of an empty handle");
  return graph_->value(*this);
}

double Tensor::item() const {
  const Matrix& v = value();
  if (v.size() != 1) {
    throw ShapeError("item: expected a scalar tensor, got " + to_string(shape_of(v)));
  }
  return v(0, 0);
}

bool Tensor::requires_grad() const { return graph_->node(*this).requires_grad; }

int Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

const Graph::Node& Graph::node(const Tensor& t) const {
  check_owner(t, "access");
  return nodes_[static_cast<std::size_t>(t.id_)];
}

void Graph::check_owner(const Tensor& t, const char* what) const {
  if (t.graph_ != this || t.id_ < 0 || static_cast<std::size_t>(t.id_) >= nodes_.size()) {
    throw std::logic_error(std::string(what) + ": tensor does not belong to this graph");
  }
}

const Matrix& Graph::value(const Tensor& t) const { return node(t).value; }

Tensor Graph::constant(Matrix value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return Tensor(this, push(std::move(n)));
}

Tensor Graph::scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Tensor Graph::param(const Param& p, const ParamGroup& group) {
  Node n;
  n.op = Op::kParam;
  n.value = p.value;
  n.requires_grad = record_ && group.trainable();
  if (n.requires_grad) {
    n.param = &p;
    n.group = &group;
  }
  return Tensor(this, push(std::move(n)));
}

Tensor Graph::unary(Op op, const Tensor& a, double p0, double p1) {
  check_owner(a, op_name(op));
  const Node& in = nodes_[static_cast<std::size_t>(a.id_)];
  const Matrix& x = in.value;
  Node n;
  n.op = op;
  n.in0 = a.id_;
  n.p0 = p0;
  n.p1 = p1;
  n.requires_grad = record_ && in.requires_grad;
  switch (op) {
    case Op::kTanh: n.value = x.array().tanh().matrix(); break;
    case Op::kSigmoid:
      n.value = x.unaryExpr([](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
      break;
    case Op::kExp: n.value = x.array().exp().matrix(); break;
    case Op::kLog: n.value = x.array().log().matrix(); break;
    case Op::kSquare: n.value = x.array().square().matrix(); break;
    case Op::kMean:
      if (x.size() == 0) throw ShapeError("mean: empty tensor");
      n.value = Matrix::Constant(1, 1, x.mean());
      break;
    case Op::kSum: n.value = Matrix::Constant(1, 1, x.sum()); break;
    case Op::kSumCols: n.value = x.rowwise().sum(); break;
    case Op::kClip:
      if (p0 > p1) throw std::invalid_argument("clip: lo > hi");
      n.value = x.cwiseMax(p0).cwiseMin(p1);
      break;
    case Op::kAffine: n.value = (p0 * x.array() + p1).matrix(); break;
    default: throw std::logic_error(std::string("unary: not a unary op: ") + op_name(op));
  }
  return Tensor(this, push(std::move(n)));
}

Tensor Graph::binary(Op op, const Tensor& a, const Tensor& b) {
  check_owner(a, op_name(op));
  check_owner(b, op_name(op));
  const Node& na = nodes_[static_cast<std::size_t>(a.id_)];
  const Node& nb = nodes_[static_cast<std::size_t>(b.id_)];
  const Matrix& x = na.value;
  const Matrix& y = nb.value;
  const Shape sa = shape_of(x);
  const Shape sb = shape_of(y);
  Node n;
  n.op = op;
  n.in0 = a.id_;
  n.in1 = b.id_;
  n.requires_grad = record_ && (na.requires_grad || nb.requires_grad);
  switch (op) {
    case Op::kMatMul:
      if (sa.cols != sb.rows) shape_error(op, sa, sb);
      n.value.noalias() = x * y;
      break;
    case Op::kAdd:
      if (!elementwise_compatible(sa, sb)) shape_error(op, sa, sb);
      n.value = broadcast_apply(x, y, [](double u, double v) { return u + v; });
      break;
    case Op::kSub:
      if (!elementwise_compatible(sa, sb)) shape_error(op, sa, sb);
      n.value = broadcast_apply(x, y, [](double u, double v) { return u - v; });
      break;
    case Op::kMul:
      if (!elementwise_compatible(sa, sb)) shape_error(op, sa, sb);
      n.value = broadcast_apply(x, y, [](double u, double v) { return u * v; });
      break;
    case Op::kMin:
      if (sa != sb) shape_error(op, sa, sb);
      n.value = x.binaryExpr(y, [](double u, double v) { return v < u ? v : u; });
      break;
    case Op::kAddRow:
      if (sb.rows != 1 || sb.cols != sa.cols) shape_error(op, sa, sb);
      n.value = x;
      n.value.rowwise() += y.row(0);
      break;
    default: throw std::logic_error(std::string("binary: not a binary op: ") + op_name(op));
  }
  return Tensor(this, push(std::move(n)));
}

Tensor Graph::slice_cols(const Tensor& a, Index start, Index count) {
  check_owner(a, "slice_cols");
  const Node& in = nodes_[static_cast<std::size_t>(a.id_)];
  if (start < 0 || count < 0 || start + count > in.value.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of range for " +
                     to_string(shape_of(in.value)));
  }
  Node n;
  n.op = Op::kSliceCols;
  n.in0 = a.id_;
  n.p0 = static_cast<double>(start);
  n.p1 = static_cast<double>(count);
  n.requires_grad = record_ && in.requires_grad;
  n.value = in.value.middleCols(start, count);
  return Tensor(this, push(std::move(n)));
}

Tensor Graph::broadcast_rows(const Tensor& a, Index rows) {
  check_owner(a, "broadcast_rows");
  const Node& in = nodes_[static_cast<std::size_t>(a.id_)];
  if (in.value.rows() != 1 || rows < 1) {
    throw ShapeError("broadcast_rows: expected a single row, got " + to_string(shape_of(in.value)));
  }
  Node n;
  n.op = Op::kBroadcastRows;
  n.in0 = a.id_;
  n.p0 = static_cast<double>(rows);
  n.requires_grad = record_ && in.requires_grad;
  n.value = in.value.replicate(rows, 1);
  return Tensor(this, push(std::move(n)));
}

void Graph::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Graph::propagate(Node& n) {
  const Matrix& g = n.grad;
  auto input = [this](int id) -> Node& { return nodes_[static_cast<std::size_t>(id)]; };
  auto wants = [&](int id) { return id >= 0 && input(id).requires_grad; };

  switch (n.op) {
    case Op::kConstant:
    case Op::kParam: break;
    case Op::kMatMul: {
      const Matrix& x = input(n.in0).value;
      const Matrix& y = input(n.in1).value;
      if (wants(n.in0)) {
        Matrix gx;
        gx.noalias() = g * y.transpose();
        accumulate(n.in0, gx);
      }
      if (wants(n.in1)) {
        Matrix gy;
        gy.noalias() = x.transpose() * g;
        accumulate(n.in1, gy);
      }
      break;
    }
    case Op::kAdd:
      if (wants(n.in0)) accumulate(n.in0, reduce_to(g, input(n.in0).value));
      if (wants(n.in1)) accumulate(n.in1, reduce_to(g, input(n.in1).value));
      break;
    case Op::kSub:
      if (wants(n.in0)) accumulate(n.in0, reduce_to(g, input(n.in0).value));
      if (wants(n.in1)) accumulate(n.in1, reduce_to(-g, input(n.in1).value));
      break;
    case Op::kMul: {
      const Matrix& x = input(n.in0).value;
      const Matrix& y = input(n.in1).value;
      if (wants(n.in0)) {
        Matrix gx = broadcast_apply(g, y, [](double u, double v) { return u * v; });
        accumulate(n.in0, reduce_to(gx, x));
      }
      if (wants(n.in1)) {
        Matrix gy = broadcast_apply(g, x, [](double u, double v) { return u * v; });
        accumulate(n.in1, reduce_to(gy, y));
      }
      break;
    }
    case Op::kMin: {
      const Matrix& x = input(n.in0).value;
      const Matrix& y = input(n.in1).value;
      const Matrix take_b = x.binaryExpr(y, [](double u, double v) { return v < u ? 1.0 : 0.0; });
      if (wants(n.in0)) accumulate(n.in0, g.cwiseProduct((1.0 - take_b.array()).matrix()));
      if (wants(n.in1)) accumulate(n.in1, g.cwiseProduct(take_b));
      break;
    }
    case Op::kAddRow:
      if (wants(n.in0)) accumulate(n.in0, g);
      if (wants(n.in1)) accumulate(n.in1, g.colwise().sum());
      break;
    case Op::kTanh:
      accumulate(n.in0, (g.array() * (1.0 - n.value.array().square())).matrix());
      break;
    case Op::kSigmoid:
      accumulate(n.in0, (g.array() * n.value.array() * (1.0 - n.value.array())).matrix());
      break;
    case Op::kExp: accumulate(n.in0, g.cwiseProduct(n.value)); break;
    case Op::kLog: accumulate(n.in0, (g.array() / input(n.in0).value.array()).matrix()); break;
    case Op::kSquare:
      accumulate(n.in0, (2.0 * g.array() * input(n.in0).value.array()).matrix());
      break;
    case Op::kMean: {
      const Matrix& x = input(n.in0).value;
      accumulate(n.in0, Matrix::Constant(x.rows(), x.cols(), g(0, 0) / static_cast<double>(x.size())));
      break;
    }
    case Op::kSum: {
      const Matrix& x = input(n.in0).value;
      accumulate(n.in0, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
      break;
    }
    case Op::kSumCols: {
      const Matrix& x = input(n.in0).value;
      accumulate(n.in0, g.replicate(1, x.cols()));
      break;
    }
    case Op::kClip: {
      const Matrix& x = input(n.in0).value;
      const double lo = n.p0;
      const double hi = n.p1;
      accumulate(n.in0, g.binaryExpr(x, [lo, hi](double gv, double xv) {
        return (xv >= lo && xv <= hi) ? gv : 0.0;
      }));
      break;
    }
    case Op::kAffine: accumulate(n.in0, n.p0 * g); break;
    case Op::kSliceCols: {
      const Matrix& x = input(n.in0).value;
      Matrix gx = Matrix::Zero(x.rows(), x.cols());
      gx.middleCols(static_cast<Index>(n.p0), static_cast<Index>(n.p1)) = g;
      accumulate(n.in0, gx);
      break;
    }
    case Op::kBroadcastRows: accumulate(n.in0, g.colwise().sum()); break;
  }
}

void Graph::backward(const Tensor& loss, const GroupMask& mask) {
  if (nodes_.empty()) throw std::logic_error("backward: empty graph");
  check_owner(loss, "backward");
  if (!record_) throw std::logic_error("backward: graph was built without gradient recording");
  const Node& root = nodes_[static_cast<std::size_t>(loss.id_)];
  if (root.value.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + to_string(shape_of(root.value)));
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  if (!root.requires_grad) return;

  accumulate(loss.id_, Matrix::Ones(1, 1));
  for (int i = loss.id_; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad) continue;
    if (n.op == Op::kParam) {
      if (n.param != nullptr && mask.allows(n.group)) n.param->grad += n.grad;
      continue;
    }
    propagate(n);
  }
}

Matrix Graph::grad(const Tensor& t) const {
  const Node& n = node(t);
  if (n.has_grad) return n.grad;
  return Matrix::Zero(n.value.rows(), n.value.cols());
}

Tensor matmul(const Tensor& a, const Tensor& b) { return owner(a).binary(Op::kMatMul, a, b); }
Tensor add(const Tensor& a, const Tensor& b) { return owner(a).binary(Op::kAdd, a, b); }
Tensor add_row(const Tensor& a, const Tensor& row) { return owner(a).binary(Op::kAddRow, a, row); }
Tensor sub(const Tensor& a, const Tensor& b) { return owner(a).binary(Op::kSub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return owner(a).binary(Op::kMul, a, b); }
Tensor minimum(const Tensor& a, const Tensor& b) { return owner(a).binary(Op::kMin, a, b); }
Tensor tanh(const Tensor& a) { return owner(a).unary(Op::kTanh, a); }
Tensor sigmoid(const Tensor& a) { return owner(a).unary(Op::kSigmoid, a); }
Tensor exp(const Tensor& a) { return owner(a).unary(Op::kExp, a); }
Tensor log(const Tensor& a) { return owner(a).unary(Op::kLog, a); }
Tensor square(const Tensor& a) { return owner(a).unary(Op::kSquare, a); }
Tensor mean(const Tensor& a) { return owner(a).unary(Op::kMean, a); }
Tensor sum(const Tensor& a) { return owner(a).unary(Op::kSum, a); }
Tensor sum_cols(const Tensor& a) { return owner(a).unary(Op::kSumCols, a); }
Tensor clip(const Tensor& a, double lo, double hi) { return owner(a).unary(Op::kClip, a, lo, hi); }
Tensor affine(const Tensor& a, double scale, double shift) {
  return owner(a).unary(Op::kAffine, a, scale, shift);
}
Tensor slice_cols(const Tensor& a, Index start, Index count) {
  return owner(a).slice_cols(a, start, count);
}
Tensor broadcast_rows(const Tensor& a, Index rows) { return owner(a).broadcast_rows(a, rows); }

}  // namespace mikt::nd
