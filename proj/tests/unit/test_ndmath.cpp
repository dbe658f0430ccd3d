#include <doctest.h>

#include <cmath>

#include "mikt/ndmath/graph.hpp"
#include "mikt/ndmath/param.hpp"
#include "oracles.hpp"

using namespace mikt;
using nd::Matrix;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<nd::Index>(v.size()));
  nd::Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

}  // namespace

TEST_SUITE("ndmath") {

TEST_CASE("forward values of primitive ops") {
  nd::Graph g;
  CHECK(nd::tanh(g.constant(row({0.0}))).item() == 0.0);
  CHECK(nd::clip(g.constant(row({1.5})), 0.8, 1.2).item() == 1.2);
  CHECK(nd::sigmoid(g.scalar(0.0)).item() == 0.5);
  CHECK(nd::exp(g.scalar(0.0)).item() == 1.0);
  CHECK(nd::log(g.scalar(1.0)).item() == 0.0);
  CHECK(nd::affine(g.scalar(2.0), 3.0, -1.0).item() == 5.0);
  CHECK(nd::minimum(g.constant(row({1.0, 5.0})), g.constant(row({2.0, 3.0}))).value() == row({1.0, 3.0}));
  CHECK(nd::mean(g.constant(row({1.0, 2.0, 3.0, 6.0}))).item() == 3.0);
  CHECK(nd::sum(g.constant(row({1.0, 2.0, 3.0}))).item() == 6.0);

  envs::RngStream rng(3);
  const Matrix x = oracle::random_matrix(1, 3, rng);
  CHECK(nd::matmul(g.constant(x), g.constant(Matrix::Identity(3, 3))).value() == x);
}

TEST_CASE("scalar broadcast works on either side") {
  nd::Graph g;
  const auto v = g.constant(row({1.0, 2.0}));
  CHECK(nd::mul(v, g.scalar(2.0)).value() == row({2.0, 4.0}));
  CHECK(nd::sub(g.scalar(3.0), v).value() == row({2.0, 1.0}));
}

TEST_CASE("shape errors name the op and both shapes") {
  nd::Graph g;
  const auto a = g.constant(Matrix::Zero(2, 3));
  const auto b = g.constant(Matrix::Zero(2, 3));
  try {
    nd::matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const nd::ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
  CHECK_THROWS_AS(nd::add(a, g.constant(Matrix::Zero(3, 2))), nd::ShapeError);
  CHECK_THROWS_AS(nd::minimum(a, g.scalar(1.0)), nd::ShapeError);
}

TEST_CASE("backward closed-form examples") {
  nd::ParamGroup grp("w", true);
  grp.add("w", row({1.0, 2.0}));
  {
    nd::Graph g;
    g.backward(nd::sum(nd::square(g.param(grp.at("w"), grp))));
  }
  CHECK(grp.at("w").grad == row({2.0, 4.0}));

  nd::ParamGroup m("m", true);
  m.add("w", row({0.3, -1.0, 2.0, 7.0}));
  {
    nd::Graph g;
    g.backward(nd::mean(g.param(m.at("w"), m)));
  }
  CHECK(m.at("w").grad == Matrix::Constant(1, 4, 0.25));
}

TEST_CASE("backward errors") {
  nd::Graph empty;
  nd::Graph g;
  const auto v = g.constant(row({1.0, 2.0}));
  CHECK_THROWS_AS(g.backward(v), nd::ShapeError);
  nd::Graph other;
  CHECK_THROWS(empty.backward(other.scalar(1.0)));
  nd::Graph nograd(false);
  CHECK_THROWS(nograd.backward(nograd.scalar(1.0)));
}

TEST_CASE("clip and min subgradient conventions") {
  nd::ParamGroup grp("x", true);
  grp.add("x", row({0.5, 0.8, 1.0, 1.2, 1.5}));
  {
    nd::Graph g;
    g.backward(nd::sum(nd::clip(g.param(grp.at("x"), grp), 0.8, 1.2)));
  }
  CHECK(grp.at("x").grad == row({0.0, 1.0, 1.0, 1.0, 0.0}));

  nd::ParamGroup a("a", true), b("b", true);
  a.add("v", row({1.0, 2.0, 3.0}));
  b.add("v", row({1.0, 1.0, 4.0}));
  {
    nd::Graph g;
    g.backward(nd::sum(nd::minimum(g.param(a.at("v"), a), g.param(b.at("v"), b))));
  }
  CHECK(a.at("v").grad == row({1.0, 0.0, 1.0}));  // tie at index 0 goes to a
  CHECK(b.at("v").grad == row({0.0, 1.0, 0.0}));
}

TEST_CASE("frozen groups become constants and masks filter groups") {
  nd::ParamGroup frozen("t", true);
  frozen.add("w", row({1.0}));
  frozen.freeze();
  nd::ParamGroup live("s", true);
  live.add("w", row({2.0}));
  nd::ParamGroup other("o", true);
  other.add("w", row({3.0}));
  nd::Graph g;
  const auto f = g.param(frozen.at("w"), frozen);
  CHECK_FALSE(f.requires_grad());
  const auto loss = nd::sum(nd::mul(nd::mul(f, g.param(live.at("w"), live)), g.param(other.at("w"), other)));
  g.backward(loss, nd::GroupMask::only({&live}));
  CHECK(live.at("w").grad(0, 0) == 3.0);
  CHECK(other.at("w").grad(0, 0) == 0.0);
  CHECK(frozen.grad_norm() == 0.0);
  CHECK(g.grad(f)(0, 0) == 0.0);
}

TEST_CASE("finite differences over randomized composites") {
  envs::RngStream rng(2024);
  int cases = 0;
  for (int c = 0; c < 100; ++c) {
    nd::ParamGroup grp("p", true);
    grp.add("w1", oracle::random_matrix(3, 4, rng));
    grp.add("w2", oracle::random_matrix(4, 2, rng));
    grp.add("b", oracle::random_matrix(1, 2, rng));
    grp.add("s", oracle::random_matrix(1, 1, rng));
    const Matrix x = oracle::random_matrix(5, 3, rng);
    const auto pick = static_cast<int>(rng.below(6));
    const double lo = rng.uniform(-0.5, 0.5);
    auto loss = [&](nd::Graph& g) {
      const auto w1 = g.param(grp.at("w1"), grp);
      const auto w2 = g.param(grp.at("w2"), grp);
      const auto b = g.param(grp.at("b"), grp);
      const auto s = g.param(grp.at("s"), grp);
      auto h = nd::matmul(g.constant(x), w1);
      switch (pick) {
        case 0: h = nd::tanh(h); break;
        case 1: h = nd::sigmoid(h); break;
        case 2: h = nd::exp(nd::affine(h, 0.5, 0.0)); break;
        case 3: h = nd::log(nd::add(nd::square(h), g.scalar(0.5))); break;
        case 4: h = nd::mul(h, s); break;
        default: h = nd::sub(nd::tanh(h), nd::square(nd::sigmoid(h))); break;
      }
      auto y = nd::add_row(nd::matmul(h, w2), b);
      y = nd::minimum(nd::tanh(y), nd::affine(y, 0.5, lo));
      const auto cols = nd::sum_cols(nd::broadcast_rows(b, 3));
      const auto slice = nd::mean(nd::slice_cols(w2, 1, 1));
      return nd::add(nd::add(nd::mean(nd::square(y)), nd::mul(nd::sum(cols), s)), nd::square(slice));
    };
    const auto r = oracle::finite_difference_check({&grp}, loss);
    CHECK(r.max_rel_error <= 1e-4);
    ++cases;
  }
  CHECK(cases == 100);
}

TEST_CASE("backward is linear in the loss") {
  envs::RngStream rng(9);
  nd::ParamGroup grp("p", true);
  grp.add("w", oracle::random_matrix(3, 3, rng));
  const Matrix x = oracle::random_matrix(4, 3, rng);
  auto grads = [&](double a, double b) {
    grp.zero_grad();
    nd::Graph g;
    const auto y = nd::matmul(g.constant(x), g.param(grp.at("w"), grp));
    const auto l1 = nd::mean(nd::tanh(y));
    const auto l2 = nd::sum(nd::square(y));
    g.backward(nd::add(nd::affine(l1, a, 0.0), nd::affine(l2, b, 0.0)));
    return Matrix(grp.at("w").grad);
  };
  const Matrix g1 = grads(1.0, 0.0);
  const Matrix g2 = grads(0.0, 1.0);
  const Matrix gc = grads(2.5, -0.7);
  CHECK((gc - (2.5 * g1 - 0.7 * g2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adam first step and zero gradient") {
  nd::ParamGroup grp("p", true);
  grp.add("w", row({0.0}));
  grp.at("w").grad(0, 0) = 1.0;
  nd::adam_step(grp, nd::AdamConfig{});
  CHECK(grp.at("w").value(0, 0) == doctest::Approx(-3e-4).epsilon(1e-6));
  CHECK(grp.at("w").grad(0, 0) == 0.0);
  CHECK(grp.adam_state()->step == 1);

  nd::ParamGroup fresh("q", true);
  fresh.add("w", row({0.7, -0.2}));
  const Matrix before = fresh.at("w").value;
  for (int i = 0; i < 3; ++i) nd::adam_step(fresh, nd::AdamConfig{});
  CHECK(fresh.at("w").value == before);
  CHECK(fresh.adam_state()->step == 3);
}

TEST_CASE("adam descends on theta squared") {
  nd::ParamGroup grp("p", true);
  grp.add("theta", row({1.0}));
  nd::AdamConfig cfg;
  cfg.learning_rate = 1e-2;
  double prev = 1.0;
  for (int i = 0; i < 100; ++i) {
    nd::Graph g;
    g.backward(nd::sum(nd::square(g.param(grp.at("theta"), grp))));
    nd::adam_step(grp, cfg);
    const double now = std::abs(grp.at("theta").value(0, 0));
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("adam rejects frozen groups and bad config") {
  nd::ParamGroup grp("p", true);
  grp.add("w", row({1.0}));
  grp.freeze();
  CHECK_THROWS_AS(nd::adam_step(grp, nd::AdamConfig{}), std::logic_error);
  CHECK_FALSE(grp.adam_state().has_value());
  nd::AdamConfig bad;
  bad.beta1 = 1.0;
  CHECK_THROWS(bad.validate());
  bad = nd::AdamConfig{};
  bad.learning_rate = 0.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("group hash tracks parameter bytes") {
  nd::ParamGroup a("p", true);
  a.add("w", row({1.0, 2.0}));
  const auto h = a.hash();
  CHECK(a.hash() == h);
  a.at("w").value(0, 1) = std::nextafter(2.0, 3.0);
  CHECK(a.hash() != h);
}

}  // TEST_SUITE
