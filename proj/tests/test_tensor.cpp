// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "error.hpp"
#include "fd_cases.hpp"
#include "params.hpp"
#include "tensor.hpp"

using namespace tsc;
using nn::Graph;
using nn::Matrix;
using nn::ParamStore;
using nn::Var;

TEST_CASE("gradients of every op match central differences") {
  Rng rng(101);
  for (const auto& op : test::fd_ops()) {
    CAPTURE(op.name);
    for (int rep = 0; rep < 3; ++rep) {
      auto c = op.make(rng);
      const auto r = test::finite_difference_check(*c.store, c.loss, 1e-4, 1e-6, 1e-6, c.prefix);
      CHECK(r.checked > 0);
      CHECK(r.failed == 0);
    }
  }
}

TEST_CASE("forward values of elementary ops") {
  Graph g;
  CHECK(g.value(g.sigmoid(g.constant(Matrix(1, 1, 0.0)))).data[0] == 0.5);
  CHECK(g.value(g.relu(g.constant(Matrix::row({-1, 0, 2})))).data == std::vector<double>{0, 0, 2});
  CHECK(g.value(g.bce(g.constant(Matrix(1, 1, 0.5)), Matrix(1, 1, 1.0))).data[0] == doctest::Approx(std::log(2.0)));
  const Matrix x = Matrix::row({0.3, -0.2, 0.7});
  CHECK(g.value(g.mse(g.constant(x), x)).data[0] == 0.0);
  // small residuals: huber is half the squared error
  const Matrix t = Matrix::row({0.1, -0.4, 0.5});
  const double h = g.value(g.huber(g.constant(x), t)).data[0];
  const double m = g.value(g.mse(g.constant(x), t)).data[0];
  CHECK(h == doctest::Approx(m / 2));
  // large residual: linear branch
  CHECK(g.value(g.huber(g.constant(Matrix(1, 1, 5.0)), Matrix(1, 1, 0.0))).data[0] == doctest::Approx(4.5));
  const auto sm = g.value(g.softmax_rows(g.constant(Matrix::row({1, 1, 1, 1})))).data;
  for (double v : sm) CHECK(v == doctest::Approx(0.25));
  const auto d = g.value(g.dense(g.constant(Matrix(1, 2, {1, 2})), g.constant(Matrix(2, 1, {3, 4})),
                                 g.constant(Matrix(1, 1, 0.5))));
  CHECK(d.data[0] == doctest::Approx(11.5));
}

TEST_CASE("dense output shape") {
  Rng rng(3);
  Graph g;
  const Var y = g.dense(g.constant(test::random_matrix(rng, 5, 7)), g.constant(test::random_matrix(rng, 7, 3)));
  CHECK(g.value(y).rows == 5);
  CHECK(g.value(y).cols == 3);
  CHECK_THROWS_AS(g.dense(g.constant(Matrix(5, 6)), g.constant(Matrix(7, 3))), Error);
  CHECK_THROWS_AS(g.add(g.constant(Matrix(2, 2)), g.constant(Matrix(2, 3))), Error);
}

TEST_CASE("attention over one row returns the projected value of that row") {
  Rng rng(9);
  Graph g;
  const Matrix h = test::random_matrix(rng, 1, 4), wq = test::random_matrix(rng, 4, 4), wk = test::random_matrix(rng, 4, 4),
               wv = test::random_matrix(rng, 4, 4), wo = test::random_matrix(rng, 4, 1), bo(1, 1, 0.25);
  const Var out = nn::self_attention_1head(g, g.constant(h), g.constant(wq), g.constant(wk), g.constant(wv),
                                           g.constant(wo), g.constant(bo));
  const Var expect = g.dense(g.matmul(g.constant(h), g.constant(wv)), g.constant(wo), g.constant(bo));
  CHECK(g.value(out).data[0] == doctest::Approx(g.value(expect).data[0]));
}

TEST_CASE("attention is permutation-equivariant") {
  Rng rng(10);
  const int m = 5, d = 4;
  const Matrix h = test::random_matrix(rng, m, d), wq = test::random_matrix(rng, d, d),
               wk = test::random_matrix(rng, d, d), wv = test::random_matrix(rng, d, d),
               wo = test::random_matrix(rng, d, 1), bo(1, 1, 0.0);
  const std::vector<int> perm{3, 0, 4, 1, 2};
  Matrix hp(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) hp(i, j) = h(perm[i], j);
  Graph g;
  auto run = [&](const Matrix& x) {
    return g.value(nn::self_attention_1head(g, g.constant(x), g.constant(wq), g.constant(wk), g.constant(wv),
                                            g.constant(wo), g.constant(bo)))
        .data;
  };
  const auto a = run(h);
  const auto b = run(hp);
  for (int i = 0; i < m; ++i) CHECK(b[i] == doctest::Approx(a[perm[i]]));
}

TEST_CASE("adam") {
  ParamStore s;
  const int w = s.add("w", 1, 3);
  s[w].value = Matrix::row({1.0, -2.0, 0.5});
  s.zero_grad();

  SUBCASE("no populated gradient") { CHECK_THROWS_AS(nn::adam_step(s, {}), Error); }

  SUBCASE("zero gradient leaves the values") {
    s[w].grad_ready = true;
    nn::adam_step(s, {});
    CHECK(s[w].value.data == std::vector<double>{1.0, -2.0, 0.5});
  }

  SUBCASE("first step moves each entry by about lr against the gradient sign") {
    s[w].grad = Matrix::row({3.0, -0.1, 1e-3});
    s[w].grad_ready = true;
    nn::AdamConfig c;
    c.lr = 0.01;
    nn::adam_step(s, c);
    CHECK(s[w].value.data[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
    CHECK(s[w].value.data[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-6));
    CHECK(s[w].value.data[2] == doctest::Approx(0.5 - 0.01).epsilon(1e-4));
  }

  SUBCASE("minimises a quadratic") {
    nn::AdamConfig c;
    c.lr = 0.05;
    Graph g;
    const Matrix target = Matrix::row({0.3, 0.7, -1.1});
    double loss = 0;
    for (int it = 0; it < 2000; ++it) {
      g.clear();
      s.zero_grad();
      const Var l = g.mse(g.param(s, "w"), target);
      loss = g.value(l).data[0];
      g.backward(l);
      nn::adam_step(s, c);
    }
    CHECK(loss < 1e-6);
  }
}

TEST_CASE("gradient clipping rescales to the global norm") {
  ParamStore s;
  s.add("a", 1, 2);
  s.add("b", 1, 1);
  s[0].grad = Matrix::row({3, 0});
  s[1].grad = Matrix::row({4});
  s[0].grad_ready = s[1].grad_ready = true;
  CHECK(s.grad_norm() == doctest::Approx(5.0));
  s.clip_grad_norm(1.0);
  CHECK(s.grad_norm() == doctest::Approx(1.0));
  CHECK(s[0].grad.data[0] == doctest::Approx(0.6));
  s.clip_grad_norm(10.0);
  CHECK(s.grad_norm() == doctest::Approx(1.0));
}

TEST_CASE("initialisation draws weights within the fan-in bound and zero biases") {
  ParamStore s;
  s.add("W", 16, 8);
  s.add("b", 1, 8, nn::ParamKind::Bias);
  Rng rng(4);
  s.initialize(rng);
  for (double v : s[0].value.data) CHECK(std::abs(v) <= 0.25);
  for (double v : s[1].value.data) CHECK(v == 0.0);
  ParamStore t = s;
  Rng rng2(4);
  t.initialize(rng2);
  CHECK(t == s);
}

TEST_CASE("checkpoints round-trip byte-identically") {
  ParamStore s = make_params({}, 77);
  Rng rng(5);
  for (int i = 0; i < s.size(); ++i) {
    for (double& v : s[i].m.data) v = rng.uniform();
    for (double& v : s[i].v.data) v = rng.uniform();
    s[i].step = 12;
  }
  std::stringstream a;
  nn::save_checkpoint(s, a);
  const std::string bytes = a.str();
  std::stringstream in(bytes);
  const ParamStore t = nn::load_checkpoint(in);
  CHECK(t.values_equal(s));
  CHECK(t[0].m == s[0].m);
  CHECK(t[0].step == 12);
  std::stringstream b;
  nn::save_checkpoint(t, b);
  CHECK(b.str() == bytes);

  std::string bumped = bytes;
  bumped[8] = static_cast<char>(nn::kCheckpointVersion + 1);
  std::stringstream bad(bumped);
  try {
    nn::load_checkpoint(bad);
    FAIL("expected a version mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CheckpointVersionMismatch);
  }

  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(nn::load_checkpoint(truncated), Error);
}

TEST_CASE("backward through a shared subexpression accumulates") {
  ParamStore s;
  s.add("x", 1, 1);
  s[0].value = Matrix(1, 1, 3.0);
  Graph g;
  const Var x = g.param(s, "x");
  const Var y = g.mul(x, x);  // x^2
  s.zero_grad();
  g.backward(g.sum(g.add(y, x)));
  CHECK(s[0].grad.data[0] == doctest::Approx(7.0));
}
