#include "doctest.h"

#include <cmath>
#include <vector>

#include "doctor/gradcheck.hpp"
#include "doctor/nn.hpp"
#include "doctor/rng.hpp"
#include "doctor/tensor.hpp"

using namespace doctor;

namespace {

Tensor rand_tensor(Shape shape, Rng& rng, bool rg = true) {
  long n = 1;
  for (int d : shape) n *= d;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::of(std::move(shape), std::move(v), rg);
}

Tensor identity(int n) {
  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;
  return Tensor::of({n, n}, std::move(v));
}

}  // namespace

TEST_CASE("matmul by the identity is the identity map") {
  Rng rng(42);
  Tensor a = rand_tensor({3, 3}, rng, false);
  Tensor out = matmul(identity(3), a);
  for (long i = 0; i < 9; ++i) CHECK(out.at(i) == doctest::Approx(a.at(i)).epsilon(1e-15));
}

TEST_CASE("pointwise symmetry cases") {
  Tensor z = Tensor::scalar(0.0);
  CHECK(tanh_t(z).value() == 0.0);
  CHECK(sigmoid(z).value() == 0.5);
  Tensor s = softmax_rows(Tensor::of({3}, {1.0, 1.0, 1.0}));
  for (long i = 0; i < 3; ++i) CHECK(s.at(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("shape mismatch errors name the operation and both shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({4, 5});
  try {
    matmul(a, b);
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,5]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, b), std::invalid_argument);
}

TEST_CASE("backward requires a scalar loss") {
  Tensor x = Tensor::of({2}, {1.0, 2.0}, true);
  CHECK_THROWS_AS(backward(x), std::invalid_argument);
}

TEST_CASE("simple analytic derivatives") {
  Tensor x = Tensor::scalar(0.0, true);
  Tensor y = tanh_t(x);
  backward(y);
  CHECK(x.grad()[0] == doctest::Approx(1.0).epsilon(1e-12));

  Tensor x2 = Tensor::scalar(3.0, true);
  Tensor y2 = mul(x2, x2);
  backward(y2);
  CHECK(x2.grad()[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("repeated backward accumulates") {
  Tensor x = Tensor::scalar(2.0, true);
  Tensor y1 = mul(x, x);
  backward(y1);
  backward(y1);
  CHECK(x.grad()[0] == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("two-layer mlp gradients match central finite differences") {
  Rng rng(9);
  Tensor x = rand_tensor({6}, rng, false);
  Tensor w1 = rand_tensor({6, 8}, rng);
  Tensor b1 = rand_tensor({8}, rng);
  Tensor w2 = rand_tensor({8, 1}, rng);
  Tensor b2 = rand_tensor({1}, rng);
  auto f = [&x](const std::vector<Tensor>& in) {
    MlpParams p{{in[0], in[1]}, {in[2], in[3]}};
    return mean_all(mlp(x, p));
  };
  auto rep = gradcheck(f, {w1, b1, w2, b2});
  CHECK(rep.max_rel_err <= 1e-4);
}

TEST_CASE("gradient linearity: grad(a*f + b*g) = a*grad(f) + b*grad(g)") {
  Rng rng(15);
  const double ca = 1.7, cb = -0.6;
  Tensor x1 = rand_tensor({4}, rng);
  auto make_f = [](const Tensor& x) { return squared_l2(tanh_t(x)); };
  auto make_g = [](const Tensor& x) { return mean_all(sigmoid(x)); };

  backward(add(scale(make_f(x1), ca), scale(make_g(x1), cb)));
  std::vector<double> combined = x1.grad();

  Tensor x2 = Tensor::of(x1.shape(), x1.data(), true);
  backward(make_f(x2));
  std::vector<double> gf = x2.grad();
  Tensor x3 = Tensor::of(x1.shape(), x1.data(), true);
  backward(make_g(x3));
  std::vector<double> gg = x3.grad();

  for (std::size_t i = 0; i < combined.size(); ++i)
    CHECK(combined[i] == doctest::Approx(ca * gf[i] + cb * gg[i]).epsilon(1e-12));
}

TEST_CASE("determinism: identical seeds give bit-identical graphs") {
  auto build = [] {
    Rng rng(1234);
    Tensor x = rand_tensor({5, 5}, rng);
    Tensor y = layernorm(matmul(x, x));
    Tensor l = squared_l2(y);
    backward(l);
    return std::make_pair(l.value(), x.grad());
  };
  auto [l1, g1] = build();
  auto [l2, g2] = build();
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}

TEST_CASE("attention: single-row with identity projections returns the value row") {
  Tensor q = Tensor::of({1, 3}, {0.2, -0.4, 1.0});
  Tensor val = Tensor::of({1, 3}, {5.0, 6.0, 7.0});
  Tensor i3 = identity(3);
  Tensor out = attention(q, q, val, i3, i3, i3);
  for (long i = 0; i < 3; ++i) CHECK(out.at(i) == doctest::Approx(val.at(i)).epsilon(1e-15));
}

TEST_CASE("attention: duplicated key rows split the weights evenly") {
  Tensor q = Tensor::of({1, 2}, {0.3, 0.9});
  Tensor k = Tensor::of({2, 2}, {0.5, -0.2, 0.5, -0.2});
  Tensor v = Tensor::of({2, 2}, {1.0, 0.0, 0.0, 1.0});
  Tensor i2 = identity(2);
  Tensor out = attention(q, k, v, i2, i2, i2);
  CHECK(out.at(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(out.at(1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("attention matches a scripted softmax(QK^T/sqrt(d))V oracle") {
  Rng rng(77);
  Tensor q = rand_tensor({3, 4}, rng, false);
  Tensor k = rand_tensor({5, 4}, rng, false);
  Tensor v = rand_tensor({5, 4}, rng, false);
  Tensor wq = rand_tensor({4, 4}, rng, false);
  Tensor wk = rand_tensor({4, 4}, rng, false);
  Tensor wv = rand_tensor({4, 4}, rng, false);
  Tensor out = attention(q, k, v, wq, wk, wv);

  // Oracle: plain loops, no tensor ops.
  auto matmul_ref = [](const std::vector<double>& a, const std::vector<double>& b, int m, int kk, int n) {
    std::vector<double> c(static_cast<std::size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i)
      for (int l = 0; l < kk; ++l)
        for (int j = 0; j < n; ++j) c[i * n + j] += a[i * kk + l] * b[l * n + j];
    return c;
  };
  auto Q = matmul_ref(q.data(), wq.data(), 3, 4, 4);
  auto K = matmul_ref(k.data(), wk.data(), 5, 4, 4);
  auto V = matmul_ref(v.data(), wv.data(), 5, 4, 4);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> srow(5);
    double mx = -1e300;
    for (int j = 0; j < 5; ++j) {
      double s = 0.0;
      for (int l = 0; l < 4; ++l) s += Q[i * 4 + l] * K[j * 4 + l];
      srow[j] = s / std::sqrt(4.0);
      mx = std::max(mx, srow[j]);
    }
    double z = 0.0;
    for (double& s : srow) {
      s = std::exp(s - mx);
      z += s;
    }
    for (double& s : srow) s /= z;
    for (int c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (int j = 0; j < 5; ++j) acc += srow[j] * V[j * 4 + c];
      CHECK(std::abs(out.at(i, c) - acc) <= 1e-10);
    }
  }
}

TEST_CASE("attention rejects empty sequences") {
  Tensor i2 = identity(2);
  Tensor q = Tensor::zeros({1, 2});
  CHECK_NOTHROW(attention(q, q, q, i2, i2, i2));
  // Zero-row tensors cannot even be constructed; the guard sits on the factory.
  CHECK_THROWS_AS(Tensor::zeros({0, 2}), std::invalid_argument);
}

TEST_CASE("layernorm rows") {
  Tensor c = layernorm(Tensor::of({3}, {4.2, 4.2, 4.2}));
  for (long i = 0; i < 3; ++i) CHECK(c.at(i) == 0.0);

  Tensor pm = layernorm(Tensor::of({2}, {1.0, -1.0}));
  CHECK(pm.at(0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(pm.at(1) == doctest::Approx(-1.0).epsilon(1e-5));

  Rng rng(5);
  Tensor row = rand_tensor({32}, rng, false);
  Tensor y = layernorm(row);
  double mean = 0.0;
  for (long i = 0; i < y.size(); ++i) mean += y.at(i);
  mean /= static_cast<double>(y.size());
  double var = 0.0;
  for (long i = 0; i < y.size(); ++i) var += (y.at(i) - mean) * (y.at(i) - mean);
  var /= static_cast<double>(y.size());
  CHECK(std::abs(mean) <= 1e-9);
  CHECK(std::abs(var - 1.0) <= 1e-4);
}

TEST_CASE("finite-difference sweep across every differentiable operation") {
  for (const auto& check : gradcheck_op_suite(2024)) {
    INFO(check.name);
    CHECK(check.max_rel_err <= 1e-4);
  }
}

TEST_CASE("teacher-style detached tensors receive no gradient") {
  Tensor x = Tensor::of({3}, {1.0, 2.0, 3.0}, true);
  Tensor d = detach(x);
  CHECK_FALSE(d.requires_grad());
  Tensor loss = squared_l2(add(x, d));
  backward(loss);
  CHECK(x.has_grad());
  CHECK_FALSE(d.has_grad());
}

TEST_CASE("conv2d stride-2 downsampling shape") {
  Tensor x = Tensor::zeros({4, 4, 3});
  Tensor w = Tensor::zeros({3, 3, 3, 5});
  Tensor b = Tensor::zeros({5});
  Tensor y = conv2d(x, w, b, 2, 1);
  CHECK(y.shape() == Shape{2, 2, 5});
  Tensor y2 = conv2d(y, Tensor::zeros({3, 3, 5, 5}), Tensor::zeros({5}), 2, 1);
  CHECK(y2.shape() == Shape{1, 1, 5});
}
