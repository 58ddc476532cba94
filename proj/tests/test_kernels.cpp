#include "doctest.h"

#include <vector>

#include "doctor/kernels.hpp"
#include "doctor/rng.hpp"

using namespace doctor;

namespace {

std::vector<double> rand_buf(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("parallel matmul kernels match serial reference bit for bit") {
  Rng rng(7);
  for (int rep = 0; rep < 12; ++rep) {
    const int m = 1 + rng.uniform_int(40);
    const int k = 1 + rng.uniform_int(40);
    const int n = 1 + rng.uniform_int(40);
    auto a = rand_buf(static_cast<std::size_t>(m) * k, rng);
    auto b = rand_buf(static_cast<std::size_t>(k) * n, rng);

    std::vector<double> cs(static_cast<std::size_t>(m) * n, 0.0);
    std::vector<double> cp(cs);
    kernels::serial::matmul(a.data(), b.data(), cs.data(), m, k, n);
    kernels::parallel::matmul(a.data(), b.data(), cp.data(), m, k, n);
    CHECK(cs == cp);

    auto g = rand_buf(static_cast<std::size_t>(m) * n, rng);
    std::vector<double> das(static_cast<std::size_t>(m) * k, 0.0), dap(das);
    kernels::serial::matmul_nt(g.data(), b.data(), das.data(), m, n, k);
    kernels::parallel::matmul_nt(g.data(), b.data(), dap.data(), m, n, k);
    CHECK(das == dap);

    std::vector<double> dbs(static_cast<std::size_t>(k) * n, 0.0), dbp(dbs);
    kernels::serial::matmul_tn(a.data(), g.data(), dbs.data(), m, k, n);
    kernels::parallel::matmul_tn(a.data(), g.data(), dbp.data(), m, k, n);
    CHECK(dbs == dbp);
  }
}

TEST_CASE("parallel conv2d matches serial reference bit for bit") {
  Rng rng(11);
  for (int rep = 0; rep < 8; ++rep) {
    const int h = 3 + rng.uniform_int(10);
    const int w = 3 + rng.uniform_int(10);
    const int ci = 1 + rng.uniform_int(4);
    const int co = 1 + rng.uniform_int(4);
    const int kk = 3;
    const int stride = 1 + rng.uniform_int(2);
    const int pad = rng.uniform_int(2);
    auto x = rand_buf(static_cast<std::size_t>(h) * w * ci, rng);
    auto wt = rand_buf(static_cast<std::size_t>(kk) * kk * ci * co, rng);
    auto b = rand_buf(static_cast<std::size_t>(co), rng);
    const int ho = kernels::conv_out_dim(h, kk, stride, pad);
    const int wo = kernels::conv_out_dim(w, kk, stride, pad);
    REQUIRE(ho > 0);
    REQUIRE(wo > 0);
    std::vector<double> os(static_cast<std::size_t>(ho) * wo * co, 0.0), op(os);
    kernels::serial::conv2d(x.data(), wt.data(), b.data(), os.data(), h, w, ci, kk, kk, co, stride, pad);
    kernels::parallel::conv2d(x.data(), wt.data(), b.data(), op.data(), h, w, ci, kk, kk, co, stride, pad);
    CHECK(os == op);
  }
}

TEST_CASE("matmul against a naive triple loop") {
  Rng rng(3);
  const int m = 5, k = 7, n = 4;
  auto a = rand_buf(m * k, rng);
  auto b = rand_buf(k * n, rng);
  std::vector<double> c(m * n, 0.0);
  kernels::matmul(a.data(), b.data(), c.data(), m, k, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += a[i * k + l] * b[l * n + j];
      CHECK(c[i * n + j] == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("conv output dims") {
  CHECK(kernels::conv_out_dim(2, 3, 2, 1) == 1);
  CHECK(kernels::conv_out_dim(4, 3, 2, 1) == 2);
  CHECK(kernels::conv_out_dim(6, 3, 1, 0) == 4);
}
