#include "doctor/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "doctor/nn.hpp"
#include "doctor/rng.hpp"

namespace doctor {

GradCheckReport gradcheck(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                          std::vector<Tensor> inputs, double h,
                          long max_coords_per_input, std::uint64_t subsample_seed) {
  for (auto& t : inputs) t.zero_grad();
  Tensor loss = f(inputs);
  backward(loss);

  GradCheckReport report;
  Rng pick(derive_seed(subsample_seed, "gradcheck-pick"));
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    Tensor& t = inputs[ti];
    if (!t.requires_grad()) continue;
    std::vector<long> coords;
    if (max_coords_per_input < 0 || t.size() <= max_coords_per_input) {
      coords.resize(static_cast<std::size_t>(t.size()));
      for (long i = 0; i < t.size(); ++i) coords[static_cast<std::size_t>(i)] = i;
    } else {
      for (long i = 0; i < max_coords_per_input; ++i)
        coords.push_back(pick.uniform_int(static_cast<int>(t.size())));
    }
    const std::vector<double> ad = t.has_grad() ? t.grad() : std::vector<double>(static_cast<std::size_t>(t.size()), 0.0);
    for (long c : coords) {
      auto& data = t.leaf_data();
      const double x0 = data[static_cast<std::size_t>(c)];
      data[static_cast<std::size_t>(c)] = x0 + h;
      const double fp = f(inputs).value();
      data[static_cast<std::size_t>(c)] = x0 - h;
      const double fm = f(inputs).value();
      data[static_cast<std::size_t>(c)] = x0;
      const double fd = (fp - fm) / (2.0 * h);
      const double a = ad[static_cast<std::size_t>(c)];
      const double rel = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
      report.max_rel_err = std::max(report.max_rel_err, rel);
      ++report.coords_checked;
    }
  }
  return report;
}

namespace {

Tensor rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  long n = 1;
  for (int d : shape) n *= d;
  std::vector<double> data(static_cast<std::size_t>(n));
  for (auto& x : data) x = rng.uniform(lo, hi);
  return Tensor::of(std::move(shape), std::move(data), true);
}

// Reduce any output to a scalar through a fixed random weighting so every
// output coordinate influences the loss.
Tensor weighted_sum(const Tensor& t, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "gradcheck-weights"));
  std::vector<double> w(static_cast<std::size_t>(t.size()));
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  Tensor wt = Tensor::of({static_cast<int>(t.size())}, std::move(w), false);
  Tensor flat = t.rank() == 1 ? t : reshape(t, {static_cast<int>(t.size())});
  return dot(flat, wt);
}

}  // namespace

std::vector<OpCheck> gradcheck_op_suite(std::uint64_t seed) {
  std::vector<OpCheck> out;
  auto run = [&](const std::string& name, const std::function<Tensor(const std::vector<Tensor>&)>& f,
                 std::vector<Tensor> inputs) {
    // Ten fresh random points per operation.
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<Tensor> pt;
      Rng rng(derive_seed(seed, name, static_cast<std::uint64_t>(rep)));
      for (const auto& t : inputs) pt.push_back(rand_tensor(t.shape(), rng));
      worst = std::max(worst, gradcheck(f, std::move(pt), 1e-5, -1, seed).max_rel_err);
    }
    out.push_back({name, worst});
  };

  const std::uint64_t ws = seed ^ 0x5bf03635ULL;

  run("add", [&](const std::vector<Tensor>& in) { return weighted_sum(add(in[0], in[1]), ws); },
      {Tensor::zeros({3, 4}), Tensor::zeros({3, 4})});
  run("sub", [&](const std::vector<Tensor>& in) { return weighted_sum(sub(in[0], in[1]), ws); },
      {Tensor::zeros({3, 4}), Tensor::zeros({3, 4})});
  run("mul", [&](const std::vector<Tensor>& in) { return weighted_sum(mul(in[0], in[1]), ws); },
      {Tensor::zeros({3, 4}), Tensor::zeros({3, 4})});
  run("scale", [&](const std::vector<Tensor>& in) { return weighted_sum(scale(in[0], -1.7), ws); },
      {Tensor::zeros({5})});
  run("add_scalar", [&](const std::vector<Tensor>& in) { return weighted_sum(add_scalar(in[0], 0.31), ws); },
      {Tensor::zeros({5})});
  run("matmul", [&](const std::vector<Tensor>& in) { return weighted_sum(matmul(in[0], in[1]), ws); },
      {Tensor::zeros({3, 4}), Tensor::zeros({4, 2})});
  run("transpose", [&](const std::vector<Tensor>& in) { return weighted_sum(transpose(in[0]), ws); },
      {Tensor::zeros({3, 4})});
  run("dot", [&](const std::vector<Tensor>& in) { return dot(in[0], in[1]); },
      {Tensor::zeros({6}), Tensor::zeros({6})});
  run("reshape", [&](const std::vector<Tensor>& in) { return weighted_sum(reshape(in[0], {2, 6}), ws); },
      {Tensor::zeros({3, 4})});
  run("concat_rows",
      [&](const std::vector<Tensor>& in) { return weighted_sum(concat_rows({in[0], in[1]}), ws); },
      {Tensor::zeros({2, 3}), Tensor::zeros({4, 3})});
  run("concat_vec",
      [&](const std::vector<Tensor>& in) { return weighted_sum(concat_vec({in[0], in[1]}), ws); },
      {Tensor::zeros({3}), Tensor::zeros({5})});
  run("stack_rows",
      [&](const std::vector<Tensor>& in) { return weighted_sum(stack_rows({in[0], in[1], in[2]}), ws); },
      {Tensor::zeros({4}), Tensor::zeros({4}), Tensor::zeros({4})});
  run("slice_rows", [&](const std::vector<Tensor>& in) { return weighted_sum(slice_rows(in[0], 1, 3), ws); },
      {Tensor::zeros({4, 3})});
  run("repeat_rows", [&](const std::vector<Tensor>& in) { return weighted_sum(repeat_rows(in[0], 3), ws); },
      {Tensor::zeros({4})});
  run("mean_all", [&](const std::vector<Tensor>& in) { return mean_all(in[0]); }, {Tensor::zeros({3, 4})});
  run("sum_all", [&](const std::vector<Tensor>& in) { return sum_all(in[0]); }, {Tensor::zeros({7})});
  run("mean_rows", [&](const std::vector<Tensor>& in) { return weighted_sum(mean_rows(in[0]), ws); },
      {Tensor::zeros({5, 3})});
  run("squared_l2", [&](const std::vector<Tensor>& in) { return squared_l2(in[0]); }, {Tensor::zeros({3, 3})});
  run("tanh", [&](const std::vector<Tensor>& in) { return weighted_sum(tanh_t(in[0]), ws); }, {Tensor::zeros({6})});
  run("sigmoid", [&](const std::vector<Tensor>& in) { return weighted_sum(sigmoid(in[0]), ws); },
      {Tensor::zeros({6})});
  run("exp", [&](const std::vector<Tensor>& in) { return weighted_sum(exp_t(in[0]), ws); }, {Tensor::zeros({6})});
  run("log",
      [&](const std::vector<Tensor>& in) { return weighted_sum(log_t(add_scalar(in[0], 2.5)), ws); },
      {Tensor::zeros({6})});
  run("softmax_rows", [&](const std::vector<Tensor>& in) { return weighted_sum(softmax_rows(in[0]), ws); },
      {Tensor::zeros({3, 5})});
  run("layernorm", [&](const std::vector<Tensor>& in) { return weighted_sum(layernorm(in[0]), ws); },
      {Tensor::zeros({3, 5})});
  run("conv2d",
      [&](const std::vector<Tensor>& in) { return weighted_sum(conv2d(in[0], in[1], in[2], 2, 1), ws); },
      {Tensor::zeros({4, 4, 3}), Tensor::zeros({3, 3, 3, 2}), Tensor::zeros({2})});
  run("conv1d",
      [&](const std::vector<Tensor>& in) { return weighted_sum(conv1d(in[0], in[1], in[2], 2, 1), ws); },
      {Tensor::zeros({6, 2}), Tensor::zeros({3, 2, 4}), Tensor::zeros({4})});
  run("attention",
      [&](const std::vector<Tensor>& in) {
        return weighted_sum(attention(in[0], in[1], in[2], in[3], in[4], in[5]), ws);
      },
      {Tensor::zeros({3, 4}), Tensor::zeros({5, 4}), Tensor::zeros({5, 4}), Tensor::zeros({4, 4}),
       Tensor::zeros({4, 4}), Tensor::zeros({4, 4})});
  run("mlp",
      [&](const std::vector<Tensor>& in) {
        MlpParams p{{in[1], in[2]}, {in[3], in[4]}};
        return weighted_sum(mlp(in[0], p), ws);
      },
      {Tensor::zeros({4}), Tensor::zeros({4, 8}), Tensor::zeros({8}), Tensor::zeros({8, 3}), Tensor::zeros({3})});
  run("bce", [&](const std::vector<Tensor>& in) { return bce_loss(sigmoid(mean_all(in[0])), 1); },
      {Tensor::zeros({4})});
  return out;
}

}  // namespace doctor
