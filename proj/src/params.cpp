#include "doctor/params.hpp"

#include <cmath>
#include <stdexcept>

#include "doctor/rng.hpp"

namespace doctor {

Tensor& ParamSet::add(const std::string& name, Tensor t) {
  if (!t.defined()) throw std::invalid_argument("ParamSet::add: undefined tensor for " + name);
  auto [it, inserted] = params_.emplace(name, std::move(t));
  if (!inserted) throw std::invalid_argument("ParamSet::add: duplicate name " + name);
  return it->second;
}

bool ParamSet::has(const std::string& name) const { return params_.count(name) != 0; }

Tensor& ParamSet::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("ParamSet: unknown parameter " + name);
  return it->second;
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("ParamSet: unknown parameter " + name);
  return it->second;
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [k, v] : params_) out.push_back(k);
  return out;
}

long ParamSet::total_values() const {
  long n = 0;
  for (const auto& [k, v] : params_) n += v.size();
  return n;
}

void ParamSet::zero_grads() {
  for (auto& [k, v] : params_) v.zero_grad();
}

void ParamSet::sgd_step(double lr) {
  for (auto& [k, v] : params_) {
    if (!v.has_grad()) continue;
    auto& data = v.leaf_data();
    const auto& g = v.grad();
    for (std::size_t i = 0; i < data.size(); ++i) data[i] -= lr * g[i];
  }
}

ParamSet ParamSet::clone_detached() const {
  ParamSet out;
  for (const auto& [k, v] : params_) {
    out.add(k, Tensor::of(v.shape(), v.data(), false));
  }
  return out;
}

Tensor init_uniform(Shape shape, double s, std::uint64_t seed, const std::string& name) {
  Rng rng(derive_seed(seed, name));
  long n = 1;
  for (int d : shape) n *= d;
  std::vector<double> data(static_cast<std::size_t>(n));
  for (auto& x : data) x = rng.uniform(-s, s);
  return Tensor::of(std::move(shape), std::move(data), true);
}

Tensor init_linear_weight(int fan_in, int fan_out, std::uint64_t seed, const std::string& name) {
  return init_uniform({fan_in, fan_out}, 1.0 / std::sqrt(static_cast<double>(fan_in)), seed, name);
}

}  // namespace doctor
