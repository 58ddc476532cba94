#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "doctor/tensor.hpp"

namespace doctor {

// Named, lexicographically ordered set of learnable tensors.
class ParamSet {
 public:
  Tensor& add(const std::string& name, Tensor t);
  bool has(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  const std::map<std::string, Tensor>& items() const { return params_; }
  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }
  long total_values() const;

  void zero_grads();
  void sgd_step(double lr);

  // Deep copy with requires_grad cleared (teacher-side snapshots).
  ParamSet clone_detached() const;

 private:
  std::map<std::string, Tensor> params_;
};

// Uniform(-s, s) leaf with its own rng stream derived from (seed, name), so a
// parameter's initial values do not depend on which other parameters exist.
Tensor init_uniform(Shape shape, double s, std::uint64_t seed, const std::string& name);

// s = 1/sqrt(fan_in), bias zero.
Tensor init_linear_weight(int fan_in, int fan_out, std::uint64_t seed, const std::string& name);

}  // namespace doctor
