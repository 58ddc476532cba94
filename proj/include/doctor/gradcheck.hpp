#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "doctor/tensor.hpp"

namespace doctor {

// Central finite-difference check of reverse-mode gradients.
//
// f maps the given leaf inputs to a scalar tensor and must be a pure function
// of their values (re-seed any internal randomness per call). For each
// checked coordinate the relative error is |ad - fd| / max(1, |ad|, |fd|).
struct GradCheckReport {
  double max_rel_err = 0.0;
  long coords_checked = 0;
};

GradCheckReport gradcheck(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                          std::vector<Tensor> inputs, double h = 1e-5,
                          long max_coords_per_input = -1, std::uint64_t subsample_seed = 0);

// Named finite-difference sweeps over every differentiable operation plus
// composite blocks (attention, layernorm, convolutions, mlp). Used by the
// gradcheck CLI command and the acceptance suite.
struct OpCheck {
  std::string name;
  double max_rel_err;
};

std::vector<OpCheck> gradcheck_op_suite(std::uint64_t seed);

}  // namespace doctor
