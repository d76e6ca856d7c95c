#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ldon/tensor.hpp"

namespace ldon {

struct Parameter {
  std::string name;
  Tensor value;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment state: one first/second moment buffer per parameter name.
struct OptimizerState {
  AdamConfig config;
  std::int64_t step = 0;
  std::map<std::string, std::vector<double>> first_moment;
  std::map<std::string, std::vector<double>> second_moment;
};

using GradientMap = std::map<std::string, Tensor>;

/// One bias-corrected adaptive-moment update of every parameter in place.
/// Throws ShapeError naming the parameter when its gradient is missing or
/// mis-shaped.
void optimizer_step(std::vector<Parameter>& params, const GradientMap& grads, OptimizerState& state);

}  // namespace ldon
