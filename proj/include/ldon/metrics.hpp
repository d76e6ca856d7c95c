#pragma once

#include <span>

#include "ldon/linalg.hpp"

namespace ldon {

/// Mean over every sample and coordinate of (prediction - reference)^2.
double evaluate_mse(const Matrix& predictions, const Matrix& references);
double evaluate_mse(std::span<const double> predictions, std::span<const double> references);

}  // namespace ldon
