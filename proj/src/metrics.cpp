#include "ldon/metrics.hpp"

#include <string>

#include "ldon/error.hpp"

namespace ldon {

double evaluate_mse(const Matrix& predictions, const Matrix& references) {
  if (predictions.rows() != references.rows() || predictions.cols() != references.cols()) {
    throw ShapeError("evaluate_mse: prediction is " + std::to_string(predictions.rows()) + "x" +
                     std::to_string(predictions.cols()) + ", reference is " + std::to_string(references.rows()) + "x" +
                     std::to_string(references.cols()));
  }
  if (predictions.size() == 0) throw ShapeError("evaluate_mse: empty input");
  return (predictions - references).squaredNorm() / static_cast<double>(predictions.size());
}

double evaluate_mse(std::span<const double> predictions, std::span<const double> references) {
  if (predictions.size() != references.size()) {
    throw ShapeError("evaluate_mse: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(references.size()) + " references");
  }
  if (predictions.empty()) throw ShapeError("evaluate_mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - references[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

}  // namespace ldon
