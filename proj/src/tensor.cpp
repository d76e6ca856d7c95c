#include "ldon/tensor.hpp"

#include <cmath>
#include <numeric>

#include "ldon/error.hpp"

namespace ldon {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.size() > Tensor::kMaxRank) {
    throw ShapeError("tensor rank " + std::to_string(shape.size()) + " exceeds 4: " + shape_str(shape));
  }
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be >= 1: " + shape_str(shape));
  }
}

}  // namespace

Tensor::Tensor() : data_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)) {
  validate_shape(shape_);
  if (shape_size(shape_) != data.size()) {
    throw ShapeError("tensor shape " + shape_str(shape_) + " needs " + std::to_string(shape_size(shape_)) +
                     " values, got " + std::to_string(data.size()));
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const auto n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape_));
  return (*data_)[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  validate_shape(shape);
  if (shape_size(shape) != size()) {
    throw ShapeError("reshape " + shape_str(shape_) + " -> " + shape_str(shape) + " changes element count");
  }
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : *data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace ldon
