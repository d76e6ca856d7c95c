#include "ldon/fft.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ldon/error.hpp"

namespace ldon {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

FftPlan::FftPlan(std::size_t n) : n_(n), bitrev_(n), twiddles_(n / 2) {
  if (!is_power_of_two(n)) throw ShapeError("fft: length " + std::to_string(n) + " is not a power of two");
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
    bitrev_[i] = r;
  }
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddles_[k] = Complex(std::cos(angle), std::sin(angle));
  }
}

void FftPlan::transform(Complex* data, FftDirection dir) const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  }
  const bool inverse = dir == FftDirection::inverse;
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t tw_step = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        Complex w = twiddles_[j * tw_step];
        if (inverse) w = std::conj(w);
        const Complex u = data[start + j];
        const Complex v = data[start + j + half] * w;
        data[start + j] = u + v;
        data[start + j + half] = u - v;
      }
    }
  }
}

void FftPlan::transform_strided(Complex* data, std::size_t step, FftDirection dir, std::vector<Complex>& scratch) const {
  scratch.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) scratch[i] = data[i * step];
  transform(scratch.data(), dir);
  for (std::size_t i = 0; i < n_; ++i) data[i * step] = scratch[i];
}

Fft2Plan::Fft2Plan(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

void Fft2Plan::transform(Complex* data, FftDirection dir) const {
  const std::size_t nr = rows_.size();
  const std::size_t nc = cols_.size();
  for (std::size_t r = 0; r < nr; ++r) cols_.transform(data + r * nc, dir);
  std::vector<Complex> scratch;
  for (std::size_t c = 0; c < nc; ++c) rows_.transform_strided(data + c, nc, dir, scratch);
}

ComplexSpectrum fft2(const ComplexSpectrum& field, FftDirection dir) {
  if (field.rows < 2 || field.cols < 2 || !is_power_of_two(field.rows) || !is_power_of_two(field.cols)) {
    throw ShapeError("fft2: extents must be powers of two >= 2, got " + std::to_string(field.rows) + "x" +
                     std::to_string(field.cols));
  }
  if (field.values.size() != field.rows * field.cols) throw ShapeError("fft2: value count does not match extents");
  ComplexSpectrum out = field;
  Fft2Plan(field.rows, field.cols).transform(out.values.data(), dir);
  if (dir == FftDirection::inverse) {
    const double inv = 1.0 / static_cast<double>(out.values.size());
    for (auto& v : out.values) v *= inv;
  }
  return out;
}

ComplexSpectrum fft2(std::span<const double> real_field, std::size_t rows, std::size_t cols, FftDirection dir) {
  if (real_field.size() != rows * cols) throw ShapeError("fft2: value count does not match extents");
  ComplexSpectrum f{rows, cols, std::vector<Complex>(real_field.begin(), real_field.end())};
  return fft2(f, dir);
}

}  // namespace ldon
