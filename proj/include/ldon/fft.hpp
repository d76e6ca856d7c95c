#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ldon {

using Complex = std::complex<double>;

enum class FftDirection { forward, inverse };

/// 2-D complex grid, row-major, both extents powers of two.
struct ComplexSpectrum {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Complex> values;

  Complex& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  const Complex& at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

bool is_power_of_two(std::size_t n);

/// Iterative radix-2 transform of one length. Unnormalized in both directions;
/// forward uses exp(-2 pi i k x / n).
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);
  std::size_t size() const { return n_; }
  void transform(Complex* data, FftDirection dir) const;
  /// Transforms data[0], data[step], ... through a contiguous scratch copy.
  void transform_strided(Complex* data, std::size_t step, FftDirection dir, std::vector<Complex>& scratch) const;

 private:
  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<Complex> twiddles_;  // exp(-2 pi i k / n), k < n/2
};

/// Row-then-column 2-D transform, unnormalized.
class Fft2Plan {
 public:
  Fft2Plan(std::size_t rows, std::size_t cols);
  std::size_t rows() const { return rows_.size(); }
  std::size_t cols() const { return cols_.size(); }
  void transform(Complex* data, FftDirection dir) const;

 private:
  FftPlan rows_;  // length = number of rows (column transforms)
  FftPlan cols_;  // length = number of columns (row transforms)
};

/// DFT of a 2-D grid. Forward: X(k) = sum_x f(x) exp(-2 pi i <x,k>);
/// inverse includes the 1/M normalization.
ComplexSpectrum fft2(const ComplexSpectrum& field, FftDirection dir);
ComplexSpectrum fft2(std::span<const double> real_field, std::size_t rows, std::size_t cols, FftDirection dir);

}  // namespace ldon
