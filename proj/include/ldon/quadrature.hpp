#pragma once

#include <functional>
#include <vector>

namespace ldon {

struct GaussRule {
  std::vector<double> nodes;    ///< on [-1, 1], ascending
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, 2 <= n <= 64 (Newton on P_n).
const GaussRule& gauss_legendre_rule(int n);

/// Integral of f over [a, b] with n nodes; exact for degree <= 2n-1.
double gauss_legendre(const std::function<double(double)>& f, double a, double b, int n);

}  // namespace ldon
