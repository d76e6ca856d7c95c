#pragma once

// Central finite-difference oracle for tape gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ldon/autodiff.hpp"

namespace ldon::testing {

using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

inline double eval_loss(const std::vector<Tensor>& inputs, const LossBuilder& f) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.variable(t));
  return f(tape, vars).value().item();
}

/// Relative error |a - n| / max(|a|, |n|) per element; elements with
/// |a| + |n| < floor are skipped.
inline GradcheckResult gradcheck(const std::vector<Tensor>& inputs, const LossBuilder& f, double h = 1e-5,
                                 double floor = 1e-8) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.variable(t));
  const Var loss = f(tape, vars);
  const Gradients g = tape.backward(loss);

  GradcheckResult r;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = g[vars[k]];
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      auto shifted = [&](double delta) {
        std::vector<Tensor> moved = inputs;
        std::vector<double> v(inputs[k].data().begin(), inputs[k].data().end());
        v[i] += delta;
        moved[k] = Tensor(inputs[k].shape(), std::move(v));
        return eval_loss(moved, f);
      };
      const double numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
      const double a = analytic[i];
      if (std::abs(a) + std::abs(numeric) < floor) {
        ++r.skipped;
        continue;
      }
      const double rel = std::abs(a - numeric) / std::max(std::abs(a), std::abs(numeric));
      r.max_rel_error = std::max(r.max_rel_error, rel);
      ++r.checked;
    }
  }
  return r;
}

}  // namespace ldon::testing
