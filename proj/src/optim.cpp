#include "ldon/optim.hpp"

#include <cmath>

#include "ldon/error.hpp"

namespace ldon {

void optimizer_step(std::vector<Parameter>& params, const GradientMap& grads, OptimizerState& state) {
  for (const auto& p : params) {
    auto it = grads.find(p.name);
    if (it == grads.end()) throw ShapeError("optimizer_step: missing gradient for parameter '" + p.name + "'");
    if (it->second.shape() != p.value.shape()) {
      throw ShapeError("optimizer_step: gradient for '" + p.name + "' has shape " + shape_str(it->second.shape()) +
                       ", parameter has " + shape_str(p.value.shape()));
    }
    auto m = state.first_moment.find(p.name);
    if (m != state.first_moment.end() && m->second.size() != p.value.size()) {
      throw ShapeError("optimizer_step: moment buffer for '" + p.name + "' does not match its parameter");
    }
  }

  const auto& c = state.config;
  const std::int64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  for (auto& p : params) {
    const auto g = grads.at(p.name).data();
    auto& m = state.first_moment[p.name];
    auto& v = state.second_moment[p.name];
    if (m.empty()) {
      m.assign(p.value.size(), 0.0);
      v.assign(p.value.size(), 0.0);
    }
    auto x = p.value.data();
    std::vector<double> updated(x.begin(), x.end());
    for (std::size_t i = 0; i < updated.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      updated[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
    p.value = Tensor(p.value.shape(), std::move(updated));
  }
  state.step = t;
}

}  // namespace ldon
