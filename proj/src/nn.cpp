#include "ldon/nn.hpp"

#include <cmath>

#include "ldon/error.hpp"

namespace ldon {

void ParamStore::add(std::string name, Tensor value) {
  if (index_.count(name)) throw ShapeError("duplicate parameter name '" + name + "'");
  index_.emplace(name, params_.size());
  params_.push_back(Parameter{std::move(name), std::move(value)});
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return params_[it->second].value;
}

void ParamStore::set(const std::string& name, Tensor value) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("unknown parameter '" + name + "'");
  auto& p = params_[it->second];
  if (p.value.shape() != value.shape()) {
    throw ShapeError("parameter '" + name + "' expects shape " + shape_str(p.value.shape()) + ", got " +
                     shape_str(value.shape()));
  }
  p.value = std::move(value);
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, CounterRng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = rng.uniform(-limit, limit);
  return Tensor(std::move(shape), std::move(v));
}

BoundParams::BoundParams(Tape& tape, const ParamStore& store) {
  for (const auto& p : store.params()) vars_.emplace(p.name, tape.variable(p.value));
}

const Var& BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ShapeError("parameter '" + name + "' is not bound");
  return it->second;
}

GradientMap BoundParams::gradients(const Gradients& grads) const {
  GradientMap out;
  for (const auto& [name, var] : vars_) out.emplace(name, grads[var]);
  return out;
}

Var activate(const Var& x, Activation act) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return relu(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::sine: return sine(x);
  }
  return x;
}

Var dense(const Var& x, const Var& w, const Var& b) { return add(matmul(x, w), b); }

void add_dense_params(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, CounterRng& rng) {
  store.add(prefix + ".w", glorot_uniform({in, out}, in, out, rng));
  store.add(prefix + ".b", Tensor::zeros({out}));
}

double train_step(ParamStore& store, OptimizerState& state,
                  const std::function<Var(Tape&, const BoundParams&)>& loss_fn) {
  Tape tape;
  BoundParams bound(tape, store);
  Var loss = loss_fn(tape, bound);
  const double value = loss.value().item();
  if (!std::isfinite(value)) throw NumericError("training loss is not finite");
  auto grads = bound.gradients(tape.backward(loss));
  optimizer_step(store.params(), grads, state);
  return value;
}

Var mse_loss(const Var& prediction, const Var& target) {
  Var diff = sub(prediction, target);
  return reduce_mean(mul(diff, diff));
}

}  // namespace ldon
