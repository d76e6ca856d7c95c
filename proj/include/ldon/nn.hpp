#pragma once

// Small building blocks shared by the autoencoder and operator networks.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ldon/autodiff.hpp"
#include "ldon/optim.hpp"
#include "ldon/rng.hpp"

namespace ldon {

/// Ordered, uniquely named parameter set.
class ParamStore {
 public:
  void add(std::string name, Tensor value);
  const Tensor& get(const std::string& name) const;
  void set(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }
  /// Total number of scalar weights.
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

/// Glorot-uniform: U[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))].
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, CounterRng& rng);

/// Every parameter of a store registered as a tape variable.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParamStore& store);
  const Var& operator[](const std::string& name) const;
  GradientMap gradients(const Gradients& grads) const;

 private:
  std::map<std::string, Var> vars_;
};

enum class Activation { identity, relu, sigmoid, sine };

Var activate(const Var& x, Activation act);

/// x [B,in] * w [in,out] + b [out]
Var dense(const Var& x, const Var& w, const Var& b);

/// Registers `<prefix>.w` (Glorot) and `<prefix>.b` (zeros).
void add_dense_params(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, CounterRng& rng);

/// One optimizer update: build the loss on a fresh tape, backpropagate,
/// apply Adam. Returns the loss value. Throws NumericError on a NaN loss.
double train_step(ParamStore& store, OptimizerState& state,
                  const std::function<Var(Tape&, const BoundParams&)>& loss_fn);

/// Mean squared difference, shape [].
Var mse_loss(const Var& prediction, const Var& target);

}  // namespace ldon
