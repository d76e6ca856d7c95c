#include "ldon/deeponet.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "ldon/error.hpp"

namespace ldon {

namespace {

constexpr double kBnMomentum = 0.9;
constexpr double kBnEps = 1e-5;

Tensor matrix_tensor(const Matrix& m) {
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                std::vector<double>(m.data(), m.data() + m.size()));
}

Matrix tensor_matrix(const Tensor& t, std::size_t rows) {
  const std::size_t cols = t.size() / rows;
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(t.data().begin(), t.data().end(), m.data());
  return m;
}

Tensor zeta_tensor(std::span<const double> zeta) {
  check_zeta(zeta);
  return Tensor({zeta.size(), 1}, std::vector<double>(zeta.begin(), zeta.end()));
}

// Per-channel statistics of x [B,C,H,W] over batch and space.
void channel_moments(const Tensor& x, std::vector<double>& mean, std::vector<double>& var) {
  const auto& s = x.shape();
  const std::size_t batch = s[0], ch = s[1], hw = s[2] * s[3];
  auto v = x.data();
  mean.assign(ch, 0.0);
  var.assign(ch, 0.0);
  for (std::size_t c = 0; c < ch; ++c) {
    double sum = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double* p = v.data() + (b * ch + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) sum += p[i];
    }
    const double mu = sum / static_cast<double>(batch * hw);
    double sq = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double* p = v.data() + (b * ch + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) sq += (p[i] - mu) * (p[i] - mu);
    }
    mean[c] = mu;
    var[c] = sq / static_cast<double>(batch * hw);
  }
}

}  // namespace

void check_zeta(std::span<const double> zeta) {
  if (zeta.empty()) throw ShapeError("deeponet: empty time coordinate list");
  for (double z : zeta) {
    if (!(z >= 0.0 && z <= 1.0)) {
      throw ShapeError("deeponet: time coordinate " + std::to_string(z) +
                       " outside [0, 1]; the trunk only interpolates in time");
    }
  }
}

DeepOnetConfig latent_deeponet_config(std::size_t d, std::size_t p, std::uint64_t seed,
                                      std::vector<std::string>* warnings) {
  DeepOnetConfig cfg;
  cfg.mode = DeepOnetMode::latent;
  cfg.p = p;
  cfg.output_dim = d;
  cfg.seed = seed;
  if (is_perfect_square(d)) {
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
    cfg.input_rows = cfg.input_cols = side;
  } else {
    cfg.branch = BranchKind::dense;
    cfg.input_rows = 1;
    cfg.input_cols = d;
    if (warnings) {
      warnings->push_back("latent dimension " + std::to_string(d) +
                          " is not a perfect square; using the dense branch instead of the conv branch");
    }
  }
  return cfg;
}

DeepOnetConfig full_deeponet_config(std::size_t nx, std::size_t ny, std::size_t p, std::uint64_t seed) {
  DeepOnetConfig cfg;
  cfg.mode = DeepOnetMode::full;
  cfg.p = p;
  cfg.input_rows = nx;
  cfg.input_cols = ny;
  cfg.output_dim = nx * ny;
  cfg.seed = seed;
  return cfg;
}

DeepOnetModel::DeepOnetModel(DeepOnetConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.p == 0 || cfg_.output_dim == 0 || cfg_.input_dim() == 0) {
    throw ShapeError("deeponet: p, input and output sizes must be positive");
  }
  if (cfg_.trunk_layers == 0) throw ShapeError("deeponet: trunk needs at least one hidden layer");
  CounterRng rng(cfg_.seed, 3);
  const std::size_t branch_out = cfg_.mode == DeepOnetMode::latent ? cfg_.p * cfg_.output_dim : cfg_.p;
  const std::size_t trunk_out = cfg_.mode == DeepOnetMode::latent ? cfg_.p : cfg_.p * cfg_.output_dim;

  if (cfg_.branch == BranchKind::conv) {
    if (cfg_.conv_filters.empty()) throw ShapeError("deeponet: conv branch needs at least one layer");
    std::size_t in_ch = 1;
    for (std::size_t i = 0; i < cfg_.conv_filters.size(); ++i) {
      const std::size_t out_ch = cfg_.conv_filters[i];
      const std::string name = "branch.conv" + std::to_string(i);
      params_.add(name + ".k", glorot_uniform({out_ch, in_ch, 3, 3}, in_ch * 9, out_ch * 9, rng));
      params_.add(name + ".b", Tensor::zeros({out_ch}));
      in_ch = out_ch;
    }
    bn_.resize(cfg_.conv_filters.size());
    add_dense_params(params_, "branch.out", in_ch * cfg_.input_dim(), branch_out, rng);
  } else {
    add_dense_params(params_, "branch.h0", cfg_.input_dim(), cfg_.dense_width, rng);
    add_dense_params(params_, "branch.h1", cfg_.dense_width, cfg_.dense_width, rng);
    add_dense_params(params_, "branch.out", cfg_.dense_width, branch_out, rng);
  }
  std::size_t width = 1;
  for (std::size_t i = 0; i < cfg_.trunk_layers; ++i) {
    add_dense_params(params_, "trunk.h" + std::to_string(i), width, cfg_.trunk_width, rng);
    width = cfg_.trunk_width;
  }
  add_dense_params(params_, "trunk.out", width, trunk_out, rng);
  params_.add("b0", Tensor::scalar(0.0));
}

Var DeepOnetModel::branch(const BoundParams& p, const Var& inputs, std::vector<BatchNormStats>* update) const {
  const std::size_t batch = inputs.shape()[0];
  if (inputs.value().rank() != 2 || inputs.shape()[1] != cfg_.input_dim()) {
    throw ShapeError("deeponet: branch expects inputs [B, " + std::to_string(cfg_.input_dim()) + "], got " +
                     shape_str(inputs.shape()));
  }
  if (cfg_.branch == BranchKind::dense) {
    Var h = sine(dense(inputs, p["branch.h0.w"], p["branch.h0.b"]));
    h = sine(dense(h, p["branch.h1.w"], p["branch.h1.b"]));
    return dense(h, p["branch.out.w"], p["branch.out.b"]);
  }
  Var h = reshape(inputs, {batch, 1, cfg_.input_rows, cfg_.input_cols});
  for (std::size_t i = 0; i < cfg_.conv_filters.size(); ++i) {
    const std::string name = "branch.conv" + std::to_string(i);
    h = sine(conv2d(h, p[name + ".k"], p[name + ".b"]));
    const BatchNormStats* stats = &bn_[i];
    if (update) {
      auto& s = (*update)[i];
      std::vector<double> mean, var;
      channel_moments(h.value(), mean, var);
      if (!s.initialized) {
        s.mean = mean;
        s.var = var;
        s.initialized = true;
      } else {
        for (std::size_t c = 0; c < mean.size(); ++c) {
          s.mean[c] = kBnMomentum * s.mean[c] + (1.0 - kBnMomentum) * mean[c];
          s.var[c] = kBnMomentum * s.var[c] + (1.0 - kBnMomentum) * var[c];
        }
      }
      stats = &s;
    }
    if (stats->initialized) {
      std::vector<double> scale(stats->mean.size()), shift(stats->mean.size());
      for (std::size_t c = 0; c < scale.size(); ++c) {
        scale[c] = 1.0 / std::sqrt(stats->var[c] + kBnEps);
        shift[c] = -stats->mean[c] * scale[c];
      }
      h = channel_affine(h, scale, shift);
    }
  }
  h = reshape(h, {batch, cfg_.conv_filters.back() * cfg_.input_dim()});
  return dense(h, p["branch.out.w"], p["branch.out.b"]);
}

Var DeepOnetModel::trunk(const BoundParams& p, const Var& zeta) const {
  Var h = zeta;
  for (std::size_t i = 0; i < cfg_.trunk_layers; ++i) {
    const std::string name = "trunk.h" + std::to_string(i);
    h = sine(dense(h, p[name + ".w"], p[name + ".b"]));
  }
  return dense(h, p["trunk.out.w"], p["trunk.out.b"]);
}

Var DeepOnetModel::combine(const Var& b, const Var& t, const Var& b0) const {
  const std::size_t batch = b.shape()[0];
  const std::size_t mt = t.shape()[0];
  const std::size_t k = cfg_.output_dim;
  const std::size_t np = cfg_.p;
  Var out;
  if (cfg_.mode == DeepOnetMode::latent) {
    // [B*K, p] x [p, m_t] -> [B, K, m_t] -> [B, m_t, K]
    Var bk = reshape(b, {batch * k, np});
    Var prod = matmul(bk, permute(t, {1, 0}));
    out = permute(reshape(prod, {batch, k, mt}), {0, 2, 1});
  } else {
    // [m_t, p, K] -> [p, m_t*K]; [B, p] x that -> [B, m_t, K]
    Var tk = reshape(permute(reshape(t, {mt, np, k}), {1, 0, 2}), {np, mt * k});
    out = reshape(matmul(b, tk), {batch, mt, k});
  }
  return add(out, b0);
}

Var DeepOnetModel::build(const BoundParams& p, const Var& inputs, const Var& zeta,
                         std::vector<BatchNormStats>* update) const {
  if (zeta.value().rank() != 2 || zeta.shape()[1] != 1) {
    throw ShapeError("deeponet: zeta must be [m_t, 1], got " + shape_str(zeta.shape()));
  }
  check_zeta(zeta.value().data());
  return combine(branch(p, inputs, update), trunk(p, zeta), p["b0"]);
}

Var DeepOnetModel::forward(const BoundParams& p, const Var& inputs, const Var& zeta, bool training) {
  return build(p, inputs, zeta, training ? &bn_ : nullptr);
}

Var DeepOnetModel::forward(const BoundParams& p, const Var& inputs, const Var& zeta) const {
  return build(p, inputs, zeta, nullptr);
}

Matrix DeepOnetModel::predict(const Matrix& inputs, std::span<const double> zeta) const {
  Tape tape;
  BoundParams p(tape, params_);
  Var out = forward(p, tape.constant(matrix_tensor(inputs)), tape.constant(zeta_tensor(zeta)));
  return tensor_matrix(out.value(), static_cast<std::size_t>(inputs.rows()));
}

Matrix DeepOnetModel::branch_outputs(const Matrix& inputs) const {
  Tape tape;
  BoundParams p(tape, params_);
  return tensor_matrix(branch(p, tape.constant(matrix_tensor(inputs)), nullptr).value(),
                       static_cast<std::size_t>(inputs.rows()));
}

Matrix DeepOnetModel::trunk_outputs(std::span<const double> zeta) const {
  Tape tape;
  BoundParams p(tape, params_);
  return tensor_matrix(trunk(p, tape.constant(zeta_tensor(zeta))).value(), zeta.size());
}

TrainLog train_deeponet(DeepOnetModel& model, const OperatorData& data, const TrainOptions& opts) {
  const auto& cfg = model.config();
  const auto n = static_cast<std::size_t>(data.inputs.rows());
  const std::size_t mt = data.zeta.size();
  if (n == 0) throw ShapeError("train_deeponet: no samples");
  if (static_cast<std::size_t>(data.inputs.cols()) != cfg.input_dim()) {
    throw ShapeError("train_deeponet: inputs have width " + std::to_string(data.inputs.cols()) + ", model expects " +
                     std::to_string(cfg.input_dim()));
  }
  if (data.targets.rows() != data.inputs.rows() ||
      static_cast<std::size_t>(data.targets.cols()) != mt * cfg.output_dim) {
    throw ShapeError("train_deeponet: targets must be [N, m_t * " + std::to_string(cfg.output_dim) + "]");
  }
  if (opts.batch_size == 0) throw ShapeError("train_deeponet: batch size must be positive");
  const Tensor zeta = zeta_tensor(data.zeta);

  const auto start = std::chrono::steady_clock::now();
  OptimizerState opt;
  opt.config.learning_rate = opts.learning_rate;
  CounterRng shuffle(opts.seed, 4);
  TrainLog log;
  const auto in_w = static_cast<std::size_t>(data.inputs.cols());
  const auto out_w = static_cast<std::size_t>(data.targets.cols());
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    const auto order = shuffled_indices(n, shuffle);
    double total = 0.0;
    for (std::size_t b0 = 0; b0 < n; b0 += opts.batch_size) {
      const std::size_t b1 = std::min(n, b0 + opts.batch_size);
      std::vector<double> x((b1 - b0) * in_w), y((b1 - b0) * out_w);
      for (std::size_t i = b0; i < b1; ++i) {
        const auto row = static_cast<Eigen::Index>(order[i]);
        std::copy_n(data.inputs.row(row).data(), in_w, x.begin() + static_cast<std::ptrdiff_t>((i - b0) * in_w));
        std::copy_n(data.targets.row(row).data(), out_w, y.begin() + static_cast<std::ptrdiff_t>((i - b0) * out_w));
      }
      const Tensor xt({b1 - b0, in_w}, std::move(x));
      const Tensor yt({b1 - b0, mt, cfg.output_dim}, std::move(y));
      const double loss = train_step(model.params(), opt, [&](Tape& tape, const BoundParams& p) {
        return mse_loss(model.forward(p, tape.constant(xt), tape.constant(zeta), true), tape.constant(yt));
      });
      total += loss * static_cast<double>(b1 - b0);
    }
    log.epoch_loss.push_back(total / static_cast<double>(n));
    if (opts.validate && opts.validate_every > 0 && (epoch + 1) % opts.validate_every == 0) {
      log.validation.emplace_back(epoch + 1, opts.validate());
    }
  }
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

Matrix l_deeponet_predict(const ReducerModel& reducer, const DeepOnetModel& model, const Matrix& raw_inputs,
                          std::span<const double> zeta, const MinMax& input_norm, const MinMax& output_norm) {
  const auto& cfg = model.config();
  if (cfg.mode != DeepOnetMode::latent) throw ShapeError("l_deeponet_predict: model is not in latent mode");
  if (reducer.latent_dim != cfg.output_dim || reducer.latent_dim != cfg.input_dim()) {
    throw ShapeError("l_deeponet_predict: reducer d=" + std::to_string(reducer.latent_dim) +
                     " does not match operator latent width " + std::to_string(cfg.output_dim));
  }
  const Matrix normalized = raw_inputs.unaryExpr([&](double v) { return input_norm.normalize(v); });
  const Matrix latent_out = model.predict(reducer.encode(normalized), zeta);

  const auto batch = latent_out.rows();
  const auto mt = static_cast<Eigen::Index>(zeta.size());
  const auto d = static_cast<Eigen::Index>(cfg.output_dim);
  // Rows of `stacked` are (sample, time) pairs.
  Matrix stacked(batch * mt, d);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index t = 0; t < mt; ++t) stacked.row(b * mt + t) = latent_out.row(b).segment(t * d, d);
  }
  const Matrix decoded = reducer.decode(stacked);
  const auto pts = decoded.cols();
  Matrix out(batch, mt * pts);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index t = 0; t < mt; ++t) {
      out.row(b).segment(t * pts, pts) =
          decoded.row(b * mt + t).unaryExpr([&](double v) { return output_norm.denormalize(v); });
    }
  }
  return out;
}

Tensor l_deeponet_predict(const ReducerModel& reducer, const DeepOnetModel& model, std::span<const double> raw_input,
                          std::size_t nx, std::size_t ny, std::span<const double> zeta, const MinMax& input_norm,
                          const MinMax& output_norm) {
  if (raw_input.size() != nx * ny || reducer.input_dim != nx * ny) {
    throw ShapeError("l_deeponet_predict: field has " + std::to_string(raw_input.size()) + " values, grid is " +
                     std::to_string(nx) + "x" + std::to_string(ny) + ", reducer expects " +
                     std::to_string(reducer.input_dim));
  }
  Matrix row = Eigen::Map<const Matrix>(raw_input.data(), 1, static_cast<Eigen::Index>(raw_input.size()));
  const Matrix out = l_deeponet_predict(reducer, model, row, zeta, input_norm, output_norm);
  return Tensor({zeta.size(), nx, ny}, std::vector<double>(out.data(), out.data() + out.size()));
}

}  // namespace ldon
