#include "ldon/dimred.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ldon/error.hpp"

namespace ldon {

bool is_perfect_square(std::size_t n) {
  const auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  return r * r == n;
}

SnapshotSet assemble_snapshots(const FieldDataset& ds, SnapshotMode mode) {
  ds.validate();
  const auto n = static_cast<Eigen::Index>(ds.n_train);
  const auto pts = static_cast<Eigen::Index>(ds.points());
  const auto mt = static_cast<Eigen::Index>(ds.m_t);
  const bool with_inputs = mode != SnapshotMode::outputs_only;
  const bool with_outputs = mode != SnapshotMode::inputs_only;

  SnapshotSet s;
  s.nx = ds.nx;
  s.ny = ds.ny;
  s.rows.resize((with_inputs ? n : 0) + (with_outputs ? n * mt : 0), pts);
  Eigen::Index r = 0;
  if (with_inputs) {
    for (Eigen::Index j = 0; j < n; ++j, ++r) {
      s.rows.row(r) = ds.inputs.row(j).unaryExpr([&](double v) { return ds.input_norm.normalize(v); });
    }
  }
  if (with_outputs) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < mt; ++k, ++r) {
        s.rows.row(r) =
            ds.outputs.row(j).segment(k * pts, pts).unaryExpr([&](double v) { return ds.output_norm.normalize(v); });
      }
    }
  }
  return s;
}

std::vector<std::size_t> default_mlae_widths(std::size_t input_dim, std::size_t latent_dim) {
  std::vector<std::size_t> w{input_dim};
  const double ratio = static_cast<double>(latent_dim) / static_cast<double>(input_dim);
  for (int k = 1; k <= 3; ++k) {
    const double width = static_cast<double>(input_dim) * std::pow(ratio, k / 4.0);
    w.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(width))));
  }
  w.push_back(latent_dim);
  return w;
}

namespace {

Tensor rows_tensor(const Matrix& m) {
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                std::vector<double>(m.data(), m.data() + m.size()));
}

Tensor gather_rows(const Matrix& m, const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
  const auto cols = static_cast<std::size_t>(m.cols());
  std::vector<double> v((end - begin) * cols);
  for (std::size_t i = begin; i < end; ++i) {
    const double* src = m.row(static_cast<Eigen::Index>(order[i])).data();
    std::copy(src, src + cols, v.begin() + static_cast<std::ptrdiff_t>((i - begin) * cols));
  }
  return Tensor({end - begin, cols}, std::move(v));
}

Matrix to_matrix(const Tensor& t) {
  Matrix m(static_cast<Eigen::Index>(t.extent(0)), static_cast<Eigen::Index>(t.extent(1)));
  std::copy(t.data().begin(), t.data().end(), m.data());
  return m;
}

std::string layer_name(std::size_t i) { return "ae" + std::to_string(i); }

}  // namespace

Var ReducerModel::mlae_encode(const BoundParams& p, const Var& x) const {
  Var h = x;
  const std::size_t half = widths.size() - 1;
  for (std::size_t i = 0; i < half; ++i) {
    h = relu(dense(h, p[layer_name(i) + ".w"], p[layer_name(i) + ".b"]));
  }
  return h;
}

Var ReducerModel::mlae_decode(const BoundParams& p, const Var& z) const {
  Var h = z;
  const std::size_t half = widths.size() - 1;
  for (std::size_t i = half; i < 2 * half; ++i) {
    h = dense(h, p[layer_name(i) + ".w"], p[layer_name(i) + ".b"]);
    h = (i + 1 == 2 * half) ? sigmoid(h) : relu(h);
  }
  return h;
}

Var ReducerModel::mlae_forward(const BoundParams& p, const Var& x) const { return mlae_decode(p, mlae_encode(p, x)); }

Matrix ReducerModel::encode(const Matrix& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != input_dim) {
    throw ShapeError("encode: rows have width " + std::to_string(rows.cols()) + ", reducer expects " +
                     std::to_string(input_dim));
  }
  if (kind == ReducerKind::pca) {
    return (rows.rowwise() - mean.transpose()) * basis;
  }
  Tape tape;
  BoundParams p(tape, params);
  return to_matrix(mlae_encode(p, tape.constant(rows_tensor(rows))).value());
}

Matrix ReducerModel::decode(const Matrix& latents) const {
  if (static_cast<std::size_t>(latents.cols()) != latent_dim) {
    throw ShapeError("decode: latent width " + std::to_string(latents.cols()) + " != d = " + std::to_string(latent_dim));
  }
  if (kind == ReducerKind::pca) {
    return (latents * basis.transpose()).rowwise() + mean.transpose();
  }
  Tape tape;
  BoundParams p(tape, params);
  return to_matrix(mlae_decode(p, tape.constant(rows_tensor(latents))).value());
}

ReducerModel fit_mlae(const SnapshotSet& snaps, const MlaeConfig& cfg) {
  const auto& z = snaps.rows;
  const auto dim = static_cast<std::size_t>(z.cols());
  if (z.rows() == 0) throw ShapeError("fit_mlae: empty snapshot set");
  if (cfg.latent_dim == 0 || cfg.latent_dim >= dim) {
    throw ShapeError("fit_mlae: latent dim " + std::to_string(cfg.latent_dim) + " must be in [1, " +
                     std::to_string(dim) + ")");
  }
  if (z.minCoeff() < -1e-12 || z.maxCoeff() > 1.0 + 1e-12) {
    throw ShapeError("fit_mlae: snapshots must be normalized to [0, 1] (sigmoid output range), got [" +
                     std::to_string(z.minCoeff()) + ", " + std::to_string(z.maxCoeff()) + "]");
  }
  if (cfg.batch_size == 0) throw ShapeError("fit_mlae: batch size must be positive");

  ReducerModel m;
  m.kind = ReducerKind::mlae;
  m.input_dim = dim;
  m.latent_dim = cfg.latent_dim;
  m.widths = cfg.widths.empty() ? default_mlae_widths(dim, cfg.latent_dim) : cfg.widths;
  if (m.widths.size() < 2 || m.widths.front() != dim || m.widths.back() != cfg.latent_dim) {
    throw ShapeError("fit_mlae: width list must start at the snapshot dim and end at d");
  }
  CounterRng init(cfg.seed, 1);
  const std::size_t half = m.widths.size() - 1;
  for (std::size_t i = 0; i < half; ++i) add_dense_params(m.params, layer_name(i), m.widths[i], m.widths[i + 1], init);
  for (std::size_t i = 0; i < half; ++i) {
    add_dense_params(m.params, layer_name(half + i), m.widths[half - i], m.widths[half - i - 1], init);
  }

  OptimizerState opt;
  opt.config.learning_rate = cfg.learning_rate;
  CounterRng shuffle(cfg.seed, 2);
  const auto rows = static_cast<std::size_t>(z.rows());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(rows, shuffle);
    double total = 0.0;
    for (std::size_t start = 0; start < rows; start += cfg.batch_size) {
      const std::size_t end = std::min(rows, start + cfg.batch_size);
      const Tensor batch = gather_rows(z, order, start, end);
      const double loss = train_step(m.params, opt, [&](Tape& tape, const BoundParams& p) {
        Var x = tape.constant(batch);
        return mse_loss(m.mlae_forward(p, x), x);
      });
      total += loss * static_cast<double>(end - start);
    }
    m.training_log.push_back(total / static_cast<double>(rows));
  }
  return m;
}

ReducerModel fit_pca(const SnapshotSet& snaps, std::size_t latent_dim) {
  const auto& z = snaps.rows;
  const auto limit = static_cast<std::size_t>(std::min(z.rows(), z.cols()));
  if (latent_dim == 0 || latent_dim > limit) {
    throw ShapeError("fit_pca: d=" + std::to_string(latent_dim) + " outside [1, " + std::to_string(limit) + "]");
  }
  ReducerModel m;
  m.kind = ReducerKind::pca;
  m.input_dim = static_cast<std::size_t>(z.cols());
  m.latent_dim = latent_dim;
  m.mean = z.colwise().mean().transpose();
  const Matrix centered = z.rowwise() - m.mean.transpose();
  m.basis = truncated_svd(centered, latent_dim).v;
  return m;
}

double reconstruction_mse(const ReducerModel& model, const Matrix& rows) {
  const Matrix diff = rows - model.reconstruct(rows);
  return diff.squaredNorm() / static_cast<double>(diff.size());
}

}  // namespace ldon
