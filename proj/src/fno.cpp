#include "ldon/fno.hpp"

#include <array>
#include <chrono>
#include <memory>
#include <string>

#include "ldon/error.hpp"
#include "ldon/fft.hpp"
#include "ldon/random_fields.hpp"

namespace ldon {

std::vector<std::pair<std::size_t, std::size_t>> retained_modes(std::size_t rows, std::size_t cols, std::size_t k_max) {
  if (k_max == 0 || 2 * k_max > rows || 2 * k_max > cols) {
    throw ShapeError("fno: k_max=" + std::to_string(k_max) + " needs 1 <= k_max <= extent/2 for a " +
                     std::to_string(rows) + "x" + std::to_string(cols) + " grid");
  }
  const auto wrap = [](long f, std::size_t n) { return static_cast<std::size_t>((f + static_cast<long>(n)) % static_cast<long>(n)); };
  const long k = static_cast<long>(k_max);
  std::vector<std::pair<std::size_t, std::size_t>> modes;
  modes.reserve(4 * k_max * k_max);
  for (long fx = -k; fx < k; ++fx) {
    for (long fy = -k; fy < k; ++fy) modes.emplace_back(wrap(fx, rows), wrap(fy, cols));
  }
  return modes;
}

Var spectral_conv2d(const Var& x, const Var& weights, std::size_t k_max) {
  const auto& sx = x.shape();
  const auto& sw = weights.shape();
  if (sx.size() != 4 || sw.size() != 4 || sw[0] != 2 || sw[2] != sx[1]) {
    throw ShapeError("spectral_conv2d: incompatible shapes " + shape_str(sx) + " and " + shape_str(sw));
  }
  const std::size_t batch = sx[0], in_ch = sx[1], h = sx[2], w = sx[3], out_ch = sw[3];
  if (!is_power_of_two(h) || !is_power_of_two(w)) {
    throw ShapeError("spectral_conv2d: grid " + std::to_string(h) + "x" + std::to_string(w) + " is not a power of two");
  }
  auto modes = std::make_shared<const std::vector<std::pair<std::size_t, std::size_t>>>(retained_modes(h, w, k_max));
  const std::size_t nk = modes->size();
  if (sw[1] != nk) {
    throw ShapeError("spectral_conv2d: weights hold " + std::to_string(sw[1]) + " modes, k_max=" +
                     std::to_string(k_max) + " retains " + std::to_string(nk));
  }
  const std::size_t hw = h * w;
  auto plan = std::make_shared<const Fft2Plan>(h, w);
  const Tensor wv = weights.value();
  auto weight = [wv, nk, in_ch, out_ch](std::size_t k, std::size_t c, std::size_t o) {
    const std::size_t i = (k * in_ch + c) * out_ch + o;
    return Complex(wv.data()[i], wv.data()[nk * in_ch * out_ch + i]);
  };

  auto spec = std::make_shared<std::vector<Complex>>(batch * in_ch * nk);
  std::vector<Complex> buf(hw);
  auto xv = x.value().data();
  for (std::size_t bc = 0; bc < batch * in_ch; ++bc) {
    for (std::size_t i = 0; i < hw; ++i) buf[i] = xv[bc * hw + i];
    plan->transform(buf.data(), FftDirection::forward);
    for (std::size_t k = 0; k < nk; ++k) (*spec)[bc * nk + k] = buf[(*modes)[k].first * w + (*modes)[k].second];
  }

  std::vector<double> out(batch * out_ch * hw);
  const double inv_m = 1.0 / static_cast<double>(hw);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out_ch; ++o) {
      std::fill(buf.begin(), buf.end(), Complex{});
      for (std::size_t k = 0; k < nk; ++k) {
        Complex acc{};
        for (std::size_t c = 0; c < in_ch; ++c) acc += (*spec)[(b * in_ch + c) * nk + k] * weight(k, c, o);
        buf[(*modes)[k].first * w + (*modes)[k].second] = acc;
      }
      plan->transform(buf.data(), FftDirection::inverse);
      double* dst = out.data() + (b * out_ch + o) * hw;
      for (std::size_t i = 0; i < hw; ++i) dst[i] = buf[i].real() * inv_m;
    }
  }

  std::array<Var, 2> ins{x, weights};
  return x.tape().record(
      OpKind::spectral_conv2d, ins, Tensor({batch, out_ch, h, w}, std::move(out)),
      [=](std::span<const double> g, std::span<double* const> gi) {
        std::vector<Complex> gu(batch * out_ch * nk);
        std::vector<Complex> tmp(hw);
        for (std::size_t bo = 0; bo < batch * out_ch; ++bo) {
          for (std::size_t i = 0; i < hw; ++i) tmp[i] = g[bo * hw + i];
          plan->transform(tmp.data(), FftDirection::forward);
          for (std::size_t k = 0; k < nk; ++k) {
            gu[bo * nk + k] = tmp[(*modes)[k].first * w + (*modes)[k].second] * inv_m;
          }
        }
        if (gi[1]) {
          double* gre = gi[1];
          double* gim = gi[1] + nk * in_ch * out_ch;
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t k = 0; k < nk; ++k) {
              for (std::size_t c = 0; c < in_ch; ++c) {
                const Complex v = std::conj((*spec)[(b * in_ch + c) * nk + k]);
                for (std::size_t o = 0; o < out_ch; ++o) {
                  const Complex d = gu[(b * out_ch + o) * nk + k] * v;
                  const std::size_t i = (k * in_ch + c) * out_ch + o;
                  gre[i] += d.real();
                  gim[i] += d.imag();
                }
              }
            }
          }
        }
        if (gi[0]) {
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t c = 0; c < in_ch; ++c) {
              std::fill(tmp.begin(), tmp.end(), Complex{});
              for (std::size_t k = 0; k < nk; ++k) {
                Complex acc{};
                for (std::size_t o = 0; o < out_ch; ++o) acc += gu[(b * out_ch + o) * nk + k] * std::conj(weight(k, c, o));
                tmp[(*modes)[k].first * w + (*modes)[k].second] = acc;
              }
              plan->transform(tmp.data(), FftDirection::inverse);
              double* dst = gi[0] + (b * in_ch + c) * hw;
              for (std::size_t i = 0; i < hw; ++i) dst[i] += tmp[i].real();
            }
          }
        }
      });
}

FnoModel::FnoModel(FnoConfig cfg, std::size_t nx, std::size_t ny) : cfg_(cfg), nx_(nx), ny_(ny) {
  if (!is_power_of_two(nx) || !is_power_of_two(ny)) {
    throw ShapeError("fno: grid " + std::to_string(nx) + "x" + std::to_string(ny) + " is not a power of two");
  }
  if (cfg_.width == 0 || cfg_.layers == 0) throw ShapeError("fno: width and layer count must be positive");
  const std::size_t nk = retained_modes(nx, ny, cfg_.modes).size();
  const std::size_t c = cfg_.width;

  CounterRng rng(cfg_.seed, 5);
  params_.add("lift.u", glorot_uniform({c, 1, 1, 1}, 3, c, rng));
  params_.add("lift.xy", glorot_uniform({c, 2, 1, 1}, 3, c, rng));
  params_.add("lift.b", Tensor::zeros({c}));
  const double r_scale = 1.0 / static_cast<double>(c * c);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string name = "fourier" + std::to_string(l);
    std::vector<double> r(2 * nk * c * c);
    for (auto& v : r) v = r_scale * rng.uniform();
    params_.add(name + ".r", Tensor({2, nk, c, c}, std::move(r)));
    params_.add(name + ".w", glorot_uniform({c, c, 1, 1}, c, c, rng));
    params_.add(name + ".b", Tensor::zeros({c}));
  }
  params_.add("proj.w", glorot_uniform({1, c, 1, 1}, c, 1, rng));
  params_.add("proj.b", Tensor::zeros({1}));

  std::vector<double> xy(2 * nx * ny);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      xy[ix * ny + iy] = grid_coordinate(ix, nx);
      xy[nx * ny + ix * ny + iy] = grid_coordinate(iy, ny);
    }
  }
  coords_ = Tensor({1, 2, nx, ny}, std::move(xy));
}

Var FnoModel::fourier_layer(const BoundParams& p, std::size_t l, const Var& v) const {
  const std::string name = "fourier" + std::to_string(l);
  Var local = conv2d(v, p[name + ".w"], p[name + ".b"]);
  return activate(add(local, spectral_conv2d(v, p[name + ".r"], cfg_.modes)), cfg_.activation);
}

Var FnoModel::step(const BoundParams& p, const Var& u) const {
  const auto& s = u.shape();
  if (s.size() != 4 || s[1] != 1 || s[2] != nx_ || s[3] != ny_) {
    throw ShapeError("fno: expected input [B,1," + std::to_string(nx_) + "," + std::to_string(ny_) + "], got " +
                     shape_str(s));
  }
  Tape& tape = u.tape();
  Var xy = conv2d(tape.constant(coords_), p["lift.xy"]);
  Var v = add(conv2d(u, p["lift.u"], p["lift.b"]), reshape(xy, {cfg_.width, nx_, ny_}));
  for (std::size_t l = 0; l < cfg_.layers; ++l) v = fourier_layer(p, l, v);
  return conv2d(v, p["proj.w"], p["proj.b"]);
}

Matrix FnoModel::rollout(const Matrix& initial, std::size_t steps) const {
  const auto pts = static_cast<Eigen::Index>(nx_ * ny_);
  if (initial.cols() != pts) throw ShapeError("fno: rollout input width does not match the grid");
  const auto batch = static_cast<std::size_t>(initial.rows());
  Matrix out(initial.rows(), pts * static_cast<Eigen::Index>(steps));
  std::vector<double> u(initial.data(), initial.data() + initial.size());
  for (std::size_t t = 0; t < steps; ++t) {
    Tape tape;
    BoundParams p(tape, params_);
    Var next = step(p, tape.constant(Tensor({batch, 1, nx_, ny_}, std::move(u))));
    auto v = next.value().data();
    u.assign(v.begin(), v.end());
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(v.data() + b * nx_ * ny_, nx_ * ny_, out.row(static_cast<Eigen::Index>(b)).data() + t * nx_ * ny_);
    }
  }
  return out;
}

TrainLog train_fno(FnoModel& model, const Matrix& initial, const Matrix& trajectories, const TrainOptions& opts) {
  const std::size_t pts = model.nx() * model.ny();
  const auto n = static_cast<std::size_t>(initial.rows());
  if (n == 0 || static_cast<std::size_t>(initial.cols()) != pts || trajectories.rows() != initial.rows() ||
      trajectories.cols() == 0 || static_cast<std::size_t>(trajectories.cols()) % pts != 0) {
    throw ShapeError("train_fno: initial [N, nx*ny] and trajectories [N, m_t*nx*ny] required");
  }
  if (opts.batch_size == 0) throw ShapeError("train_fno: batch size must be positive");
  const std::size_t mt = static_cast<std::size_t>(trajectories.cols()) / pts;
  const auto frame = [&](std::size_t j, std::size_t k) -> const double* {
    return k == 0 ? initial.row(static_cast<Eigen::Index>(j)).data()
                  : trajectories.row(static_cast<Eigen::Index>(j)).data() + (k - 1) * pts;
  };

  const auto start = std::chrono::steady_clock::now();
  OptimizerState opt;
  opt.config.learning_rate = opts.learning_rate;
  CounterRng shuffle(opts.seed, 6);
  TrainLog log;
  const std::size_t pairs = n * mt;
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    const auto order = shuffled_indices(pairs, shuffle);
    double total = 0.0;
    for (std::size_t b0 = 0; b0 < pairs; b0 += opts.batch_size) {
      const std::size_t b1 = std::min(pairs, b0 + opts.batch_size);
      std::vector<double> x((b1 - b0) * pts), y((b1 - b0) * pts);
      for (std::size_t i = b0; i < b1; ++i) {
        const std::size_t j = order[i] / mt, k = order[i] % mt;
        std::copy_n(frame(j, k), pts, x.begin() + static_cast<std::ptrdiff_t>((i - b0) * pts));
        std::copy_n(frame(j, k + 1), pts, y.begin() + static_cast<std::ptrdiff_t>((i - b0) * pts));
      }
      const Tensor xt({b1 - b0, 1, model.nx(), model.ny()}, std::move(x));
      const Tensor yt({b1 - b0, 1, model.nx(), model.ny()}, std::move(y));
      const double loss = train_step(model.params(), opt, [&](Tape& tape, const BoundParams& p) {
        return mse_loss(model.step(p, tape.constant(xt)), tape.constant(yt));
      });
      total += loss * static_cast<double>(b1 - b0);
    }
    log.epoch_loss.push_back(total / static_cast<double>(pairs));
    if (opts.validate && opts.validate_every > 0 && (epoch + 1) % opts.validate_every == 0) {
      log.validation.emplace_back(epoch + 1, opts.validate());
    }
  }
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

}  // namespace ldon
