#include "ldon/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ldon/error.hpp"

namespace ldon {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::matmul: return "matmul";
    case OpKind::conv2d: return "conv2d";
    case OpKind::reshape: return "reshape";
    case OpKind::reduce_mean: return "reduce_mean";
    case OpKind::relu: return "relu";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::sine: return "sine";
    case OpKind::permute: return "permute";
    case OpKind::channel_affine: return "channel_affine";
    case OpKind::spectral_conv2d: return "spectral_conv2d";
  }
  return "?";
}

const Tensor& Var::value() const { return tape().value(id_); }

Tape& Var::tape() const {
  if (!tape_) throw ShapeError("use of an unbound Var");
  return *tape_;
}

Tensor Gradients::at(std::size_t node) const {
  if (node >= shapes_.size()) throw ShapeError("gradient requested for unknown node " + std::to_string(node));
  if (grads_[node].empty()) return Tensor::zeros(shapes_[node]);
  return Tensor(shapes_[node], grads_[node]);
}

Var Tape::push_leaf(Tensor value, bool requires_grad) {
  if (!value.all_finite()) throw NumericError("leaf: non-finite input of shape " + shape_str(value.shape()));
  nodes_.push_back(Node{OpKind::leaf, {}, std::move(value), nullptr, requires_grad});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) { return push_leaf(std::move(value), true); }
Var Tape::constant(Tensor value) { return push_leaf(std::move(value), false); }

Var Tape::record(OpKind kind, std::span<const Var> inputs, Tensor value, Backward backward) {
  std::vector<std::size_t> ids;
  bool needs = false;
  for (const auto& v : inputs) {
    if (&v.tape() != this) throw ShapeError(std::string(op_name(kind)) + ": input belongs to a different tape");
    ids.push_back(v.id());
    needs = needs || nodes_[v.id()].requires_grad;
  }
  if (!value.all_finite()) {
    throw NumericError(std::string(op_name(kind)) + ": non-finite value produced from input shapes " +
                       (inputs.empty() ? std::string("[]") : shape_str(inputs.front().shape())));
  }
  nodes_.push_back(Node{kind, std::move(ids), std::move(value), std::move(backward), needs});
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(const Var& loss) const {
  if (&loss.tape() != this) throw ShapeError("backward: loss belongs to a different tape");
  if (nodes_.empty()) throw ShapeError("backward: empty tape");
  if (loss.value().rank() != 0) {
    throw ShapeError("backward: loss must be a scalar of shape [], got " + shape_str(loss.shape()));
  }
  Gradients g;
  g.shapes_.reserve(nodes_.size());
  for (const auto& n : nodes_) g.shapes_.push_back(n.value.shape());
  g.grads_.resize(nodes_.size());
  g.grads_[loss.id()] = {1.0};

  std::vector<double*> in_ptrs;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (g.grads_[i].empty() || n.kind == OpKind::leaf || !n.requires_grad) continue;
    in_ptrs.clear();
    for (auto in : n.inputs) {
      if (!nodes_[in].requires_grad) {
        in_ptrs.push_back(nullptr);
        continue;
      }
      auto& buf = g.grads_[in];
      if (buf.empty()) buf.assign(nodes_[in].value.size(), 0.0);
      in_ptrs.push_back(buf.data());
    }
    n.backward(g.grads_[i], in_ptrs);
  }
  return g;
}

namespace {

// out += a * b with every element summed over k in ascending order, so a row
// (or column) of the product does not depend on which other rows and columns
// share the call. Blocked GEMM libraries do not give that guarantee.
void ordered_product(const double* a, const double* b, double* out, std::size_t m, std::size_t k, std::size_t n) {
  constexpr std::size_t kDepth = 128, kRows = 8;
  for (std::size_t k0 = 0; k0 < k; k0 += kDepth) {
    const std::size_t k1 = std::min(k, k0 + kDepth);
    for (std::size_t i0 = 0; i0 < m; i0 += kRows) {
      for (std::size_t i = i0; i < std::min(m, i0 + kRows); ++i) {
        double* o = out + i * n;
        for (std::size_t kk = k0; kk < k1; ++kk) {
          const double s = a[i * k + kk];
          const double* br = b + kk * n;
          for (std::size_t j = 0; j < n; ++j) o[j] += s * br[j];
        }
      }
    }
  }
}

[[noreturn]] void shape_mismatch(OpKind kind, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op_name(kind)) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

enum class Binary { add, sub, mul };

Var binary(OpKind kind, Binary op, const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const Shape* out_shape = nullptr;
  if (is_suffix(sb, sa)) {
    out_shape = &sa;
  } else if (is_suffix(sa, sb)) {
    out_shape = &sb;
  } else {
    shape_mismatch(kind, sa, sb);
  }
  const auto n = shape_size(*out_shape);
  const auto na = a.value().size();
  const auto nb = b.value().size();
  auto da = a.value().data();
  auto db = b.value().data();
  std::vector<double> out(n);
  switch (op) {
    case Binary::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = da[i % na] + db[i % nb];
      break;
    case Binary::sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = da[i % na] - db[i % nb];
      break;
    case Binary::mul:
      for (std::size_t i = 0; i < n; ++i) out[i] = da[i % na] * db[i % nb];
      break;
  }
  Tensor av = a.value();
  Tensor bv = b.value();
  std::array<Var, 2> ins{a, b};
  return a.tape().record(kind, ins, Tensor(*out_shape, std::move(out)),
                         [op, av, bv, n, na, nb](std::span<const double> g, std::span<double* const> gi) {
                           auto xa = av.data();
                           auto xb = bv.data();
                           if (gi[0]) {
                             if (op == Binary::mul) {
                               for (std::size_t i = 0; i < n; ++i) gi[0][i % na] += g[i] * xb[i % nb];
                             } else {
                               for (std::size_t i = 0; i < n; ++i) gi[0][i % na] += g[i];
                             }
                           }
                           if (gi[1]) {
                             switch (op) {
                               case Binary::add:
                                 for (std::size_t i = 0; i < n; ++i) gi[1][i % nb] += g[i];
                                 break;
                               case Binary::sub:
                                 for (std::size_t i = 0; i < n; ++i) gi[1][i % nb] -= g[i];
                                 break;
                               case Binary::mul:
                                 for (std::size_t i = 0; i < n; ++i) gi[1][i % nb] += g[i] * xa[i % na];
                                 break;
                             }
                           }
                         });
}

template <class F, class D>
Var unary(OpKind kind, const Var& a, F f, D dfdx_from_in_out) {
  auto x = a.value().data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  Tensor in = a.value();
  Tensor result(a.shape(), std::move(out));
  Tensor saved = result;
  std::array<Var, 1> ins{a};
  return a.tape().record(kind, ins, std::move(result),
                         [in, saved, dfdx_from_in_out](std::span<const double> g, std::span<double* const> gi) {
                           if (!gi[0]) return;
                           auto xi = in.data();
                           auto yo = saved.data();
                           for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * dfdx_from_in_out(xi[i], yo[i]);
                         });
}

void require_rank(OpKind kind, const Var& v, std::size_t rank, const char* what) {
  if (v.value().rank() != rank) {
    throw ShapeError(std::string(op_name(kind)) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                     shape_str(v.shape()));
  }
}

struct ConvGeom {
  std::size_t batch, in_ch, h, w, out_ch, kh, kw;
  std::size_t ph() const { return kh / 2; }
  std::size_t pw() const { return kw / 2; }
  std::size_t patch() const { return in_ch * kh * kw; }
  std::size_t hw() const { return h * w; }
};

// cols[(c*kh+ki)*kw+kj, y*w+x] = in[c, y+ki-ph, x+kj-pw], zero outside.
void im2col(const ConvGeom& g, const double* in, double* cols) {
  const auto ph = static_cast<long>(g.ph());
  const auto pw = static_cast<long>(g.pw());
  const long H = static_cast<long>(g.h);
  const long W = static_cast<long>(g.w);
  for (std::size_t c = 0; c < g.in_ch; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        double* row = cols + ((c * g.kh + ki) * g.kw + kj) * g.hw();
        const long dy = static_cast<long>(ki) - ph;
        const long dx = static_cast<long>(kj) - pw;
        for (long y = 0; y < H; ++y) {
          const long sy = y + dy;
          double* dst = row + y * W;
          if (sy < 0 || sy >= H) {
            std::fill(dst, dst + W, 0.0);
            continue;
          }
          const double* src = in + (c * g.h + static_cast<std::size_t>(sy)) * g.w;
          for (long x = 0; x < W; ++x) {
            const long sx = x + dx;
            dst[x] = (sx < 0 || sx >= W) ? 0.0 : src[sx];
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeom& g, const double* cols, double* in) {
  const auto ph = static_cast<long>(g.ph());
  const auto pw = static_cast<long>(g.pw());
  const long H = static_cast<long>(g.h);
  const long W = static_cast<long>(g.w);
  for (std::size_t c = 0; c < g.in_ch; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const double* row = cols + ((c * g.kh + ki) * g.kw + kj) * g.hw();
        const long dy = static_cast<long>(ki) - ph;
        const long dx = static_cast<long>(kj) - pw;
        for (long y = 0; y < H; ++y) {
          const long sy = y + dy;
          if (sy < 0 || sy >= H) continue;
          double* dst = in + (c * g.h + static_cast<std::size_t>(sy)) * g.w;
          const double* src = row + y * W;
          for (long x = 0; x < W; ++x) {
            const long sx = x + dx;
            if (sx >= 0 && sx < W) dst[sx] += src[x];
          }
        }
      }
    }
  }
}

Var conv_impl(const Var& input, const Var& kernel, const Var* bias) {
  constexpr auto kind = OpKind::conv2d;
  require_rank(kind, input, 4, "input");
  require_rank(kind, kernel, 4, "kernel");
  const auto& si = input.shape();
  const auto& sk = kernel.shape();
  if (si[1] != sk[1] || sk[2] % 2 == 0 || sk[3] % 2 == 0) shape_mismatch(kind, si, sk);
  if (bias && (bias->value().rank() != 1 || bias->shape()[0] != sk[0])) shape_mismatch(kind, sk, bias->shape());
  const ConvGeom geo{si[0], si[1], si[2], si[3], sk[0], sk[2], sk[3]};
  const bool pointwise = geo.kh == 1 && geo.kw == 1;

  const Tensor in = input.value();
  const Tensor ker = kernel.value();
  std::vector<double> out(geo.batch * geo.out_ch * geo.hw());
  std::vector<double> cols(pointwise ? 0 : geo.patch() * geo.hw());
  MapC kmat(ker.data().data(), geo.out_ch, geo.patch());
  for (std::size_t b = 0; b < geo.batch; ++b) {
    const double* xb = in.data().data() + b * geo.in_ch * geo.hw();
    const double* cptr = xb;
    if (!pointwise) {
      im2col(geo, xb, cols.data());
      cptr = cols.data();
    }
    Map ob(out.data() + b * geo.out_ch * geo.hw(), geo.out_ch, geo.hw());
    ob.noalias() = kmat * MapC(cptr, geo.patch(), geo.hw());
    if (bias) {
      auto bv = bias->value().data();
      for (std::size_t o = 0; o < geo.out_ch; ++o) ob.row(o).array() += bv[o];
    }
  }

  std::vector<Var> ins{input, kernel};
  if (bias) ins.push_back(*bias);
  return input.tape().record(
      kind, ins, Tensor({geo.batch, geo.out_ch, geo.h, geo.w}, std::move(out)),
      [geo, in, ker, pointwise](std::span<const double> g, std::span<double* const> gi) {
        std::vector<double> cols(pointwise ? 0 : geo.patch() * geo.hw());
        std::vector<double> dcols(pointwise ? 0 : geo.patch() * geo.hw());
        MapC kmat(ker.data().data(), geo.out_ch, geo.patch());
        for (std::size_t b = 0; b < geo.batch; ++b) {
          MapC gb(g.data() + b * geo.out_ch * geo.hw(), geo.out_ch, geo.hw());
          const double* xb = in.data().data() + b * geo.in_ch * geo.hw();
          if (gi[1]) {
            const double* cptr = xb;
            if (!pointwise) {
              im2col(geo, xb, cols.data());
              cptr = cols.data();
            }
            Map dk(gi[1], geo.out_ch, geo.patch());
            dk.noalias() += gb * MapC(cptr, geo.patch(), geo.hw()).transpose();
          }
          if (gi[0]) {
            double* dxb = gi[0] + b * geo.in_ch * geo.hw();
            if (pointwise) {
              Map dx(dxb, geo.in_ch, geo.hw());
              dx.noalias() += kmat.transpose() * gb;
            } else {
              Map dc(dcols.data(), geo.patch(), geo.hw());
              dc.noalias() = kmat.transpose() * gb;
              col2im_add(geo, dcols.data(), dxb);
            }
          }
          if (gi.size() > 2 && gi[2]) {
            for (std::size_t o = 0; o < geo.out_ch; ++o) {
              const double* row = g.data() + (b * geo.out_ch + o) * geo.hw();
              gi[2][o] += std::accumulate(row, row + geo.hw(), 0.0);
            }
          }
        }
      });
}

}  // namespace

Var add(const Var& a, const Var& b) { return binary(OpKind::add, Binary::add, a, b); }
Var sub(const Var& a, const Var& b) { return binary(OpKind::sub, Binary::sub, a, b); }
Var mul(const Var& a, const Var& b) { return binary(OpKind::mul, Binary::mul, a, b); }

Var scale(const Var& a, double factor) { return mul(a, a.tape().constant(Tensor::scalar(factor))); }

Var matmul(const Var& a, const Var& b) {
  constexpr auto kind = OpKind::matmul;
  if (a.value().rank() != 2 || b.value().rank() != 2 || a.shape()[1] != b.shape()[0]) {
    shape_mismatch(kind, a.shape(), b.shape());
  }
  const auto m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor av = a.value();
  Tensor bv = b.value();
  std::vector<double> out(m * n, 0.0);
  ordered_product(av.data().data(), bv.data().data(), out.data(), m, k, n);
  std::array<Var, 2> ins{a, b};
  return a.tape().record(kind, ins, Tensor({m, n}, std::move(out)),
                         [av, bv, m, k, n](std::span<const double> g, std::span<double* const> gi) {
                           MapC gm(g.data(), m, n);
                           if (gi[0]) Map(gi[0], m, k).noalias() += gm * MapC(bv.data().data(), k, n).transpose();
                           if (gi[1]) Map(gi[1], k, n).noalias() += MapC(av.data().data(), m, k).transpose() * gm;
                         });
}

Var conv2d(const Var& input, const Var& kernel) { return conv_impl(input, kernel, nullptr); }
Var conv2d(const Var& input, const Var& kernel, const Var& bias) { return conv_impl(input, kernel, &bias); }

Var reshape(const Var& a, Shape shape) {
  if (shape_size(shape) != a.value().size()) shape_mismatch(OpKind::reshape, a.shape(), shape);
  std::array<Var, 1> ins{a};
  return a.tape().record(OpKind::reshape, ins, a.value().reshaped(std::move(shape)),
                         [](std::span<const double> g, std::span<double* const> gi) {
                           if (!gi[0]) return;
                           for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
                         });
}

Var reduce_mean(const Var& a) {
  auto x = a.value().data();
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  std::array<Var, 1> ins{a};
  const std::size_t count = x.size();
  return a.tape().record(OpKind::reduce_mean, ins, Tensor::scalar(mean),
                         [n, count](std::span<const double> g, std::span<double* const> gi) {
                           if (!gi[0]) return;
                           const double v = g[0] / n;
                           for (std::size_t i = 0; i < count; ++i) gi[0][i] += v;
                         });
}

Var relu(const Var& a) {
  return unary(
      OpKind::relu, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& a) {
  return unary(
      OpKind::sigmoid, a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var sine(const Var& a) {
  return unary(
      OpKind::sine, a, [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Var permute(const Var& a, std::vector<std::size_t> axes) {
  const Shape& s = a.shape();
  const std::size_t r = s.size();
  {
    std::vector<std::size_t> sorted = axes;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted.size() != r || sorted[i] != i) {
        throw ShapeError("permute: axes do not form a permutation of rank " + std::to_string(r) + " for shape " +
                         shape_str(s));
      }
    }
  }
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = s[axes[i]];
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) in_strides[i - 1] = in_strides[i] * s[i];
  // For each output linear index, the source linear index.
  const std::size_t n = a.value().size();
  auto src_index = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t o = 0; o < n; ++o) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < r; ++i) src += idx[i] * in_strides[axes[i]];
    (*src_index)[o] = src;
    for (std::size_t i = r; i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  auto x = a.value().data();
  std::vector<double> out(n);
  for (std::size_t o = 0; o < n; ++o) out[o] = x[(*src_index)[o]];
  std::array<Var, 1> ins{a};
  return a.tape().record(OpKind::permute, ins, Tensor(out_shape, std::move(out)),
                         [src_index](std::span<const double> g, std::span<double* const> gi) {
                           if (!gi[0]) return;
                           for (std::size_t o = 0; o < g.size(); ++o) gi[0][(*src_index)[o]] += g[o];
                         });
}

Var channel_affine(const Var& x, std::span<const double> scale_c, std::span<const double> shift_c) {
  const Shape& s = x.shape();
  if (s.size() < 2 || scale_c.size() != s[1] || shift_c.size() != s[1]) {
    shape_mismatch(OpKind::channel_affine, s, Shape{scale_c.size()});
  }
  const std::size_t channels = s[1];
  const std::size_t inner = shape_size(s) / (s[0] * channels);
  auto sc = std::make_shared<std::vector<double>>(scale_c.begin(), scale_c.end());
  auto xv = x.value().data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const std::size_t c = (i / inner) % channels;
    out[i] = xv[i] * scale_c[c] + shift_c[c];
  }
  std::array<Var, 1> ins{x};
  return x.tape().record(OpKind::channel_affine, ins, Tensor(s, std::move(out)),
                         [sc, inner, channels](std::span<const double> g, std::span<double* const> gi) {
                           if (!gi[0]) return;
                           for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * (*sc)[(i / inner) % channels];
                         });
}

Var forward_op(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs) {
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (inputs.size() < lo || inputs.size() > hi) {
      throw ShapeError(std::string(op_name(kind)) + ": expected " + std::to_string(lo) + " input(s), got " +
                       std::to_string(inputs.size()));
    }
  };
  switch (kind) {
    case OpKind::add: need(2, 2); return add(inputs[0], inputs[1]);
    case OpKind::sub: need(2, 2); return sub(inputs[0], inputs[1]);
    case OpKind::mul: need(2, 2); return mul(inputs[0], inputs[1]);
    case OpKind::matmul: need(2, 2); return matmul(inputs[0], inputs[1]);
    case OpKind::conv2d:
      need(2, 3);
      return inputs.size() == 2 ? conv2d(inputs[0], inputs[1]) : conv2d(inputs[0], inputs[1], inputs[2]);
    case OpKind::reshape: need(1, 1); return reshape(inputs[0], attrs.shape);
    case OpKind::reduce_mean: need(1, 1); return reduce_mean(inputs[0]);
    case OpKind::relu: need(1, 1); return relu(inputs[0]);
    case OpKind::sigmoid: need(1, 1); return sigmoid(inputs[0]);
    case OpKind::sine: need(1, 1); return sine(inputs[0]);
    case OpKind::permute: need(1, 1); return permute(inputs[0], attrs.axes);
    default:
      throw ShapeError(std::string("forward_op: ") + std::string(op_name(kind)) + " is not dispatchable generically");
  }
}

}  // namespace ldon
