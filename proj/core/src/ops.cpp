#include "tgfnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kernels.hpp"

namespace tgfnet::ops {
namespace {

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for " + to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

bool is_suffix(const Shape& full, const Shape& part) {
  if (part.size() > full.size()) return false;
  return std::equal(part.begin(), part.end(),
                    full.end() - static_cast<std::ptrdiff_t>(part.size()));
}

void accumulate(TensorNode& node, std::span<const double> g) {
  auto dst = node.grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

// Resolves leading-dimension broadcasting for binary elementwise ops.
const Tensor& broadcast_target(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape() || is_suffix(a.shape(), b.shape())) return a;
  if (is_suffix(b.shape(), a.shape())) return b;
  throw ShapeError(std::string(op) + ": cannot broadcast " + to_string(a.shape()) +
                   " with " + to_string(b.shape()));
}

template <typename Forward, typename GradA, typename GradB>
Tensor binary(Tape& tape, const Tensor& a, const Tensor& b, const char* name, Forward f,
              GradA ga, GradB gb) {
  const Tensor& big = broadcast_target(a, b, name);
  const std::size_t n = big.size();
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  std::vector<double> out(n);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = f(av[i % na], bv[i % nb]);
  auto an = a.node();
  auto bn = b.node();
  return tape.record(big.shape(), std::move(out), {&a, &b},
                     [an, bn, na, nb, ga, gb](const TensorNode& out) {
                       const auto& g = out.grad;
                       const auto& av = an->value;
                       const auto& bv = bn->value;
                       if (an->requires_grad) {
                         auto da = an->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i)
                           da[i % na] += ga(g[i], av[i % na], bv[i % nb]);
                       }
                       if (bn->requires_grad) {
                         auto db = bn->grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i)
                           db[i % nb] += gb(g[i], av[i % na], bv[i % nb]);
                       }
                     });
}

// Elementwise op whose derivative is expressed through (x, y = f(x)).
template <typename Forward, typename Grad>
Tensor unary(Tape& tape, const Tensor& x, Forward f, Grad grad) {
  std::vector<double> out(x.size());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  auto xn = x.node();
  return tape.record(x.shape(), std::move(out), {&x}, [xn, grad](const TensorNode& out) {
    auto dx = xn->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i)
      dx[i] += out.grad[i] * grad(xn->value[i], out.value[i]);
  });
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw ShapeError("matmul: operands must have rank >= 2, got " + to_string(a.shape()) +
                     " and " + to_string(b.shape()));
  }
  const std::size_t m = a.dim(a.rank() - 2);
  const std::size_t k = a.dim(a.rank() - 1);
  const std::size_t kb = b.dim(b.rank() - 2);
  const std::size_t n = b.dim(b.rank() - 1);
  const Shape lead_a(a.shape().begin(), a.shape().end() - 2);
  const Shape lead_b(b.shape().begin(), b.shape().end() - 2);
  const std::size_t la = numel(lead_a);
  const std::size_t lb = numel(lead_b);
  if (k != kb || (lead_a != lead_b && la != 1 && lb != 1)) {
    throw ShapeError("matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                     to_string(b.shape()));
  }
  Shape out_shape = (la == 1 && lb != 1) ? lead_b : lead_a;
  if (la == 1 && lb == 1 && lead_b.size() > lead_a.size()) out_shape = lead_b;
  out_shape.push_back(m);
  out_shape.push_back(n);
  const std::size_t batches = std::max(la, lb);

  std::vector<double> out(batches * m * n, 0.0);
  const double* ap = a.values().data();
  const double* bp = b.values().data();
  if (lb == 1) {
    // Shared right operand: fold the batch into the row dimension.
    kernels::gemm_nn(la * m, k, n, ap, bp, out.data());
  } else {
    for (std::size_t l = 0; l < batches; ++l) {
      kernels::gemm_nn(m, k, n, ap + (la == 1 ? 0 : l * m * k), bp + l * k * n,
                       out.data() + l * m * n);
    }
  }

  auto an = a.node();
  auto bn = b.node();
  return tape.record(std::move(out_shape), std::move(out), {&a, &b},
                     [an, bn, la, lb, batches, m, k, n](const TensorNode& out) {
                       const double* g = out.grad.data();
                       const double* av = an->value.data();
                       const double* bv = bn->value.data();
                       if (lb == 1) {
                         if (an->requires_grad)
                           kernels::gemm_nt(la * m, n, k, g, bv, an->grad_buffer().data());
                         if (bn->requires_grad)
                           kernels::gemm_tn(la * m, k, n, av, g, bn->grad_buffer().data());
                         return;
                       }
                       for (std::size_t l = 0; l < batches; ++l) {
                         const std::size_t ao = la == 1 ? 0 : l * m * k;
                         const std::size_t bo = l * k * n;
                         const double* gl = g + l * m * n;
                         if (an->requires_grad)
                           kernels::gemm_nt(m, n, k, gl, bv + bo, an->grad_buffer().data() + ao);
                         if (bn->requires_grad)
                           kernels::gemm_tn(m, k, n, av + ao, gl, bn->grad_buffer().data() + bo);
                       }
                     });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(
      tape, a, b, "add", [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return g; });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(
      tape, a, b, "sub", [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return -g; });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(
      tape, a, b, "mul", [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Tensor scale(Tape& tape, const Tensor& x, double factor) {
  return unary(
      tape, x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor row_scale(Tape& tape, const Tensor& x, const Tensor& s) {
  if (x.rank() < 2 || s.shape() != Shape(x.shape().begin(), x.shape().end() - 1)) {
    throw ShapeError("row_scale: scales " + to_string(s.shape()) + " do not match rows of " +
                     to_string(x.shape()));
  }
  const std::size_t rows = s.size();
  const std::size_t width = x.shape().back();
  std::vector<double> out(x.size());
  const auto xv = x.values();
  const auto sv = s.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < width; ++j) out[r * width + j] = sv[r] * xv[r * width + j];
  }
  auto xn = x.node();
  auto sn = s.node();
  return tape.record(x.shape(), std::move(out), {&x, &s},
                     [xn, sn, rows, width](const TensorNode& out) {
                       const auto& g = out.grad;
                       if (xn->requires_grad) {
                         auto dx = xn->grad_buffer();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t j = 0; j < width; ++j)
                             dx[r * width + j] += sn->value[r] * g[r * width + j];
                       }
                       if (sn->requires_grad) {
                         auto ds = sn->grad_buffer();
                         for (std::size_t r = 0; r < rows; ++r) {
                           double acc = 0.0;
                           for (std::size_t j = 0; j < width; ++j)
                             acc += xn->value[r * width + j] * g[r * width + j];
                           ds[r] += acc;
                         }
                       }
                     });
}

Tensor concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& ref = parts.front().shape();
  const AxisSplit base = split_at(ref, axis, "concat");
  std::vector<std::size_t> lens;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == ref.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == ref[i];
    if (!ok) {
      throw ShapeError("concat: " + to_string(s) + " incompatible with " + to_string(ref) +
                       " along axis " + std::to_string(axis));
    }
    lens.push_back(s[axis]);
    total += s[axis];
  }
  Shape out_shape = ref;
  out_shape[axis] = total;
  std::vector<double> out(base.outer * total * base.inner);
  const std::size_t out_stride = total * base.inner;
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const std::size_t chunk = lens[p] * base.inner;
    const auto pv = parts[p].values();
    for (std::size_t o = 0; o < base.outer; ++o) {
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(o * chunk), chunk,
                  out.begin() + static_cast<std::ptrdiff_t>(o * out_stride + offset));
    }
    offset += chunk;
  }
  std::vector<std::shared_ptr<TensorNode>> nodes;
  for (const Tensor& p : parts) nodes.push_back(p.node());
  return tape.record(std::move(out_shape), std::move(out), parts,
                     [nodes, lens, base, out_stride](const TensorNode& out) {
                       std::size_t offset = 0;
                       for (std::size_t p = 0; p < nodes.size(); ++p) {
                         const std::size_t chunk = lens[p] * base.inner;
                         if (nodes[p]->requires_grad) {
                           auto dp = nodes[p]->grad_buffer();
                           for (std::size_t o = 0; o < base.outer; ++o)
                             for (std::size_t j = 0; j < chunk; ++j)
                               dp[o * chunk + j] += out.grad[o * out_stride + offset + j];
                         }
                         offset += chunk;
                       }
                     });
}

Tensor transpose_last2(Tape& tape, const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("transpose_last2: rank < 2 for " + to_string(x.shape()));
  const std::size_t m = x.dim(x.rank() - 2);
  const std::size_t n = x.dim(x.rank() - 1);
  const std::size_t batches = x.size() / (m * n);
  Shape out_shape = x.shape();
  std::swap(out_shape[out_shape.size() - 1], out_shape[out_shape.size() - 2]);
  std::vector<double> out(x.size());
  const auto xv = x.values();
  for (std::size_t l = 0; l < batches; ++l)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out[l * m * n + j * m + i] = xv[l * m * n + i * n + j];
  auto xn = x.node();
  return tape.record(std::move(out_shape), std::move(out), {&x},
                     [xn, batches, m, n](const TensorNode& out) {
                       auto dx = xn->grad_buffer();
                       for (std::size_t l = 0; l < batches; ++l)
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < n; ++j)
                             dx[l * m * n + i * n + j] += out.grad[l * m * n + j * m + i];
                     });
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  auto xn = x.node();
  return tape.record(std::move(shape), std::vector<double>(x.values().begin(), x.values().end()),
                     {&x}, [xn](const TensorNode& out) { accumulate(*xn, out.grad); });
}

Tensor swap_axes_1_2(Tape& tape, const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("swap_axes_1_2: expected rank 4, got " + to_string(x.shape()));
  const std::size_t a = x.dim(0), b = x.dim(1), c = x.dim(2), d = x.dim(3);
  std::vector<double> out(x.size());
  const auto xv = x.values();
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < b; ++j)
      for (std::size_t l = 0; l < c; ++l)
        std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(((i * b + j) * c + l) * d), d,
                    out.begin() + static_cast<std::ptrdiff_t>(((i * c + l) * b + j) * d));
  auto xn = x.node();
  return tape.record({a, c, b, d}, std::move(out), {&x},
                     [xn, a, b, c, d](const TensorNode& out) {
                       auto dx = xn->grad_buffer();
                       for (std::size_t i = 0; i < a; ++i)
                         for (std::size_t j = 0; j < b; ++j)
                           for (std::size_t l = 0; l < c; ++l) {
                             const std::size_t src = ((i * c + l) * b + j) * d;
                             const std::size_t dst = ((i * b + j) * c + l) * d;
                             for (std::size_t e = 0; e < d; ++e) dx[dst + e] += out.grad[src + e];
                           }
                     });
}

Tensor split_heads(Tape& tape, const Tensor& x, std::size_t heads) {
  if (x.rank() != 3 || heads == 0 || x.dim(2) % heads != 0) {
    throw ShapeError("split_heads: cannot split " + to_string(x.shape()) + " into " +
                     std::to_string(heads) + " heads");
  }
  const Tensor r = reshape(tape, x, {x.dim(0), x.dim(1), heads, x.dim(2) / heads});
  return swap_axes_1_2(tape, r);
}

Tensor merge_heads(Tape& tape, const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("merge_heads: expected rank 4, got " + to_string(x.shape()));
  const Tensor s = swap_axes_1_2(tape, x);
  return reshape(tape, s, {x.dim(0), x.dim(2), x.dim(1) * x.dim(3)});
}

Tensor sum_axis(Tape& tape, const Tensor& x, std::size_t axis) {
  const AxisSplit s = split_at(x.shape(), axis, "sum_axis");
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto xv = x.values();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t l = 0; l < s.len; ++l)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += xv[(o * s.len + l) * s.inner + i];
  auto xn = x.node();
  return tape.record(drop_axis(x.shape(), axis), std::move(out), {&x},
                     [xn, s](const TensorNode& out) {
                       auto dx = xn->grad_buffer();
                       for (std::size_t o = 0; o < s.outer; ++o)
                         for (std::size_t l = 0; l < s.len; ++l)
                           for (std::size_t i = 0; i < s.inner; ++i)
                             dx[(o * s.len + l) * s.inner + i] += out.grad[o * s.inner + i];
                     });
}

Tensor mean_axis(Tape& tape, const Tensor& x, std::size_t axis) {
  const AxisSplit s = split_at(x.shape(), axis, "mean_axis");
  const double inv = 1.0 / static_cast<double>(s.len);
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto xv = x.values();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t l = 0; l < s.len; ++l)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += xv[(o * s.len + l) * s.inner + i];
  for (double& v : out) v *= inv;
  auto xn = x.node();
  return tape.record(drop_axis(x.shape(), axis), std::move(out), {&x},
                     [xn, s, inv](const TensorNode& out) {
                       auto dx = xn->grad_buffer();
                       for (std::size_t o = 0; o < s.outer; ++o)
                         for (std::size_t l = 0; l < s.len; ++l)
                           for (std::size_t i = 0; i < s.inner; ++i)
                             dx[(o * s.len + l) * s.inner + i] += out.grad[o * s.inner + i] * inv;
                     });
}

Tensor sum_all(Tape& tape, const Tensor& x) {
  const auto xv = x.values();
  const double total = std::accumulate(xv.begin(), xv.end(), 0.0);
  auto xn = x.node();
  return tape.record({1}, {total}, {&x}, [xn](const TensorNode& out) {
    auto dx = xn->grad_buffer();
    for (double& v : dx) v += out.grad[0];
  });
}

Tensor softmax(Tape& tape, const Tensor& x, std::size_t axis) {
  const AxisSplit s = split_at(x.shape(), axis, "softmax");
  std::vector<double> out(x.size());
  const auto xv = x.values();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.len * s.inner + i;
      double peak = xv[base];
      for (std::size_t l = 1; l < s.len; ++l) peak = std::max(peak, xv[base + l * s.inner]);
      double total = 0.0;
      for (std::size_t l = 0; l < s.len; ++l) {
        const double e = std::exp(xv[base + l * s.inner] - peak);
        out[base + l * s.inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < s.len; ++l) out[base + l * s.inner] /= total;
    }
  }
  auto xn = x.node();
  return tape.record(x.shape(), std::move(out), {&x}, [xn, s](const TensorNode& out) {
    auto dx = xn->grad_buffer();
    const auto& y = out.value;
    const auto& g = out.grad;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.len * s.inner + i;
        double dot = 0.0;
        for (std::size_t l = 0; l < s.len; ++l) dot += g[base + l * s.inner] * y[base + l * s.inner];
        for (std::size_t l = 0; l < s.len; ++l) {
          const std::size_t at = base + l * s.inner;
          dx[at] += y[at] * (g[at] - dot);
        }
      }
    }
  });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  return unary(
      tape, x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(Tape& tape, const Tensor& x) {
  for (double v : x.values()) {
    if (!(v > 0.0)) throw std::domain_error("log: non-positive input " + std::to_string(v));
  }
  return unary(
      tape, x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor gather_rows(Tape& tape, const Tensor& x,
                   const std::vector<std::vector<std::size_t>>& idx) {
  if (x.rank() != 3) throw ShapeError("gather_rows: expected [B,L,D], got " + to_string(x.shape()));
  const std::size_t batch = idx.size();
  if (batch == 0) throw ShapeError("gather_rows: empty index batch");
  if (x.dim(0) != batch && x.dim(0) != 1) {
    throw ShapeError("gather_rows: " + std::to_string(batch) + " index lists for " +
                     to_string(x.shape()));
  }
  const std::size_t rows = x.dim(1);
  const std::size_t width = x.dim(2);
  const std::size_t picked = idx.front().size();
  if (picked == 0) throw ShapeError("gather_rows: empty index list");
  for (const auto& list : idx) {
    if (list.size() != picked) throw ShapeError("gather_rows: ragged index lists");
    for (std::size_t r : list) {
      if (r >= rows) {
        throw std::out_of_range("gather_rows: index " + std::to_string(r) +
                                " out of range for " + std::to_string(rows) + " rows");
      }
    }
  }
  const std::size_t src_stride = x.dim(0) == 1 ? 0 : rows * width;
  std::vector<double> out(batch * picked * width);
  const auto xv = x.values();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t j = 0; j < picked; ++j)
      std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(b * src_stride + idx[b][j] * width),
                  width, out.begin() + static_cast<std::ptrdiff_t>((b * picked + j) * width));
  auto xn = x.node();
  return tape.record({batch, picked, width}, std::move(out), {&x},
                     [xn, idx, src_stride, picked, width](const TensorNode& out) {
                       auto dx = xn->grad_buffer();
                       for (std::size_t b = 0; b < idx.size(); ++b)
                         for (std::size_t j = 0; j < picked; ++j) {
                           double* dst = dx.data() + b * src_stride + idx[b][j] * width;
                           const double* g = out.grad.data() + (b * picked + j) * width;
                           for (std::size_t e = 0; e < width; ++e) dst[e] += g[e];
                         }
                     });
}

std::vector<std::size_t> topk_indices(std::span<const double> values, std::size_t k) {
  if (k < 1 || k > values.size()) {
    throw std::out_of_range("topk_indices: k=" + std::to_string(k) + " outside [1, " +
                            std::to_string(values.size()) + "]");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (values[a] != values[b]) return values[a] > values[b];
                      return a < b;
                    });
  order.resize(k);
  return order;
}

}  // namespace tgfnet::ops
