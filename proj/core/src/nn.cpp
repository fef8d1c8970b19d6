#include "tgfnet/nn.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tgfnet/ops.hpp"

namespace tgfnet::nn {

LayerNormParams LayerNormParams::create(ParamInit init, std::size_t dim) {
  LayerNormParams p;
  p.gamma = init.constant("gamma", {dim}, 1.0);
  p.beta = init.constant("beta", {dim}, 0.0);
  return p;
}

MlpParams MlpParams::create(ParamInit init, std::size_t in, std::size_t hidden, std::size_t out,
                            Activation activation) {
  MlpParams p;
  p.w1 = init.xavier("w1", in, hidden);
  p.b1 = init.constant("b1", {hidden}, 0.0);
  p.w2 = init.xavier("w2", hidden, out);
  p.b2 = init.constant("b2", {out}, 0.0);
  p.activation = activation;
  return p;
}

AttentionParams AttentionParams::create(ParamInit init, std::size_t dim, std::size_t heads) {
  if (heads == 0 || dim % heads != 0) {
    throw std::invalid_argument("attention width " + std::to_string(dim) +
                                " not divisible by " + std::to_string(heads) + " heads");
  }
  AttentionParams p;
  p.wq = init.xavier("wq", dim, dim);
  p.wk = init.xavier("wk", dim, dim);
  p.wv = init.xavier("wv", dim, dim);
  p.wo = init.xavier("wo", dim, dim);
  p.heads = heads;
  return p;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const LayerNormParams& p) {
  const std::size_t width = x.shape().back();
  if (p.gamma.size() != width || p.beta.size() != width) {
    throw ShapeError("layer_norm: parameters of width " + std::to_string(p.gamma.size()) +
                     " for input " + to_string(x.shape()));
  }
  const std::size_t rows = x.size() / width;
  const double inv_w = 1.0 / static_cast<double>(width);
  std::vector<double> out(x.size());
  std::vector<double> xhat(x.size());
  std::vector<double> rstd(rows);
  const auto xv = x.values();
  const auto gv = p.gamma.values();
  const auto bv = p.beta.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * width;
    double mean = 0.0;
    for (std::size_t j = 0; j < width; ++j) mean += xr[j];
    mean *= inv_w;
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var *= inv_w;
    rstd[r] = 1.0 / std::sqrt(var + p.eps);
    for (std::size_t j = 0; j < width; ++j) {
      const double h = (xr[j] - mean) * rstd[r];
      xhat[r * width + j] = h;
      out[r * width + j] = h * gv[j] + bv[j];
    }
  }
  auto xn = x.node();
  auto gn = p.gamma.node();
  auto bn = p.beta.node();
  return tape.record(
      x.shape(), std::move(out), {&x, &p.gamma, &p.beta},
      [xn, gn, bn, xhat = std::move(xhat), rstd = std::move(rstd), rows, width,
       inv_w](const TensorNode& out) {
        const auto& g = out.grad;
        if (gn->requires_grad || bn->requires_grad) {
          auto dg = gn->grad_buffer();
          auto db = bn->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < width; ++j) {
              dg[j] += g[r * width + j] * xhat[r * width + j];
              db[j] += g[r * width + j];
            }
        }
        if (!xn->requires_grad) return;
        auto dx = xn->grad_buffer();
        const auto& gamma = gn->value;
        for (std::size_t r = 0; r < rows; ++r) {
          double mean_d = 0.0;
          double mean_dh = 0.0;
          for (std::size_t j = 0; j < width; ++j) {
            const double d = g[r * width + j] * gamma[j];
            mean_d += d;
            mean_dh += d * xhat[r * width + j];
          }
          mean_d *= inv_w;
          mean_dh *= inv_w;
          for (std::size_t j = 0; j < width; ++j) {
            const double d = g[r * width + j] * gamma[j];
            dx[r * width + j] += rstd[r] * (d - mean_d - xhat[r * width + j] * mean_dh);
          }
        }
      });
}

Tensor gelu(Tape& tape, const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  std::vector<double> out(x.size());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] * kInvSqrt2));
  auto xn = x.node();
  return tape.record(x.shape(), std::move(out), {&x}, [xn, inv_sqrt_2pi](const TensorNode& out) {
    auto dx = xn->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double v = xn->value[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      dx[i] += out.grad[i] * (cdf + v * pdf);
    }
  });
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  return ops::add(tape, ops::matmul(tape, x, w), b);
}

Tensor mlp(Tape& tape, const Tensor& x, const MlpParams& p) {
  Tensor h = linear(tape, x, p.w1, p.b1);
  h = p.activation == Activation::kGelu ? gelu(tape, h) : ops::relu(tape, h);
  return linear(tape, h, p.w2, p.b2);
}

Tensor multi_head_cross_attention(Tape& tape, const Tensor& q_in, const Tensor& kv_in,
                                  const AttentionParams& p, AttentionTrace* trace) {
  const std::size_t dim = p.dim();
  if (p.heads == 0 || dim % p.heads != 0) {
    throw std::invalid_argument("multi_head_cross_attention: width " + std::to_string(dim) +
                                " not divisible by " + std::to_string(p.heads) + " heads");
  }
  if (q_in.rank() != 3 || kv_in.rank() != 3 || q_in.dim(0) != kv_in.dim(0) ||
      q_in.dim(2) != dim || kv_in.dim(2) != dim) {
    throw ShapeError("multi_head_cross_attention: query " + to_string(q_in.shape()) +
                     " and key/value " + to_string(kv_in.shape()) + " for width " +
                     std::to_string(dim));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim / p.heads));
  const Tensor q = ops::split_heads(tape, ops::matmul(tape, q_in, p.wq), p.heads);
  const Tensor k = ops::split_heads(tape, ops::matmul(tape, kv_in, p.wk), p.heads);
  const Tensor v = ops::split_heads(tape, ops::matmul(tape, kv_in, p.wv), p.heads);
  const Tensor scores = ops::scale(tape, ops::matmul(tape, q, ops::transpose_last2(tape, k)), scale);
  const Tensor weights = ops::softmax(tape, scores, 3);
  if (trace) trace->weights = weights;
  const Tensor heads = ops::merge_heads(tape, ops::matmul(tape, weights, v));
  return ops::matmul(tape, heads, p.wo);
}

Tensor cross_entropy(Tape& tape, const Tensor& logits, std::span<const std::size_t> targets) {
  const std::size_t classes = logits.shape().back();
  const std::size_t rows = logits.size() / classes;
  if (targets.size() != rows) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                     to_string(logits.shape()));
  }
  const auto lv = logits.values();
  std::vector<double> probs(logits.size());
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] >= classes) {
      throw std::out_of_range("cross_entropy: target " + std::to_string(targets[r]) +
                              " out of range for " + std::to_string(classes) + " classes");
    }
    const double* x = lv.data() + r * classes;
    double peak = x[0];
    for (std::size_t c = 1; c < classes; ++c) peak = std::max(peak, x[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs[r * classes + c] = std::exp(x[c] - peak);
      z += probs[r * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] /= z;
    total += std::log(z) + peak - x[targets[r]];
  }
  auto ln = logits.node();
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  return tape.record({1}, {total / static_cast<double>(rows)}, {&logits},
                     [ln, probs = std::move(probs), tgt = std::move(tgt), rows,
                      classes](const TensorNode& out) {
                       auto dx = ln->grad_buffer();
                       const double g = out.grad[0] / static_cast<double>(rows);
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < classes; ++c) {
                           const double onehot = c == tgt[r] ? 1.0 : 0.0;
                           dx[r * classes + c] += g * (probs[r * classes + c] - onehot);
                         }
                     });
}

Tensor nll_of_distribution(Tape& tape, const Tensor& probs, std::span<const std::size_t> targets) {
  const std::size_t classes = probs.shape().back();
  const std::size_t rows = probs.size() / classes;
  if (targets.size() != rows) {
    throw ShapeError("nll_of_distribution: " + std::to_string(targets.size()) +
                     " targets for " + to_string(probs.shape()));
  }
  const auto pv = probs.values();
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] >= classes) {
      throw std::out_of_range("nll_of_distribution: target " + std::to_string(targets[r]) +
                              " out of range for " + std::to_string(classes) + " classes");
    }
    double row_sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) row_sum += pv[r * classes + c];
    if (std::abs(row_sum - 1.0) > kDistributionTolerance) {
      throw std::invalid_argument("nll_of_distribution: row " + std::to_string(r) +
                                  " sums to " + std::to_string(row_sum));
    }
    total -= std::log(std::max(pv[r * classes + targets[r]], kProbabilityFloor));
  }
  auto pn = probs.node();
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  return tape.record({1}, {total / static_cast<double>(rows)}, {&probs},
                     [pn, tgt = std::move(tgt), rows, classes](const TensorNode& out) {
                       auto dp = pn->grad_buffer();
                       const double g = out.grad[0] / static_cast<double>(rows);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const std::size_t at = r * classes + tgt[r];
                         const double p = pn->value[at];
                         if (p > kProbabilityFloor) dp[at] -= g / p;
                       }
                     });
}

}  // namespace tgfnet::nn
