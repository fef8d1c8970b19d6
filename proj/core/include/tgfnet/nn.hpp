#pragma once

#include <cstddef>
#include <span>

#include "tgfnet/params.hpp"
#include "tgfnet/tape.hpp"

namespace tgfnet::nn {

inline constexpr double kLayerNormEps = 1e-5;
// Probabilities are clamped to this floor before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;
// Allowed deviation of a probability row sum from 1.
inline constexpr double kDistributionTolerance = 1e-6;

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;
  double eps = kLayerNormEps;

  static LayerNormParams create(ParamInit init, std::size_t dim);
};

enum class Activation { kGelu, kRelu };

struct MlpParams {
  Tensor w1;  // [in, hidden]
  Tensor b1;  // [hidden]
  Tensor w2;  // [hidden, out]
  Tensor b2;  // [out]
  Activation activation = Activation::kGelu;

  static MlpParams create(ParamInit init, std::size_t in, std::size_t hidden, std::size_t out,
                          Activation activation);
};

// Projections are bias-free; wo maps the concatenated heads back to width D.
struct AttentionParams {
  Tensor wq;
  Tensor wk;
  Tensor wv;
  Tensor wo;
  std::size_t heads = 1;

  std::size_t dim() const { return wq.dim(0); }
  static AttentionParams create(ParamInit init, std::size_t dim, std::size_t heads);
};

// Optional capture of the softmax weights, [B, h, Nq, Nk].
struct AttentionTrace {
  Tensor weights;
};

Tensor layer_norm(Tape& tape, const Tensor& x, const LayerNormParams& p);

// Exact x * Phi(x) with Phi from erf.
Tensor gelu(Tape& tape, const Tensor& x);

// x @ w + b over the last axis.
Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);

Tensor mlp(Tape& tape, const Tensor& x, const MlpParams& p);

// softmax(Q K^T / sqrt(D/h)) V per head with Q from q_in and K, V from kv_in,
// heads concatenated and projected by wo.
Tensor multi_head_cross_attention(Tape& tape, const Tensor& q_in, const Tensor& kv_in,
                                  const AttentionParams& p, AttentionTrace* trace = nullptr);

// Mean over rows of -log softmax(logits)[target]. Rows are all leading
// positions; the last axis holds the C classes.
Tensor cross_entropy(Tape& tape, const Tensor& logits, std::span<const std::size_t> targets);

// Mean over rows of -log max(probs[target], kProbabilityFloor) for inputs that
// are already distributions.
Tensor nll_of_distribution(Tape& tape, const Tensor& probs, std::span<const std::size_t> targets);

}  // namespace tgfnet::nn
