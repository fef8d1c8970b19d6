#include "tgfnet/amef.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tgfnet/ops.hpp"

namespace tgfnet::amef {
namespace {

void zero(Tensor t) {
  for (double& v : t.mutable_values()) v = 0.0;
}

}  // namespace

std::vector<std::size_t> rqaf_candidates(const Tensor& projected, std::size_t batch_index,
                                         std::size_t location, std::size_t r) {
  if (projected.rank() != 3) {
    throw ShapeError("rqaf_candidates: expected [B,M,D], got " + to_string(projected.shape()));
  }
  const std::size_t patches = projected.dim(1);
  const std::size_t dim = projected.dim(2);
  if (batch_index >= projected.dim(0) || location >= patches) {
    throw std::out_of_range("rqaf_candidates: location " + std::to_string(location) +
                            " in batch item " + std::to_string(batch_index) + " out of range");
  }
  if (r < 1 || r > patches) {
    throw std::out_of_range("rqaf_candidates: R=" + std::to_string(r) + " outside [1, " +
                            std::to_string(patches) + "]");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  const double* base = projected.values().data() + batch_index * patches * dim;
  const double* anchor = base + location * dim;
  std::vector<double> sim(patches);
  for (std::size_t j = 0; j < patches; ++j) {
    double s = 0.0;
    for (std::size_t e = 0; e < dim; ++e) s += anchor[e] * base[j * dim + e];
    sim[j] = s * scale;
  }
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < patches; ++j) {
    if (j != location) others.push_back(j);
  }
  std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(r - 1),
                    others.end(), [&](std::size_t a, std::size_t b) {
                      if (sim[a] != sim[b]) return sim[a] > sim[b];
                      return a < b;
                    });
  std::vector<std::size_t> out{location};
  out.insert(out.end(), others.begin(), others.begin() + static_cast<std::ptrdiff_t>(r - 1));
  return out;
}

Tensor rqaf_weights(Tape& tape, const Tensor& question, const Tensor& candidates) {
  if (question.rank() != 3 || candidates.rank() != 3 || question.dim(2) != candidates.dim(2)) {
    throw ShapeError("rqaf_weights: question " + to_string(question.shape()) +
                     " and candidates " + to_string(candidates.shape()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(question.dim(2)));
  const Tensor sim = ops::scale(
      tape, ops::matmul(tape, question, ops::transpose_last2(tape, candidates)), scale);
  return ops::softmax(tape, ops::mean_axis(tape, sim, 1), 1);
}

RqafParams RqafParams::create(ParamInit init, std::size_t dim, std::size_t heads,
                              std::size_t candidates, std::size_t hidden) {
  if (heads == 0 || dim % heads != 0) {
    throw std::invalid_argument("RqafParams: width " + std::to_string(dim) +
                                " not divisible by " + std::to_string(heads) + " heads");
  }
  RqafParams p;
  p.w_question = init.xavier("w_question", dim, dim);
  p.w_optical = init.xavier("w_optical", dim, dim);
  p.w_sar = init.xavier("w_sar", dim, dim);
  p.heads = heads;
  p.candidates = candidates;
  p.norm = nn::LayerNormParams::create(init.scope("norm"), dim);
  p.mlp = nn::MlpParams::create(init.scope("mlp"), dim, hidden, dim, nn::Activation::kGelu);
  return p;
}

Tensor rqaf_fuse(Tape& tape, const Tensor& question, const Tensor& optical, const Tensor& sar,
                 const RqafParams& p, RqafTrace* trace) {
  if (optical.shape() != sar.shape() || optical.rank() != 3 || question.rank() != 3 ||
      question.dim(0) != optical.dim(0) || question.dim(2) != optical.dim(2)) {
    throw ShapeError("rqaf_fuse: question " + to_string(question.shape()) + ", optical " +
                     to_string(optical.shape()) + ", SAR " + to_string(sar.shape()));
  }
  const std::size_t batch = optical.dim(0);
  const std::size_t patches = optical.dim(1);
  const std::size_t dim = optical.dim(2);
  const std::size_t heads = p.heads;
  const std::size_t r = p.candidates;
  const std::size_t head_dim = dim / heads;

  const Tensor q = ops::matmul(tape, question, p.w_question);
  const Tensor o = ops::matmul(tape, optical, p.w_optical);
  const Tensor s = ops::matmul(tape, sar, p.w_sar);

  // Candidate selection is index-only; gradients flow through the gathers.
  std::vector<std::vector<std::size_t>> o_idx(batch), s_idx(batch);
  std::vector<std::vector<std::vector<std::size_t>>> o_sets(batch), s_sets(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < patches; ++i) {
      auto oc = rqaf_candidates(o, b, i, r);
      auto sc = rqaf_candidates(s, b, i, r);
      o_idx[b].insert(o_idx[b].end(), oc.begin(), oc.end());
      s_idx[b].insert(s_idx[b].end(), sc.begin(), sc.end());
      o_sets[b].push_back(std::move(oc));
      s_sets[b].push_back(std::move(sc));
    }
  }
  const Tensor o_cand = ops::reshape(tape, ops::gather_rows(tape, o, o_idx), {batch, patches, r, dim});
  const Tensor s_cand = ops::reshape(tape, ops::gather_rows(tape, s, s_idx), {batch, patches, r, dim});
  const std::array<Tensor, 2> stack_parts{o_cand, s_cand};
  const Tensor stacked = ops::concat(tape, stack_parts, 2);  // [B, M, 2R, D]
  const Tensor cand_heads = ops::split_heads(
      tape, ops::reshape(tape, stacked, {batch, patches * 2 * r, dim}), heads);  // [B,h,M*2R,dh]

  // The mean over question tokens commutes with the dot product.
  const Tensor q_mean = ops::reshape(tape, ops::mean_axis(tape, q, 1), {batch, 1, dim});
  const Tensor q_heads = ops::transpose_last2(tape, ops::split_heads(tape, q_mean, heads));
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const Tensor logits = ops::reshape(tape, ops::scale(tape, ops::matmul(tape, cand_heads, q_heads), scale),
                                     {batch, heads, patches, 2 * r});
  const Tensor weights = ops::softmax(tape, logits, 3);

  const Tensor mixed = ops::matmul(tape, ops::reshape(tape, weights, {batch * heads * patches, 1, 2 * r}),
                                   ops::reshape(tape, cand_heads, {batch * heads * patches, 2 * r, head_dim}));
  const Tensor weighted =
      ops::merge_heads(tape, ops::reshape(tape, mixed, {batch, heads, patches, head_dim}));
  if (trace) {
    trace->weights = weights;
    trace->weighted = weighted;
    trace->candidates = stacked;
    trace->optical_sets = std::move(o_sets);
    trace->sar_sets = std::move(s_sets);
  }
  return ops::add(tape, weighted, nn::mlp(tape, nn::layer_norm(tape, weighted, p.norm), p.mlp));
}

ExpertParams ExpertParams::create(ParamInit init, std::size_t dim, std::size_t heads,
                                  std::size_t ffn_hidden, std::size_t classifier_hidden,
                                  std::size_t classes) {
  ExpertParams p;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    ParamInit layer = init.scope("layer" + std::to_string(l));
    auto& d = p.layers[l];
    d.norm1 = nn::LayerNormParams::create(layer.scope("norm1"), dim);
    d.self_attn = nn::AttentionParams::create(layer.scope("self_attn"), dim, heads);
    d.norm2 = nn::LayerNormParams::create(layer.scope("norm2"), dim);
    d.cross_attn = nn::AttentionParams::create(layer.scope("cross_attn"), dim, heads);
    d.norm3 = nn::LayerNormParams::create(layer.scope("norm3"), dim);
    d.ffn = nn::MlpParams::create(layer.scope("ffn"), dim, ffn_hidden, dim, nn::Activation::kGelu);
  }
  p.classifier = nn::MlpParams::create(init.scope("classifier"), dim, classifier_hidden, classes,
                                       nn::Activation::kRelu);
  return p;
}

void ExpertParams::zero_residual_branches() {
  for (auto& d : layers) {
    zero(d.self_attn.wo);
    zero(d.cross_attn.wo);
    zero(d.ffn.w2);
    zero(d.ffn.b2);
  }
}

void ExpertParams::zero_classifier_output() {
  zero(classifier.w2);
  zero(classifier.b2);
}

Tensor expert_predict(Tape& tape, const Tensor& question, const Tensor& visual,
                      const ExpertParams& p, ExpertTrace* trace) {
  Tensor x = question;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& d = p.layers[l];
    const Tensor a = nn::layer_norm(tape, x, d.norm1);
    x = ops::add(tape, x, nn::multi_head_cross_attention(tape, a, a, d.self_attn));
    x = ops::add(tape, x,
                 nn::multi_head_cross_attention(tape, nn::layer_norm(tape, x, d.norm2), visual,
                                                d.cross_attn, trace ? &trace->cross[l] : nullptr));
    x = ops::add(tape, x, nn::mlp(tape, nn::layer_norm(tape, x, d.norm3), d.ffn));
  }
  const std::size_t batch = x.dim(0);
  const Tensor pooled = ops::mean_axis(tape, x, 1);
  const Tensor logits = nn::mlp(tape, pooled, p.classifier);
  return ops::reshape(tape, logits, {batch, 1, logits.dim(1)});
}

GateParams GateParams::create(ParamInit init, std::size_t classes) {
  GateParams p;
  p.w = init.xavier("w", 3 * classes, 3);
  p.b = init.constant("b", {3}, 0.0);
  return p;
}

FusedPrediction adaptive_fuse(Tape& tape, const Tensor& optical_scores, const Tensor& sar_scores,
                              const Tensor& fused_scores, const GateParams& p) {
  if (optical_scores.shape() != sar_scores.shape() ||
      optical_scores.shape() != fused_scores.shape() || optical_scores.rank() != 3 ||
      optical_scores.dim(1) != 1) {
    throw ShapeError("adaptive_fuse: expert scores must share shape [B,1,C], got " +
                     to_string(optical_scores.shape()) + ", " + to_string(sar_scores.shape()) +
                     ", " + to_string(fused_scores.shape()));
  }
  const std::array<Tensor, 3> experts{optical_scores, sar_scores, fused_scores};
  const Tensor joined = ops::concat(tape, experts, 2);  // [B,1,3C]
  const Tensor gates = ops::sigmoid(tape, nn::linear(tape, joined, p.w, p.b));
  const Tensor stacked = ops::concat(tape, experts, 1);  // [B,3,C]
  const Tensor mixed = ops::matmul(tape, gates, stacked);
  return FusedPrediction{ops::softmax(tape, mixed, 2), gates};
}

}  // namespace tgfnet::amef
