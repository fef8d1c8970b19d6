#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "tgfnet/nn.hpp"

// Adaptive multi-expert fusion: per-location quality-aware fusion of the two
// image streams, three decoder experts, and a sigmoid-gated combination of
// their class scores.
namespace tgfnet::amef {

// Candidate patches for location i within one projected modality [B,M,D]:
// i first, then the r-1 other patches with the highest scaled dot-product
// similarity to patch i (ties to the lower index).
std::vector<std::size_t> rqaf_candidates(const Tensor& projected, std::size_t batch_index,
                                         std::size_t location, std::size_t r);

// Fusion weights over a stacked candidate set for a single head:
// softmax over candidates of mean_N(F_q Set^T / sqrt(D_h)).
// question: [B,N,Dh], candidates: [B,2R,Dh] -> [B,2R].
Tensor rqaf_weights(Tape& tape, const Tensor& question, const Tensor& candidates);

struct RqafParams {
  Tensor w_question;  // [D, D]
  Tensor w_optical;   // [D, D]
  Tensor w_sar;       // [D, D]
  std::size_t heads = 1;
  std::size_t candidates = 3;
  nn::LayerNormParams norm;
  nn::MlpParams mlp;

  static RqafParams create(ParamInit init, std::size_t dim, std::size_t heads,
                           std::size_t candidates, std::size_t hidden);
};

struct RqafTrace {
  Tensor weights;   // [B, h, M, 2R]
  Tensor weighted;  // pre-norm fused features [B, M, D]
  Tensor candidates;  // stacked projected candidates [B, M, 2R, D]
  // [B][M] candidate patch ids per modality.
  std::vector<std::vector<std::vector<std::size_t>>> optical_sets;
  std::vector<std::vector<std::vector<std::size_t>>> sar_sets;
};

// Question-guided fusion of enhanced optical and SAR features, [B,M,D].
Tensor rqaf_fuse(Tape& tape, const Tensor& question, const Tensor& optical, const Tensor& sar,
                 const RqafParams& p, RqafTrace* trace = nullptr);

struct DecoderLayerParams {
  nn::LayerNormParams norm1;
  nn::AttentionParams self_attn;
  nn::LayerNormParams norm2;
  nn::AttentionParams cross_attn;
  nn::LayerNormParams norm3;
  nn::MlpParams ffn;
};

struct ExpertParams {
  std::array<DecoderLayerParams, 2> layers;
  nn::MlpParams classifier;  // D -> H -> C with ReLU

  static ExpertParams create(ParamInit init, std::size_t dim, std::size_t heads,
                             std::size_t ffn_hidden, std::size_t classifier_hidden,
                             std::size_t classes);
  void zero_residual_branches();
  void zero_classifier_output();
};

struct ExpertTrace {
  // Cross-attention weights of each decoder layer, [B, h, N, M].
  std::array<nn::AttentionTrace, 2> cross;
};

// Two pre-norm decoder layers over the question tokens with K,V from the
// visual features, average pooling over tokens, then the classifier.
// Returns raw class scores [B, 1, C].
Tensor expert_predict(Tape& tape, const Tensor& question, const Tensor& visual,
                      const ExpertParams& p, ExpertTrace* trace = nullptr);

struct GateParams {
  Tensor w;  // [3C, 3]
  Tensor b;  // [3]

  static GateParams create(ParamInit init, std::size_t classes);
};

struct FusedPrediction {
  Tensor distribution;  // Pre [B, 1, C]
  Tensor gates;         // W_A [B, 1, 3]
};

FusedPrediction adaptive_fuse(Tape& tape, const Tensor& optical_scores, const Tensor& sar_scores,
                              const Tensor& fused_scores, const GateParams& p);

}  // namespace tgfnet::amef
