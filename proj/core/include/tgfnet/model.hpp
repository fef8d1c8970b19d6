#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgfnet/amef.hpp"
#include "tgfnet/cfar.hpp"
#include "tgfnet/encoders.hpp"

namespace tgfnet {

// Architecture variants. kFull is the complete network (alias "exp4"); the
// others reproduce the ablation rows:
//   exp1 / add  single expert over F_o + F_s
//   exp2        three experts + gate, fused stream F_o + F_s
//   exp3        exp2 with refinement, fused stream F_OE + F_SE
//   concat      single expert over [F_o, F_s] re-projected to D
//   xformer     single expert over F_o + CrossAttn(LN(F_o), F_s)
//   opt-only    single expert over F_o
//   sar-only    single expert over F_s
enum class Variant { kExp1, kExp2, kExp3, kFull, kAdd, kConcat, kXformer, kOptOnly, kSarOnly };
enum class ExpertInput { kEnhanced, kRaw };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);
std::string_view expert_input_name(ExpertInput e);
ExpertInput parse_expert_input(std::string_view name);

struct ModelConfig {
  std::size_t question_len = 24;     // N
  std::size_t grid_side = 4;         // M = grid_side^2
  std::size_t region_height = 2;     // P = region_height * region_width
  std::size_t region_width = 2;
  std::size_t top_k = 2;             // k
  std::size_t rqaf_candidates = 3;   // R
  std::size_t dim = 32;              // D
  std::size_t heads = 4;             // h
  std::size_t rqaf_heads = 4;        // h_r
  std::size_t classes = 22;          // C
  std::size_t vocab_size = 64;
  std::size_t cell_channels = 3;
  std::size_t mlp_hidden = 64;
  std::size_t classifier_hidden = 64;
  std::array<double, 4> lambdas{0.5, 0.5, 0.5, 0.5};
  ExpertInput expert_input = ExpertInput::kEnhanced;
  Variant variant = Variant::kFull;

  std::size_t patches() const { return grid_side * grid_side; }
  std::size_t patches_per_region() const { return region_height * region_width; }
  std::size_t regions() const { return patches() / patches_per_region(); }

  bool uses_refinement() const;    // CFAR present
  bool uses_experts() const;       // three experts + adaptive fusion
  bool uses_optical() const;
  bool uses_sar() const;

  // Throws std::invalid_argument on any violated constraint.
  void validate() const;
};

// One mini-batch in model layout. Grids are flat per sample: optical holds
// M*channels values, SAR holds M values.
struct Batch {
  std::size_t size = 0;
  std::vector<std::int32_t> tokens;  // size * N
  std::vector<double> optical;       // size * M * channels
  std::vector<double> sar;           // size * M
  std::vector<std::size_t> answers;
  std::vector<std::size_t> types;
};

// Expert class scores and the fused distribution. Single-expert variants set
// only `single` and `distribution` (its softmax); gates stay undefined.
struct ExpertOutputs {
  Tensor optical;       // P_OE [B,1,C]
  Tensor sar;           // P_SE [B,1,C]
  Tensor fused;         // P_OS [B,1,C]
  Tensor single;        // single-expert logits [B,1,C]
  Tensor distribution;  // Pre [B,1,C]
  Tensor gates;         // W_A [B,1,3]
};

struct ModelOutput {
  ExpertOutputs experts;
  cfar::RoutingReport routing;
};

class TgfNet {
 public:
  TgfNet(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  ModelOutput forward(Tape& tape, const Batch& batch) const;

  // Test and calibration hooks.
  void zero_classifier_outputs();
  void zero_refinement_branches();
  cfar::CfarParams& cfar_params() { return cfar_; }
  amef::RqafParams& rqaf_params() { return rqaf_; }
  const EncoderParams& encoder_params() const { return encoder_; }

 private:
  ModelConfig config_;
  ParameterStore params_;
  EncoderParams encoder_;
  cfar::CfarParams cfar_;
  cfar::RegionCodebook codebook_;
  amef::RqafParams rqaf_;
  amef::ExpertParams optical_expert_;
  amef::ExpertParams sar_expert_;
  amef::ExpertParams fused_expert_;
  amef::ExpertParams single_expert_;
  amef::GateParams gate_;
  Tensor concat_proj_;  // [2D, D]
  Tensor concat_bias_;  // [D]
  nn::LayerNormParams xformer_norm_;
  nn::AttentionParams xformer_attn_;
};

// lambda1 CE(P_OE) + lambda2 CE(P_SE) + lambda3 CE(P_OS) + lambda4 NLL(Pre);
// single-expert variants use CE of their only expert.
Tensor total_loss(Tape& tape, const ExpertOutputs& outputs, std::span<const std::size_t> targets,
                  const std::array<double, 4>& lambdas);

// Row-wise argmax of the fused distribution, ties to the lowest class id.
std::vector<std::size_t> argmax_classes(const Tensor& distribution);
std::vector<std::size_t> inference(const TgfNet& model, const Batch& batch);

double compute_oa(std::span<const std::size_t> predictions, std::span<const std::size_t> targets);
double compute_aa(std::span<const std::size_t> predictions, std::span<const std::size_t> targets,
                  std::span<const std::size_t> types);

}  // namespace tgfnet
