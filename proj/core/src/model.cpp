#include "tgfnet/model.hpp"

#include <map>
#include <stdexcept>

#include "tgfnet/ops.hpp"

namespace tgfnet {
namespace {

struct VariantName {
  Variant variant;
  std::string_view name;
};

constexpr std::array<VariantName, 10> kVariantNames{{
    {Variant::kExp1, "exp1"},
    {Variant::kExp2, "exp2"},
    {Variant::kExp3, "exp3"},
    {Variant::kFull, "exp4"},
    {Variant::kFull, "full"},
    {Variant::kAdd, "add"},
    {Variant::kConcat, "concat"},
    {Variant::kXformer, "xformer"},
    {Variant::kOptOnly, "opt-only"},
    {Variant::kSarOnly, "sar-only"},
}};

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid model config: " + what);
}

}  // namespace

std::string_view variant_name(Variant v) {
  for (const auto& entry : kVariantNames) {
    if (entry.variant == v) return entry.name;
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (const auto& entry : kVariantNames) {
    if (entry.name == name) return entry.variant;
  }
  throw std::invalid_argument("unknown variant '" + std::string(name) +
                              "' (expected exp1, exp2, exp3, exp4, add, concat, xformer, "
                              "opt-only or sar-only)");
}

std::string_view expert_input_name(ExpertInput e) {
  return e == ExpertInput::kEnhanced ? "enhanced" : "raw";
}

ExpertInput parse_expert_input(std::string_view name) {
  if (name == "enhanced") return ExpertInput::kEnhanced;
  if (name == "raw") return ExpertInput::kRaw;
  throw std::invalid_argument("unknown expert input '" + std::string(name) +
                              "' (expected enhanced or raw)");
}

bool ModelConfig::uses_refinement() const {
  return variant == Variant::kFull || variant == Variant::kExp3;
}

bool ModelConfig::uses_experts() const {
  return variant == Variant::kFull || variant == Variant::kExp3 || variant == Variant::kExp2;
}

bool ModelConfig::uses_optical() const { return variant != Variant::kSarOnly; }
bool ModelConfig::uses_sar() const { return variant != Variant::kOptOnly; }

void ModelConfig::validate() const {
  require(question_len > 0, "question_len must be positive");
  require(dim > 0 && heads > 0 && dim % heads == 0, "d_model must be divisible by heads");
  require(rqaf_heads > 0 && dim % rqaf_heads == 0, "d_model must be divisible by rqaf_heads");
  require(grid_side > 0 && region_height > 0 && region_width > 0 && grid_side % region_height == 0 &&
              grid_side % region_width == 0,
          "region_height and region_width must tile grid_side (T*P = M)");
  require(top_k >= 1 && top_k <= regions(), "top_k must lie in [1, T]");
  require(rqaf_candidates >= 1 && rqaf_candidates <= patches(), "rqaf_r must lie in [1, M]");
  require(classes >= 2, "at least two answer classes are required");
  require(vocab_size >= 1 && cell_channels >= 1, "vocabulary and channel counts must be positive");
  require(mlp_hidden > 0 && classifier_hidden > 0, "hidden widths must be positive");
  for (double l : lambdas) require(l >= 0.0, "loss weights must be non-negative");
}

TgfNet::TgfNet(ModelConfig config, std::uint64_t seed)
    : config_(config), codebook_(config.grid_side, config.region_height, config.region_width) {
  config_.validate();
  Rng rng(seed);
  ParamInit root(params_, rng);
  const auto& c = config_;
  EncoderConfig enc{c.vocab_size, c.question_len, c.patches(), c.cell_channels, c.dim};
  encoder_ = EncoderParams::create(root.scope("encoder"), enc, c.uses_optical(), c.uses_sar());
  if (c.uses_refinement()) cfar_ = cfar::CfarParams::create(root.scope("cfar"), c.dim, c.heads, c.mlp_hidden);
  if (c.variant == Variant::kFull) {
    rqaf_ = amef::RqafParams::create(root.scope("rqaf"), c.dim, c.rqaf_heads, c.rqaf_candidates,
                                     c.mlp_hidden);
  }
  auto make_expert = [&](const std::string& name) {
    return amef::ExpertParams::create(root.scope("expert." + name), c.dim, c.heads, c.mlp_hidden,
                                      c.classifier_hidden, c.classes);
  };
  if (c.uses_experts()) {
    optical_expert_ = make_expert("optical");
    sar_expert_ = make_expert("sar");
    fused_expert_ = make_expert("fused");
    gate_ = amef::GateParams::create(root.scope("gate"), c.classes);
  } else {
    single_expert_ = make_expert("single");
    if (c.variant == Variant::kConcat) {
      ParamInit fusion = root.scope("fusion.concat");
      concat_proj_ = fusion.xavier("w", 2 * c.dim, c.dim);
      concat_bias_ = fusion.constant("b", {c.dim}, 0.0);
    } else if (c.variant == Variant::kXformer) {
      xformer_norm_ = nn::LayerNormParams::create(root.scope("fusion.xformer.norm"), c.dim);
      xformer_attn_ = nn::AttentionParams::create(root.scope("fusion.xformer.attn"), c.dim, c.heads);
    }
  }
}

void TgfNet::zero_classifier_outputs() {
  for (auto* e : {&optical_expert_, &sar_expert_, &fused_expert_, &single_expert_}) {
    if (e->classifier.w2.defined()) e->zero_classifier_output();
  }
}

void TgfNet::zero_refinement_branches() {
  if (config_.uses_refinement()) cfar_.zero_residual_branches();
}

ModelOutput TgfNet::forward(Tape& tape, const Batch& batch) const {
  const auto& c = config_;
  const std::size_t b = batch.size;
  if (b == 0) throw std::invalid_argument("forward: empty batch");
  if (batch.tokens.size() != b * c.question_len) {
    throw ShapeError("forward: batch carries " + std::to_string(batch.tokens.size()) +
                     " tokens, config expects " + std::to_string(b) + " x " +
                     std::to_string(c.question_len));
  }
  if (c.uses_optical() && batch.optical.size() != b * c.patches() * c.cell_channels) {
    throw ShapeError("forward: optical grid size " + std::to_string(batch.optical.size()) +
                     " does not match config (" + std::to_string(c.patches()) + " cells x " +
                     std::to_string(c.cell_channels) + " channels)");
  }
  if (c.uses_sar() && batch.sar.size() != b * c.patches()) {
    throw ShapeError("forward: SAR grid size " + std::to_string(batch.sar.size()) +
                     " does not match config (" + std::to_string(c.patches()) + " cells)");
  }

  FeatureBundle f;
  f.question = embed_question(tape, batch.tokens, b, encoder_);
  if (c.uses_optical()) f.optical = embed_patches(tape, batch.optical, b, encoder_, Modality::kOptical);
  if (c.uses_sar()) f.sar = embed_patches(tape, batch.sar, b, encoder_, Modality::kSar);

  ModelOutput out;
  ExpertOutputs& e = out.experts;
  if (c.uses_experts()) {
    Tensor optical = f.optical;
    Tensor sar = f.sar;
    if (c.uses_refinement()) {
      cfar::CfarOutput refined = cfar::cfar_forward(tape, f, cfar_, codebook_, c.top_k);
      optical = refined.optical;
      sar = refined.sar;
      out.routing = std::move(refined.report);
    }
    const Tensor fused = c.variant == Variant::kFull
                             ? amef::rqaf_fuse(tape, f.question, optical, sar, rqaf_)
                             : ops::add(tape, optical, sar);
    const bool raw = c.expert_input == ExpertInput::kRaw;
    e.optical = amef::expert_predict(tape, f.question, raw ? f.optical : optical, optical_expert_);
    e.sar = amef::expert_predict(tape, f.question, raw ? f.sar : sar, sar_expert_);
    e.fused = amef::expert_predict(tape, f.question, fused, fused_expert_);
    amef::FusedPrediction p = amef::adaptive_fuse(tape, e.optical, e.sar, e.fused, gate_);
    e.distribution = p.distribution;
    e.gates = p.gates;
    return out;
  }

  Tensor visual;
  switch (c.variant) {
    case Variant::kOptOnly:
      visual = f.optical;
      break;
    case Variant::kSarOnly:
      visual = f.sar;
      break;
    case Variant::kConcat: {
      const std::array<Tensor, 2> parts{f.optical, f.sar};
      visual = nn::linear(tape, ops::concat(tape, parts, 2), concat_proj_, concat_bias_);
      break;
    }
    case Variant::kXformer:
      visual = ops::add(tape, f.optical,
                        nn::multi_head_cross_attention(
                            tape, nn::layer_norm(tape, f.optical, xformer_norm_), f.sar, xformer_attn_));
      break;
    default:
      visual = ops::add(tape, f.optical, f.sar);
      break;
  }
  e.single = amef::expert_predict(tape, f.question, visual, single_expert_);
  e.distribution = ops::softmax(tape, e.single, 2);
  return out;
}

Tensor total_loss(Tape& tape, const ExpertOutputs& outputs, std::span<const std::size_t> targets,
                  const std::array<double, 4>& lambdas) {
  if (outputs.single.defined()) return nn::cross_entropy(tape, outputs.single, targets);
  Tensor loss = ops::scale(tape, nn::cross_entropy(tape, outputs.optical, targets), lambdas[0]);
  loss = ops::add(tape, loss, ops::scale(tape, nn::cross_entropy(tape, outputs.sar, targets), lambdas[1]));
  loss = ops::add(tape, loss, ops::scale(tape, nn::cross_entropy(tape, outputs.fused, targets), lambdas[2]));
  return ops::add(tape, loss,
                  ops::scale(tape, nn::nll_of_distribution(tape, outputs.distribution, targets), lambdas[3]));
}

std::vector<std::size_t> argmax_classes(const Tensor& distribution) {
  const std::size_t classes = distribution.shape().back();
  const std::size_t rows = distribution.size() / classes;
  const auto v = distribution.values();
  std::vector<std::size_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (v[r * classes + c] > v[r * classes + best]) best = c;
    }
    out[r] = best;
  }
  return out;
}

std::vector<std::size_t> inference(const TgfNet& model, const Batch& batch) {
  Tape tape(Tape::Mode::kInference);
  return argmax_classes(model.forward(tape, batch).experts.distribution);
}

double compute_oa(std::span<const std::size_t> predictions, std::span<const std::size_t> targets) {
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("compute_oa: prediction and target counts differ");
  }
  if (predictions.empty()) throw std::invalid_argument("compute_oa: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) correct += predictions[i] == targets[i];
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double compute_aa(std::span<const std::size_t> predictions, std::span<const std::size_t> targets,
                  std::span<const std::size_t> types) {
  if (predictions.size() != targets.size() || predictions.size() != types.size()) {
    throw std::invalid_argument("compute_aa: prediction, target and type counts differ");
  }
  if (predictions.empty()) throw std::invalid_argument("compute_aa: empty input");
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> per_type;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    auto& [correct, total] = per_type[types[i]];
    correct += predictions[i] == targets[i];
    ++total;
  }
  double sum = 0.0;
  for (const auto& [type, counts] : per_type) {
    sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return sum / static_cast<double>(per_type.size());
}

}  // namespace tgfnet
