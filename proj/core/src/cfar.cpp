#include "tgfnet/cfar.hpp"

#include <cmath>
#include <stdexcept>

#include "tgfnet/ops.hpp"

namespace tgfnet::cfar {
namespace {

void zero(Tensor t) {
  for (double& v : t.mutable_values()) v = 0.0;
}

void zero_stream(StreamParams& s) {
  zero(s.mca_attn.wo);
  zero(s.mca_mlp.w2);
  zero(s.mca_mlp.b2);
  zero(s.se_attn.wo);
  zero(s.ie_mlp.w2);
  zero(s.ie_mlp.b2);
}

struct StreamResult {
  Tensor question;
  Tensor image;
  RoutingEntry routing;
};

StreamResult run_stream(Tape& tape, const Tensor& question, const Tensor& image,
                        const StreamParams& p, const RegionCodebook& codebook, std::size_t k) {
  const Tensor regions = region_pool(tape, image, codebook);
  const Tensor scores = krr_scores(tape, question, regions, p.w_t, p.w_i);
  KeyRegions key = select_key_regions(tape, scores, k, codebook, image);
  StreamResult r;
  r.question = mca(tape, question, key.features, p);
  r.image = similarity_enhance(tape, r.question, image, p);
  r.routing = RoutingEntry{scores, std::move(key.regions)};
  return r;
}

}  // namespace

RegionCodebook::RegionCodebook(std::size_t grid_side, std::size_t region_side)
    : RegionCodebook(grid_side, region_side, region_side) {}

RegionCodebook::RegionCodebook(std::size_t grid_side, std::size_t region_height, std::size_t region_width)
    : grid_side_(grid_side), region_height_(region_height), region_width_(region_width) {
  if (grid_side == 0 || region_height == 0 || region_width == 0 || grid_side % region_height != 0 ||
      grid_side % region_width != 0) {
    throw std::invalid_argument("RegionCodebook: " + std::to_string(region_height) + "x" +
                                std::to_string(region_width) + " regions do not tile a grid of side " +
                                std::to_string(grid_side));
  }
  const std::size_t block_rows = grid_side / region_height;
  const std::size_t block_cols = grid_side / region_width;
  owner_.assign(grid_side * grid_side, 0);
  for (std::size_t br = 0; br < block_rows; ++br) {
    for (std::size_t bc = 0; bc < block_cols; ++bc) {
      std::vector<std::size_t> members;
      for (std::size_t r = 0; r < region_height; ++r) {
        for (std::size_t c = 0; c < region_width; ++c) {
          const std::size_t patch = (br * region_height + r) * grid_side + bc * region_width + c;
          members.push_back(patch);
          owner_[patch] = regions_.size();
        }
      }
      regions_.push_back(std::move(members));
    }
  }
}

StreamParams StreamParams::create(ParamInit init, std::size_t dim, std::size_t heads,
                                  std::size_t hidden) {
  StreamParams p;
  p.w_t = init.xavier("w_t", dim, dim);
  p.w_i = init.xavier("w_i", dim, dim);
  p.mca_norm1 = nn::LayerNormParams::create(init.scope("mca.norm1"), dim);
  p.mca_attn = nn::AttentionParams::create(init.scope("mca.attn"), dim, heads);
  p.mca_norm2 = nn::LayerNormParams::create(init.scope("mca.norm2"), dim);
  p.mca_mlp = nn::MlpParams::create(init.scope("mca.mlp"), dim, hidden, dim, nn::Activation::kGelu);
  p.ie_norm1 = nn::LayerNormParams::create(init.scope("ie.norm1"), dim);
  p.se_attn = nn::AttentionParams::create(init.scope("ie.se"), dim, heads);
  p.ie_norm2 = nn::LayerNormParams::create(init.scope("ie.norm2"), dim);
  p.ie_mlp = nn::MlpParams::create(init.scope("ie.mlp"), dim, hidden, dim, nn::Activation::kGelu);
  return p;
}

CfarParams CfarParams::create(ParamInit init, std::size_t dim, std::size_t heads,
                              std::size_t hidden) {
  CfarParams p;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    ParamInit block = init.scope("block" + std::to_string(b));
    p.blocks[b].optical = StreamParams::create(block.scope("optical"), dim, heads, hidden);
    p.blocks[b].sar = StreamParams::create(block.scope("sar"), dim, heads, hidden);
  }
  return p;
}

void CfarParams::zero_residual_branches() {
  for (auto& block : blocks) {
    zero_stream(block.optical);
    zero_stream(block.sar);
  }
}

Tensor region_pool(Tape& tape, const Tensor& features, const RegionCodebook& codebook) {
  if (features.rank() != 3 || features.dim(1) != codebook.patch_count()) {
    throw ShapeError("region_pool: features " + to_string(features.shape()) + " for " +
                     std::to_string(codebook.patch_count()) + " patches");
  }
  std::vector<std::size_t> order;
  for (std::size_t r = 0; r < codebook.region_count(); ++r) {
    const auto& members = codebook.patches(r);
    order.insert(order.end(), members.begin(), members.end());
  }
  const std::size_t batch = features.dim(0);
  const std::vector<std::vector<std::size_t>> idx(batch, order);
  const Tensor grouped = ops::reshape(
      tape, ops::gather_rows(tape, features, idx),
      {batch, codebook.region_count(), codebook.patches_per_region(), features.dim(2)});
  return ops::mean_axis(tape, grouped, 2);
}

Tensor krr_scores(Tape& tape, const Tensor& question, const Tensor& regions, const Tensor& w_t,
                  const Tensor& w_i) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(question.dim(2)));
  const Tensor q = ops::matmul(tape, question, w_t);
  const Tensor r = ops::matmul(tape, regions, w_i);
  const Tensor corr = ops::scale(tape, ops::matmul(tape, q, ops::transpose_last2(tape, r)), scale);
  return ops::mean_axis(tape, corr, 1);
}

KeyRegions select_key_regions(Tape& tape, const Tensor& scores, std::size_t k,
                              const RegionCodebook& codebook, const Tensor& features) {
  const std::size_t batch = scores.dim(0);
  const std::size_t regions = codebook.region_count();
  if (scores.rank() != 2 || scores.dim(1) != regions) {
    throw ShapeError("select_key_regions: scores " + to_string(scores.shape()) + " for " +
                     std::to_string(regions) + " regions");
  }
  if (k < 1 || k > regions) {
    throw std::out_of_range("select_key_regions: k=" + std::to_string(k) + " outside [1, " +
                            std::to_string(regions) + "]");
  }
  KeyRegions out;
  std::vector<std::vector<std::size_t>> idx(batch);
  const auto sv = scores.values();
  for (std::size_t b = 0; b < batch; ++b) {
    auto top = ops::topk_indices(sv.subspan(b * regions, regions), k);
    for (std::size_t region : top) {
      const auto& members = codebook.patches(region);
      idx[b].insert(idx[b].end(), members.begin(), members.end());
    }
    out.regions.push_back(std::move(top));
  }
  out.features = ops::gather_rows(tape, features, idx);
  return out;
}

Tensor mca(Tape& tape, const Tensor& question, const Tensor& key_patches, const StreamParams& p,
           nn::AttentionTrace* trace) {
  const Tensor attended = nn::multi_head_cross_attention(
      tape, nn::layer_norm(tape, question, p.mca_norm1), key_patches, p.mca_attn, trace);
  const Tensor h = ops::add(tape, question, attended);
  return ops::add(tape, h, nn::mlp(tape, nn::layer_norm(tape, h, p.mca_norm2), p.mca_mlp));
}

Tensor similarity_scores(Tape& tape, const Tensor& question, const Tensor& image,
                         const nn::AttentionParams& p) {
  const std::size_t dim = p.dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim / p.heads));
  const Tensor q = ops::split_heads(tape, ops::matmul(tape, question, p.wq), p.heads);
  const Tensor k = ops::split_heads(tape, ops::matmul(tape, image, p.wk), p.heads);
  const Tensor sim = ops::scale(tape, ops::matmul(tape, q, ops::transpose_last2(tape, k)), scale);
  // [B,h,N,M] -> mean over the question tokens -> softmax over patches.
  return ops::softmax(tape, ops::mean_axis(tape, sim, 2), 2);
}

Tensor se_layer(Tape& tape, const Tensor& question, const Tensor& image,
                const nn::AttentionParams& p, Tensor* scores_out) {
  if (p.heads == 0 || p.dim() % p.heads != 0) {
    throw std::invalid_argument("se_layer: width not divisible by head count");
  }
  const Tensor scores = similarity_scores(tape, question, image, p);
  if (scores_out) *scores_out = scores;
  const Tensor v = ops::split_heads(tape, ops::matmul(tape, image, p.wv), p.heads);
  const Tensor weighted = ops::row_scale(tape, v, scores);
  return ops::matmul(tape, ops::merge_heads(tape, weighted), p.wo);
}

Tensor similarity_enhance(Tape& tape, const Tensor& question, const Tensor& image,
                          const StreamParams& p, Tensor* scores_out) {
  const Tensor enhanced =
      se_layer(tape, question, nn::layer_norm(tape, image, p.ie_norm1), p.se_attn, scores_out);
  const Tensor h = ops::add(tape, image, enhanced);
  return ops::add(tape, h, nn::mlp(tape, nn::layer_norm(tape, h, p.ie_norm2), p.ie_mlp));
}

CfarOutput cfar_forward(Tape& tape, const FeatureBundle& bundle, const CfarParams& params,
                        const RegionCodebook& codebook, std::size_t k) {
  if (!bundle.optical.defined() || !bundle.sar.defined()) {
    throw std::invalid_argument("cfar_forward: both optical and SAR features are required");
  }
  CfarOutput out;
  Tensor q_opt = bundle.question;
  Tensor q_sar = bundle.question;
  Tensor img_opt = bundle.optical;
  Tensor img_sar = bundle.sar;
  for (const BlockParams& block : params.blocks) {
    StreamResult o = run_stream(tape, q_opt, img_opt, block.optical, codebook, k);
    StreamResult s = run_stream(tape, q_sar, img_sar, block.sar, codebook, k);
    q_opt = o.question;
    img_opt = o.image;
    q_sar = s.question;
    img_sar = s.image;
    out.report.blocks.push_back({std::move(o.routing), std::move(s.routing)});
  }
  out.optical = img_opt;
  out.sar = img_sar;
  return out;
}

}  // namespace tgfnet::cfar
