#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "tgfnet/encoders.hpp"
#include "tgfnet/nn.hpp"

// Text-guided coarse-to-fine attention refinement: regions are scored against
// the question, the top-k regions' patches attend with the question stream,
// and the refined question then re-weights every image patch.
namespace tgfnet::cfar {

// Fixed partition of a square patch grid into contiguous rectangular blocks
// (square by default). Regions are numbered row-major over the block grid;
// patch lists are row-major within each block.
class RegionCodebook {
 public:
  RegionCodebook(std::size_t grid_side, std::size_t region_side);
  RegionCodebook(std::size_t grid_side, std::size_t region_height, std::size_t region_width);

  std::size_t region_count() const { return regions_.size(); }
  std::size_t patches_per_region() const { return region_height_ * region_width_; }
  std::size_t patch_count() const { return grid_side_ * grid_side_; }
  std::size_t grid_side() const { return grid_side_; }
  std::size_t region_height() const { return region_height_; }
  std::size_t region_width() const { return region_width_; }
  const std::vector<std::size_t>& patches(std::size_t region) const { return regions_.at(region); }
  // Region owning each patch.
  std::size_t region_of(std::size_t patch) const { return owner_.at(patch); }

 private:
  std::size_t grid_side_;
  std::size_t region_height_;
  std::size_t region_width_;
  std::vector<std::vector<std::size_t>> regions_;
  std::vector<std::size_t> owner_;
};

// Parameters for one modality stream of one block.
struct StreamParams {
  Tensor w_t;  // question routing projection [D, D]
  Tensor w_i;  // region routing projection [D, D]
  nn::LayerNormParams mca_norm1;
  nn::AttentionParams mca_attn;
  nn::LayerNormParams mca_norm2;
  nn::MlpParams mca_mlp;
  nn::LayerNormParams ie_norm1;
  nn::AttentionParams se_attn;
  nn::LayerNormParams ie_norm2;
  nn::MlpParams ie_mlp;

  static StreamParams create(ParamInit init, std::size_t dim, std::size_t heads,
                             std::size_t hidden);
};

struct BlockParams {
  StreamParams optical;
  StreamParams sar;
};

struct CfarParams {
  std::array<BlockParams, 2> blocks;

  static CfarParams create(ParamInit init, std::size_t dim, std::size_t heads, std::size_t hidden);
  // Zeroes every residual branch output (attention output projections and the
  // second MLP layers), which turns the module into the identity.
  void zero_residual_branches();
};

struct RoutingEntry {
  Tensor scores;                               // [B, T]
  std::vector<std::vector<std::size_t>> selected;  // [B][k] region ids
};

struct RoutingReport {
  // blocks[b][0] optical, blocks[b][1] SAR.
  std::vector<std::array<RoutingEntry, 2>> blocks;
};

struct KeyRegions {
  Tensor features;                                 // [B, P*k, D]
  std::vector<std::vector<std::size_t>> regions;  // [B][k]
};

// Mean of each region's member patch rows: [B,M,D] -> [B,T,D].
Tensor region_pool(Tape& tape, const Tensor& features, const RegionCodebook& codebook);

// Question-region correlation: mean over question tokens of
// (F_q W_T)(F_r W_I)^T / sqrt(D). Returns [B, T].
Tensor krr_scores(Tape& tape, const Tensor& question, const Tensor& regions, const Tensor& w_t,
                  const Tensor& w_i);

// Gathers the patches of the top-k regions (descending score, ties to the lower
// region id), keeping each region's internal patch order.
KeyRegions select_key_regions(Tape& tape, const Tensor& scores, std::size_t k,
                              const RegionCodebook& codebook, const Tensor& features);

// Pre-norm residual cross-attention of the question stream over key patches:
// h = q + MHCA(LN(q), key); out = h + MLP(LN(h)).
Tensor mca(Tape& tape, const Tensor& question, const Tensor& key_patches, const StreamParams& p,
           nn::AttentionTrace* trace = nullptr);

// Per-head patch relevance softmax_M(mean_N(Q K^T / sqrt(d_h))), [B, h, M].
Tensor similarity_scores(Tape& tape, const Tensor& question, const Tensor& image,
                         const nn::AttentionParams& p);

// Similarity-enhancement layer: every V patch row scaled by its relevance,
// heads concatenated and projected by wo. Optionally returns the scores.
Tensor se_layer(Tape& tape, const Tensor& question, const Tensor& image,
                const nn::AttentionParams& p, Tensor* scores_out = nullptr);

// Image enhancement block: h = F + SE(q, LN(F)); out = h + MLP(LN(h)).
Tensor similarity_enhance(Tape& tape, const Tensor& question, const Tensor& image,
                          const StreamParams& p, Tensor* scores_out = nullptr);

struct CfarOutput {
  Tensor optical;  // F_OE [B, M, D]
  Tensor sar;      // F_SE [B, M, D]
  RoutingReport report;
};

CfarOutput cfar_forward(Tape& tape, const FeatureBundle& bundle, const CfarParams& params,
                        const RegionCodebook& codebook, std::size_t k);

}  // namespace tgfnet::cfar
