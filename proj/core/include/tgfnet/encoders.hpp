#pragma once

#include <cstdint>
#include <span>

#include "tgfnet/params.hpp"
#include "tgfnet/tape.hpp"

namespace tgfnet {

enum class Modality { kOptical, kSar };

struct EncoderConfig {
  std::size_t vocab_size = 64;
  std::size_t question_len = 24;
  std::size_t patches = 16;
  std::size_t cell_channels = 3;
  std::size_t dim = 32;
};

// Learned stand-in for a pretrained feature extractor. Either patch
// projection may be left undefined for single-modality models.
struct EncoderParams {
  Tensor token_table;   // [V, D]
  Tensor question_pos;  // [N, D]
  Tensor optical_proj;  // [channels, D]
  Tensor sar_proj;      // [channels, D]
  Tensor patch_pos;     // [M, D]

  static EncoderParams create(ParamInit init, const EncoderConfig& cfg, bool with_optical,
                              bool with_sar);
};

struct FeatureBundle {
  Tensor question;  // [B, N, D]
  Tensor optical;   // [B, M, D]
  Tensor sar;       // [B, M, D]
};

// tokens: B*N ids, row-major. Padding ids are embedded like any other token.
Tensor embed_question(Tape& tape, std::span<const std::int32_t> tokens, std::size_t batch,
                      const EncoderParams& p);

// Optical grids carry M*channels values per sample; SAR grids carry M single
// intensities that are replicated across the channels before projection.
Tensor embed_patches(Tape& tape, std::span<const double> grid, std::size_t batch,
                     const EncoderParams& p, Modality modality);

}  // namespace tgfnet
