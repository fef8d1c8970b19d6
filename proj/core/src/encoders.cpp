#include "tgfnet/encoders.hpp"

#include <stdexcept>

#include "tgfnet/ops.hpp"

namespace tgfnet {

EncoderParams EncoderParams::create(ParamInit init, const EncoderConfig& cfg, bool with_optical,
                                    bool with_sar) {
  EncoderParams p;
  p.token_table = init.normal("token_table", {cfg.vocab_size, cfg.dim}, 0.5);
  p.question_pos = init.normal("question_pos", {cfg.question_len, cfg.dim}, 0.1);
  if (with_optical) p.optical_proj = init.xavier("optical_proj", cfg.cell_channels, cfg.dim);
  if (with_sar) p.sar_proj = init.xavier("sar_proj", cfg.cell_channels, cfg.dim);
  p.patch_pos = init.normal("patch_pos", {cfg.patches, cfg.dim}, 0.1);
  return p;
}

Tensor embed_question(Tape& tape, std::span<const std::int32_t> tokens, std::size_t batch,
                      const EncoderParams& p) {
  const std::size_t len = p.question_pos.dim(0);
  const std::size_t vocab = p.token_table.dim(0);
  if (batch == 0 || tokens.size() != batch * len) {
    throw ShapeError("embed_question: " + std::to_string(tokens.size()) + " tokens for batch " +
                     std::to_string(batch) + " of length " + std::to_string(len));
  }
  std::vector<std::vector<std::size_t>> idx(batch, std::vector<std::size_t>(len));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t n = 0; n < len; ++n) {
      const std::int32_t id = tokens[b * len + n];
      if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
        throw std::out_of_range("embed_question: token id " + std::to_string(id) +
                                " outside vocabulary of " + std::to_string(vocab));
      }
      idx[b][n] = static_cast<std::size_t>(id);
    }
  }
  const Tensor table = ops::reshape(tape, p.token_table, {1, vocab, p.token_table.dim(1)});
  return ops::add(tape, ops::gather_rows(tape, table, idx), p.question_pos);
}

Tensor embed_patches(Tape& tape, std::span<const double> grid, std::size_t batch,
                     const EncoderParams& p, Modality modality) {
  const Tensor& proj = modality == Modality::kOptical ? p.optical_proj : p.sar_proj;
  if (!proj.defined()) {
    throw std::logic_error(std::string("embed_patches: model has no ") +
                           (modality == Modality::kOptical ? "optical" : "SAR") + " projection");
  }
  const std::size_t patches = p.patch_pos.dim(0);
  const std::size_t channels = proj.dim(0);
  const std::size_t per_cell = modality == Modality::kOptical ? channels : 1;
  if (batch == 0 || grid.size() != batch * patches * per_cell) {
    throw ShapeError("embed_patches: " + std::to_string(grid.size()) + " values for batch " +
                     std::to_string(batch) + " of " + std::to_string(patches) + " cells x " +
                     std::to_string(per_cell) + " channels");
  }
  std::vector<double> cells(batch * patches * channels);
  for (std::size_t c = 0; c < batch * patches; ++c) {
    for (std::size_t ch = 0; ch < channels; ++ch) {
      cells[c * channels + ch] = per_cell == 1 ? grid[c] : grid[c * channels + ch];
    }
  }
  const Tensor raw({batch, patches, channels}, std::move(cells));
  return ops::add(tape, ops::matmul(tape, raw, proj), p.patch_pos);
}

}  // namespace tgfnet
