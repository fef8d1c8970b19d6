#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tgfnet/cfar.hpp"
#include "tgfnet/model.hpp"

namespace tgfnet {

// 17 significant digits, enough to read back the same double.
std::string format_double(double v);

// Binary greyscale image: "P5\n<w> <h>\n255\n" then w*h bytes, row-major.
void write_pgm(std::ostream& out, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> pixels);

// Region scores painted onto their patches and min-max scaled to 0..255
// (a constant score map is all zeros). Returns grid_side^2 bytes.
std::vector<std::uint8_t> region_heatmap(const cfar::RegionCodebook& codebook,
                                         std::span<const double> scores);

struct ExportedFile {
  std::filesystem::path path;
  std::string kind;  // "csv" or "pgm"
};

// Runs one sample through the model and writes, per refinement block and
// modality, block<b>_<modality>_regions.csv and .pgm, plus gates.csv when
// the variant has a gate. Returns the written files in order.
std::vector<ExportedFile> export_attention(const TgfNet& model, const Batch& single_sample,
                                           const std::filesystem::path& dir);

}  // namespace tgfnet
