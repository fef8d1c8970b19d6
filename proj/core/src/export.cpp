#include "tgfnet/export.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tgfnet {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

void write_pgm(std::ostream& out, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> pixels) {
  if (pixels.size() != width * height) {
    throw std::invalid_argument("write_pgm: " + std::to_string(pixels.size()) + " pixels for a " +
                                std::to_string(width) + "x" + std::to_string(height) + " image");
  }
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

std::vector<std::uint8_t> region_heatmap(const cfar::RegionCodebook& codebook,
                                         std::span<const double> scores) {
  if (scores.size() != codebook.region_count()) {
    throw std::invalid_argument("region_heatmap: " + std::to_string(scores.size()) + " scores for " +
                                std::to_string(codebook.region_count()) + " regions");
  }
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double range = *hi - *lo;
  std::vector<std::uint8_t> out(codebook.patch_count(), 0);
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (range > 0.0) {
      const double t = (scores[codebook.region_of(p)] - *lo) / range;
      out[p] = static_cast<std::uint8_t>(std::lround(t * 255.0));
    }
  }
  return out;
}

std::vector<ExportedFile> export_attention(const TgfNet& model, const Batch& single_sample,
                                           const std::filesystem::path& dir) {
  if (single_sample.size != 1) throw std::invalid_argument("export_attention expects a batch of one sample");
  const ModelConfig& c = model.config();
  Tape tape(Tape::Mode::kInference);
  const ModelOutput out = model.forward(tape, single_sample);
  std::filesystem::create_directories(dir);
  const cfar::RegionCodebook codebook(c.grid_side, c.region_height, c.region_width);
  std::vector<ExportedFile> files;
  const char* modality[2] = {"optical", "sar"};
  for (std::size_t b = 0; b < out.routing.blocks.size(); ++b) {
    for (std::size_t m = 0; m < 2; ++m) {
      const cfar::RoutingEntry& e = out.routing.blocks[b][m];
      const std::string stem = "block" + std::to_string(b + 1) + "_" + modality[m] + "_regions";
      const auto scores = e.scores.values();
      const auto& selected = e.selected.at(0);
      {
        auto csv = open_out(dir / (stem + ".csv"));
        csv << "region,score,selected\n";
        for (std::size_t r = 0; r < scores.size(); ++r) {
          const bool sel = std::find(selected.begin(), selected.end(), r) != selected.end();
          csv << r << ',' << format_double(scores[r]) << ',' << (sel ? 1 : 0) << '\n';
        }
        files.push_back({dir / (stem + ".csv"), "csv"});
      }
      auto pgm = open_out(dir / (stem + ".pgm"));
      write_pgm(pgm, c.grid_side, c.grid_side, region_heatmap(codebook, scores));
      files.push_back({dir / (stem + ".pgm"), "pgm"});
    }
  }
  if (out.experts.gates.defined()) {
    auto csv = open_out(dir / "gates.csv");
    csv << "optical,sar,fused\n";
    const auto g = out.experts.gates.values();
    csv << format_double(g[0]) << ',' << format_double(g[1]) << ',' << format_double(g[2]) << '\n';
    files.push_back({dir / "gates.csv", "csv"});
  }
  return files;
}

}  // namespace tgfnet
