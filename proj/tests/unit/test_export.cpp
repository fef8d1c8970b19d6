#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "model_fixtures.hpp"
#include "tgfnet/ablation.hpp"
#include "tgfnet/export.hpp"

namespace tgfnet {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tgfnet_export_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Pgm, HeaderAndBody) {
  std::ostringstream os;
  const std::vector<std::uint8_t> px = {0, 128, 255, 7, 8, 9};
  write_pgm(os, 3, 2, px);
  const std::string s = os.str();
  ASSERT_EQ(s.substr(0, 11), "P5\n3 2\n255\n");
  EXPECT_EQ(s.size(), 11u + 6u);
  EXPECT_EQ(static_cast<unsigned char>(s[12]), 128);
  EXPECT_THROW(write_pgm(os, 2, 2, px), std::invalid_argument);
}

TEST(Heatmap, ScalesRegionsOntoPatches) {
  const cfar::RegionCodebook cb(2, 1, 2);
  const std::vector<double> scores = {-1.0, 3.0};
  const auto px = region_heatmap(cb, scores);
  EXPECT_EQ(px, (std::vector<std::uint8_t>{0, 0, 255, 255}));
  const std::vector<double> flat = {2.0, 2.0};
  EXPECT_EQ(region_heatmap(cb, flat), (std::vector<std::uint8_t>(4, 0)));
  const std::vector<double> wrong = {1.0};
  EXPECT_THROW(region_heatmap(cb, wrong), std::invalid_argument);
}

TEST(ExportAttention, FilesMatchForwardPass) {
  const ModelConfig cfg = fixtures::tiny_config();
  const TgfNet model(cfg, 3);
  const Batch batch = fixtures::random_batch(cfg, 1, 11);
  const fs::path dir = scratch_dir("full");
  const auto files = export_attention(model, batch, dir);
  ASSERT_EQ(files.size(), 9u);

  Tape tape(Tape::Mode::kInference);
  const ModelOutput out = model.forward(tape, batch);
  const auto scores = out.routing.blocks[1][1].scores.values();
  std::istringstream csv(slurp(dir / "block2_sar_regions.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "region,score,selected");
  std::size_t rows = 0, selected = 0;
  while (std::getline(csv, line)) {
    std::istringstream ls(line);
    std::string r, v, s;
    std::getline(ls, r, ',');
    std::getline(ls, v, ',');
    std::getline(ls, s, ',');
    EXPECT_EQ(std::stoul(r), rows);
    EXPECT_NEAR(std::stod(v), scores[rows], 1e-9);
    selected += std::stoul(s);
    ++rows;
  }
  EXPECT_EQ(rows, scores.size());
  EXPECT_EQ(selected, cfg.top_k);

  const std::string pgm = slurp(dir / "block1_optical_regions.pgm");
  EXPECT_EQ(pgm.substr(0, 11), "P5\n2 2\n255\n");
  EXPECT_EQ(pgm.size(), 15u);

  std::istringstream gates(slurp(dir / "gates.csv"));
  std::getline(gates, line);
  EXPECT_EQ(line, "optical,sar,fused");
  std::getline(gates, line);
  std::istringstream gs(line);
  for (int i = 0; i < 3; ++i) {
    std::string g;
    std::getline(gs, g, ',');
    const double v = std::stod(g);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  fs::remove_all(dir);
}

TEST(ExportAttention, VariantsWriteWhatTheyHave) {
  const fs::path dir = scratch_dir("variants");
  const ModelConfig exp2 = fixtures::tiny_config(Variant::kExp2);
  const auto gated = export_attention(TgfNet(exp2, 3), fixtures::random_batch(exp2, 1, 2), dir / "exp2");
  ASSERT_EQ(gated.size(), 1u);
  EXPECT_EQ(gated[0].path.filename(), "gates.csv");
  const ModelConfig exp1 = fixtures::tiny_config(Variant::kExp1);
  const auto none = export_attention(TgfNet(exp1, 3), fixtures::random_batch(exp1, 1, 2), dir / "exp1");
  EXPECT_TRUE(none.empty());
  fs::remove_all(dir);
}

TEST(ExportAttention, RejectsBatches) {
  const ModelConfig cfg = fixtures::tiny_config();
  const TgfNet model(cfg, 3);
  EXPECT_THROW(export_attention(model, fixtures::random_batch(cfg, 2, 2), scratch_dir("x")),
               std::invalid_argument);
}

TEST(AblationTable, MeansFollowRows) {
  const std::vector<AblationCell> cells = {
      {Variant::kFull, 1, 0.5, 0.4, 0, 0.0},
      {Variant::kFull, 2, 0.7, 0.6, 0, 0.0},
      {Variant::kExp1, 1, 0.25, 0.25, 0, 0.0},
  };
  const auto sum = summarize(cells);
  ASSERT_EQ(sum.size(), 2u);
  EXPECT_EQ(sum[0].variant, Variant::kFull);
  EXPECT_EQ(sum[0].runs, 2u);
  EXPECT_DOUBLE_EQ(sum[0].mean_oa, 0.6);
  EXPECT_DOUBLE_EQ(sum[0].mean_aa, 0.5);
  const std::string table = format_ablation_table(cells);
  EXPECT_NE(table.find("exp1\tmean\t0.25\t0.25\n"), std::string::npos);
  EXPECT_EQ(table.rfind("variant\tseed\toa\taa\n", 0), 0u);
}

}  // namespace
}  // namespace tgfnet
