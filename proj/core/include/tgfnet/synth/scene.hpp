#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tgfnet/rng.hpp"
#include "tgfnet/synth/vocab.hpp"

namespace tgfnet::synth {

struct SynthConfig {
  std::size_t grid_side = 4;
  // Probability that a category appears at all; present categories draw
  // their object count uniformly from [1, max_per_category].
  double object_density = 0.5;
  std::size_t max_per_category = 5;
  // Fraction of scenes whose optical image is degraded, and the share of
  // those that are cloud (the rest are low-light).
  double degradation_rate = 0.5;
  double cloud_share = 0.5;
  double cloud_min_intensity = 0.85;
  std::size_t cloud_min_side = 2;
  double low_light_min = 0.04;
  double low_light_max = 0.15;
  double low_light_noise = 0.03;
  std::size_t speckle_looks = 4;
  std::size_t question_budget = 24;

  void validate() const;
};

inline constexpr std::size_t kColorCount = 3;

struct SceneObject {
  Category category;
  std::size_t color;  // palette index within the category
  std::size_t cell;   // row-major cell index
};

// A grid scene. Every object occupies exactly one cell; unoccupied cells are
// bare ground.
struct Scene {
  std::uint64_t id = 0;
  std::size_t grid_side = 4;
  std::vector<SceneObject> objects;
  bool urban = false;

  std::size_t cells() const { return grid_side * grid_side; }
  std::size_t count(Category c) const;
  // Object occupying each cell, if any.
  std::vector<std::optional<SceneObject>> occupancy() const;
};

enum class DegradationKind { kNone, kCloud, kLowLight };

struct CloudRect {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  bool covers(std::size_t r, std::size_t c) const {
    return r >= row && r < row + height && c >= col && c < col + width;
  }
  bool operator==(const CloudRect&) const = default;
};

struct Degradation {
  DegradationKind kind = DegradationKind::kNone;
  CloudRect cloud;
  double attenuation = 1.0;  // in (0, 1]
  std::uint64_t speckle_seed = 0;
  std::uint64_t noise_seed = 0;

  bool cloudy() const { return kind == DegradationKind::kCloud; }
  bool low_light() const { return kind == DegradationKind::kLowLight; }
  bool degraded() const { return kind != DegradationKind::kNone; }
  bool operator==(const Degradation&) const = default;
};

std::string_view degradation_name(DegradationKind k);
DegradationKind parse_degradation(std::string_view name);

// Optical lookup table, 8-bit RGB; entry value / 256 is the rendered channel.
// Index [category][color]; bare ground uses kGroundRgb.
inline constexpr std::array<std::array<std::array<int, 3>, kColorCount>, kCategoryCount> kOpticalPalette{{
    {{{20, 40, 120}, {30, 110, 130}, {60, 80, 70}}},     // water
    {{{180, 60, 50}, {140, 140, 150}, {210, 205, 200}}},  // building
    {{{30, 100, 40}, {100, 170, 70}, {110, 125, 45}}},    // vegetation
    {{{60, 60, 65}, {175, 175, 165}, {95, 75, 60}}},      // road
}};
inline constexpr std::array<int, 3> kGroundRgb{150, 120, 90};

// Mean SAR backscatter per category and for bare ground, before speckle.
inline constexpr std::array<double, kCategoryCount> kSarBackscatter{0.04, 0.85, 0.45, 0.12};
inline constexpr double kGroundBackscatter = 0.25;

// Renders are quantized to multiples of 1/256 in [0, 255/256].
double quantize(double v);

Scene generate_scene(Rng& rng, const SynthConfig& cfg, std::uint64_t id = 0);
Scene generate_scene(std::uint64_t seed, const SynthConfig& cfg, std::uint64_t id = 0);
Degradation sample_degradation(Rng& rng, const SynthConfig& cfg);

// Unit-mean multiplicative speckle: Gamma(L, 1/L) as the mean of L unit
// exponentials.
double speckle_factor(Rng& rng, std::size_t looks);

// cells x 3 channel values, row-major cells.
std::vector<double> render_optical(const Scene& scene, const Degradation& deg, const SynthConfig& cfg);
// cells single-channel intensities.
std::vector<double> render_sar(const Scene& scene, const Degradation& deg, const SynthConfig& cfg);

}  // namespace tgfnet::synth
