#include "tgfnet/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tgfnet::synth {

void SynthConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid synth config: ") + what);
  };
  require(grid_side >= 2 && grid_side % 2 == 0, "grid_side must be even and >= 2");
  require(object_density >= 0.0 && object_density <= 1.0, "object_density must lie in [0, 1]");
  require(max_per_category >= 1 && max_per_category <= 9, "max_per_category must lie in [1, 9]");
  require(max_per_category <= grid_side * grid_side, "grid too small for max_per_category objects");
  require(degradation_rate >= 0.0 && degradation_rate <= 1.0, "degradation_rate must lie in [0, 1]");
  require(cloud_share >= 0.0 && cloud_share <= 1.0, "cloud_share must lie in [0, 1]");
  require(cloud_min_intensity > 0.0 && cloud_min_intensity <= 1.0,
          "cloud_min_intensity must lie in (0, 1]");
  require(cloud_min_side >= 1 && cloud_min_side <= grid_side, "cloud_min_side must lie in [1, grid_side]");
  require(low_light_min > 0.0 && low_light_min <= low_light_max && low_light_max <= 1.0,
          "low-light attenuation range must satisfy 0 < min <= max <= 1");
  require(low_light_noise >= 0.0, "low_light_noise must be non-negative");
  require(speckle_looks >= 1, "speckle_looks must be positive");
  require(question_budget >= 1, "question_budget must be positive");
}

std::size_t Scene::count(Category c) const {
  return static_cast<std::size_t>(std::count_if(
      objects.begin(), objects.end(), [c](const SceneObject& o) { return o.category == c; }));
}

std::vector<std::optional<SceneObject>> Scene::occupancy() const {
  std::vector<std::optional<SceneObject>> out(cells());
  for (const auto& o : objects) out.at(o.cell) = o;
  return out;
}

std::string_view degradation_name(DegradationKind k) {
  switch (k) {
    case DegradationKind::kNone: return "none";
    case DegradationKind::kCloud: return "cloud";
    case DegradationKind::kLowLight: return "low_light";
  }
  return "?";
}

DegradationKind parse_degradation(std::string_view name) {
  if (name == "none") return DegradationKind::kNone;
  if (name == "cloud") return DegradationKind::kCloud;
  if (name == "low_light") return DegradationKind::kLowLight;
  throw std::invalid_argument("unknown degradation '" + std::string(name) + "'");
}

double quantize(double v) {
  const double clamped = std::clamp(v, 0.0, 255.0 / 256.0);
  return std::round(clamped * 256.0) / 256.0;
}

Scene generate_scene(Rng& rng, const SynthConfig& cfg, std::uint64_t id) {
  Scene scene;
  scene.id = id;
  scene.grid_side = cfg.grid_side;
  std::array<std::size_t, kCategoryCount> counts{};
  // Redraw the whole count vector until the objects fit on the grid.
  do {
    for (auto& n : counts) {
      n = rng.bernoulli(cfg.object_density) ? 1 + rng.uniform_int(cfg.max_per_category) : 0;
    }
  } while (std::accumulate(counts.begin(), counts.end(), std::size_t{0}) > scene.cells());
  // Random distinct cells: partial Fisher-Yates over the grid.
  std::vector<std::size_t> cells(scene.cells());
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  std::size_t next = 0;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i) {
      const std::size_t pick = next + rng.uniform_int(cells.size() - next);
      std::swap(cells[next], cells[pick]);
      scene.objects.push_back(
          SceneObject{kCategories[c], static_cast<std::size_t>(rng.uniform_int(kColorCount)), cells[next]});
      ++next;
    }
  }
  const std::size_t built = scene.count(Category::kBuilding) + scene.count(Category::kRoad);
  const std::size_t natural = scene.count(Category::kWater) + scene.count(Category::kVegetation);
  scene.urban = built >= natural && built > 0;
  return scene;
}

Scene generate_scene(std::uint64_t seed, const SynthConfig& cfg, std::uint64_t id) {
  Rng rng(seed);
  return generate_scene(rng, cfg, id);
}

Degradation sample_degradation(Rng& rng, const SynthConfig& cfg) {
  Degradation d;
  // Seeds are drawn unconditionally so that the SAR speckle of a scene does
  // not depend on which degradation it received.
  d.speckle_seed = rng.next_u64();
  d.noise_seed = rng.next_u64();
  if (!rng.bernoulli(cfg.degradation_rate)) return d;
  if (rng.bernoulli(cfg.cloud_share)) {
    d.kind = DegradationKind::kCloud;
    const std::size_t span = cfg.grid_side - cfg.cloud_min_side + 1;
    d.cloud.height = cfg.cloud_min_side + rng.uniform_int(span);
    d.cloud.width = cfg.cloud_min_side + rng.uniform_int(span);
    d.cloud.row = rng.uniform_int(cfg.grid_side - d.cloud.height + 1);
    d.cloud.col = rng.uniform_int(cfg.grid_side - d.cloud.width + 1);
  } else {
    d.kind = DegradationKind::kLowLight;
    d.attenuation = rng.uniform(cfg.low_light_min, cfg.low_light_max);
  }
  return d;
}

double speckle_factor(Rng& rng, std::size_t looks) {
  double sum = 0.0;
  for (std::size_t i = 0; i < looks; ++i) sum -= std::log(1.0 - rng.uniform());
  return sum / static_cast<double>(looks);
}

std::vector<double> render_optical(const Scene& scene, const Degradation& deg,
                                   const SynthConfig& cfg) {
  const std::size_t g = scene.grid_side;
  std::vector<double> out(scene.cells() * 3);
  const auto occ = scene.occupancy();
  for (std::size_t cell = 0; cell < scene.cells(); ++cell) {
    const auto& rgb = occ[cell] ? kOpticalPalette[static_cast<std::size_t>(occ[cell]->category)][occ[cell]->color]
                                : kGroundRgb;
    for (std::size_t ch = 0; ch < 3; ++ch) out[cell * 3 + ch] = rgb[ch] / 256.0;
  }
  if (!deg.degraded()) return out;
  Rng noise(deg.noise_seed);
  for (std::size_t cell = 0; cell < scene.cells(); ++cell) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      double& v = out[cell * 3 + ch];
      if (deg.cloudy()) {
        if (deg.cloud.covers(cell / g, cell % g)) v = noise.uniform(cfg.cloud_min_intensity, 1.0);
      } else {
        v = v * deg.attenuation + cfg.low_light_noise * noise.normal();
      }
      v = quantize(v);
    }
  }
  return out;
}

std::vector<double> render_sar(const Scene& scene, const Degradation& deg, const SynthConfig& cfg) {
  std::vector<double> out(scene.cells());
  const auto occ = scene.occupancy();
  Rng speckle(deg.speckle_seed);
  for (std::size_t cell = 0; cell < scene.cells(); ++cell) {
    const double mean = occ[cell] ? kSarBackscatter[static_cast<std::size_t>(occ[cell]->category)]
                                  : kGroundBackscatter;
    out[cell] = quantize(mean * speckle_factor(speckle, cfg.speckle_looks));
  }
  return out;
}

}  // namespace tgfnet::synth
