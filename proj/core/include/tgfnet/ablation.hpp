#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tgfnet/run_config.hpp"
#include "tgfnet/training.hpp"

namespace tgfnet {

struct AblationCell {
  Variant variant = Variant::kFull;
  std::uint64_t seed = 0;
  double oa = 0.0;
  double aa = 0.0;
  std::size_t steps = 0;
  double wall_seconds = 0.0;
};

// Trains `variant` from scratch with model and shuffle seed `seed` on the
// train samples, then scores the eval samples.
AblationCell run_ablation_cell(const RunConfig& cfg, Variant variant, std::uint64_t seed,
                               std::span<const synth::SynthSample> train_set,
                               std::span<const synth::SynthSample> eval_set);

using AblationSink = std::function<void(const AblationCell&)>;

// Every variant crossed with seeds base_seed .. base_seed + seeds - 1, in
// variant-major order.
std::vector<AblationCell> run_ablation(const RunConfig& cfg, std::span<const Variant> variants,
                                       std::size_t seeds, std::uint64_t base_seed,
                                       std::span<const synth::SynthSample> train_set,
                                       std::span<const synth::SynthSample> eval_set,
                                       const AblationSink& sink = {});

struct VariantSummary {
  Variant variant = Variant::kFull;
  std::size_t runs = 0;
  double mean_oa = 0.0;
  double mean_aa = 0.0;
};

// Per-variant means in first-appearance order.
std::vector<VariantSummary> summarize(std::span<const AblationCell> cells);

// Tab-separated "variant seed oa aa" rows followed by one "mean" row per
// variant.
std::string format_ablation_table(std::span<const AblationCell> cells);

}  // namespace tgfnet
