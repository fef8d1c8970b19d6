#include "tgfnet/ablation.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "tgfnet/export.hpp"

namespace tgfnet {

AblationCell run_ablation_cell(const RunConfig& cfg, Variant variant, std::uint64_t seed,
                               std::span<const synth::SynthSample> train_set,
                               std::span<const synth::SynthSample> eval_set) {
  ModelConfig mc = cfg.model;
  mc.variant = variant;
  TrainOptions options = cfg.train;
  options.seed = seed;
  options.eval_train = false;
  options.eval_every = options.epochs;
  const auto t0 = std::chrono::steady_clock::now();
  TgfNet model(mc, seed);
  const TrainResult r = train(model, train_set, {}, options);
  const EvalReport e = evaluate(model, eval_set);
  AblationCell cell;
  cell.variant = variant;
  cell.seed = seed;
  cell.oa = e.oa;
  cell.aa = e.aa;
  cell.steps = r.steps;
  cell.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return cell;
}

std::vector<AblationCell> run_ablation(const RunConfig& cfg, std::span<const Variant> variants,
                                       std::size_t seeds, std::uint64_t base_seed,
                                       std::span<const synth::SynthSample> train_set,
                                       std::span<const synth::SynthSample> eval_set,
                                       const AblationSink& sink) {
  std::vector<AblationCell> cells;
  for (Variant v : variants) {
    for (std::size_t s = 0; s < seeds; ++s) {
      cells.push_back(run_ablation_cell(cfg, v, base_seed + s, train_set, eval_set));
      if (sink) sink(cells.back());
    }
  }
  return cells;
}

std::vector<VariantSummary> summarize(std::span<const AblationCell> cells) {
  std::vector<VariantSummary> out;
  for (const auto& c : cells) {
    auto it = std::find_if(out.begin(), out.end(), [&](const VariantSummary& s) { return s.variant == c.variant; });
    if (it == out.end()) {
      out.push_back({c.variant, 0, 0.0, 0.0});
      it = out.end() - 1;
    }
    ++it->runs;
    it->mean_oa += c.oa;
    it->mean_aa += c.aa;
  }
  for (auto& s : out) {
    s.mean_oa /= static_cast<double>(s.runs);
    s.mean_aa /= static_cast<double>(s.runs);
  }
  return out;
}

std::string format_ablation_table(std::span<const AblationCell> cells) {
  std::ostringstream os;
  os << "variant\tseed\toa\taa\n";
  for (const auto& c : cells) {
    os << variant_name(c.variant) << '\t' << c.seed << '\t' << format_double(c.oa) << '\t' << format_double(c.aa)
       << '\n';
  }
  for (const auto& s : summarize(cells)) {
    os << variant_name(s.variant) << "\tmean\t" << format_double(s.mean_oa) << '\t' << format_double(s.mean_aa)
       << '\n';
  }
  return os.str();
}

}  // namespace tgfnet
