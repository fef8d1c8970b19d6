#pragma once

#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgfnet/model.hpp"
#include "tgfnet/run_config.hpp"
#include "tgfnet/synth/dataset.hpp"

namespace tgfnet {

// Pads (with the pad token) or rejects questions longer than N.
Batch make_batch(std::span<const synth::SynthSample> samples, std::span<const std::size_t> indices,
                 const ModelConfig& cfg);
Batch make_batch(std::span<const synth::SynthSample> samples, const ModelConfig& cfg);

struct EvalReport {
  std::size_t count = 0;
  double oa = 0.0;
  double aa = 0.0;
  std::map<std::string, double> per_type;
  std::map<std::string, std::size_t> per_type_count;
  std::vector<std::size_t> predictions;
};

EvalReport evaluate(const TgfNet& model, std::span<const synth::SynthSample> samples,
                    std::size_t batch_size = 256);

struct MetricsRow {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double train_loss = 0.0;  // mean loss over the steps since the previous row
  double train_oa = 0.0;    // NaN when train evaluation is disabled
  double val_oa = 0.0;      // NaN without a validation split
  double val_aa = 0.0;
  double wall_seconds = 0.0;
};

std::string metrics_header();
std::string format_metrics(const MetricsRow& row);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  std::size_t steps = 0;
  std::vector<MetricsRow> history;
};

using MetricsSink = std::function<void(const MetricsRow&)>;

// Mini-batch Adam on the training samples in an order shuffled per epoch
// from options.seed. Throws TrainingError when the loss becomes non-finite.
TrainResult train(TgfNet& model, std::span<const synth::SynthSample> train_set,
                  std::span<const synth::SynthSample> val_set, const TrainOptions& options,
                  const MetricsSink& sink = {});

}  // namespace tgfnet
