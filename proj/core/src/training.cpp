#include "tgfnet/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tgfnet/synth/vocab.hpp"

namespace tgfnet {

Batch make_batch(std::span<const synth::SynthSample> samples, std::span<const std::size_t> indices,
                 const ModelConfig& cfg) {
  Batch b;
  b.size = indices.size();
  const std::size_t n = cfg.question_len;
  const std::size_t cells = cfg.patches();
  b.tokens.assign(b.size * n, synth::kPadToken);
  b.optical.reserve(b.size * cells * cfg.cell_channels);
  b.sar.reserve(b.size * cells);
  for (std::size_t i = 0; i < b.size; ++i) {
    const auto& s = samples[indices[i]];
    if (s.question.size() > n) {
      throw std::invalid_argument("question of scene " + std::to_string(s.scene_id) + " has " +
                                  std::to_string(s.question.size()) + " tokens, more than question_len " +
                                  std::to_string(n));
    }
    if (s.optical.size() != cells * cfg.cell_channels || s.sar.size() != cells) {
      throw std::invalid_argument("sample grid of scene " + std::to_string(s.scene_id) +
                                  " does not match the model grid");
    }
    for (std::int32_t t : s.question) {
      if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab_size) {
        throw std::invalid_argument("token id " + std::to_string(t) + " outside vocab_size");
      }
    }
    std::copy(s.question.begin(), s.question.end(), b.tokens.begin() + static_cast<std::ptrdiff_t>(i * n));
    b.optical.insert(b.optical.end(), s.optical.begin(), s.optical.end());
    b.sar.insert(b.sar.end(), s.sar.begin(), s.sar.end());
    b.answers.push_back(s.answer_id);
    b.types.push_back(static_cast<std::size_t>(s.type));
  }
  return b;
}

Batch make_batch(std::span<const synth::SynthSample> samples, const ModelConfig& cfg) {
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return make_batch(samples, idx, cfg);
}

EvalReport evaluate(const TgfNet& model, std::span<const synth::SynthSample> samples, std::size_t batch_size) {
  if (samples.empty()) throw std::invalid_argument("cannot evaluate an empty sample set");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  EvalReport r;
  r.count = samples.size();
  std::vector<std::size_t> targets;
  std::vector<std::size_t> types;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const auto chunk = samples.subspan(start, std::min(batch_size, samples.size() - start));
    const Batch b = make_batch(chunk, model.config());
    const auto pred = inference(model, b);
    r.predictions.insert(r.predictions.end(), pred.begin(), pred.end());
    targets.insert(targets.end(), b.answers.begin(), b.answers.end());
    types.insert(types.end(), b.types.begin(), b.types.end());
  }
  r.oa = compute_oa(r.predictions, targets);
  r.aa = compute_aa(r.predictions, targets, types);
  std::map<std::string, std::size_t> correct;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::string name(synth::question_type_name(static_cast<synth::QuestionType>(types[i])));
    ++r.per_type_count[name];
    correct[name] += r.predictions[i] == targets[i] ? 1 : 0;
  }
  for (const auto& [name, n] : r.per_type_count) {
    r.per_type[name] = static_cast<double>(correct[name]) / static_cast<double>(n);
  }
  return r;
}

std::string metrics_header() { return "epoch\tstep\ttrain_loss\ttrain_oa\tval_oa\tval_aa\twall_seconds"; }

std::string format_metrics(const MetricsRow& row) {
  std::ostringstream os;
  os.precision(17);
  os << row.epoch << '\t' << row.step << '\t' << row.train_loss << '\t' << row.train_oa << '\t' << row.val_oa
     << '\t' << row.val_aa;
  os.precision(6);
  os << '\t' << row.wall_seconds;
  return os.str();
}

TrainResult train(TgfNet& model, std::span<const synth::SynthSample> train_set,
                  std::span<const synth::SynthSample> val_set, const TrainOptions& options,
                  const MetricsSink& sink) {
  if (options.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (options.train_subset > 0 && options.train_subset < train_set.size()) {
    train_set = train_set.first(options.train_subset);
  }
  if (train_set.empty()) throw std::invalid_argument("training split is empty");
  const auto start = std::chrono::steady_clock::now();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<Tensor> params = model.params().tensors();
  nn::AdamState adam;
  TrainResult result;
  std::vector<std::size_t> order(train_set.size());
  double loss_sum = 0.0;
  std::size_t loss_steps = 0;
  bool done = false;

  auto emit_row = [&](std::size_t epoch) {
    MetricsRow row;
    row.epoch = epoch;
    row.step = result.steps;
    row.train_loss = loss_steps ? loss_sum / static_cast<double>(loss_steps) : nan;
    row.train_oa = options.eval_train ? evaluate(model, train_set).oa : nan;
    if (!val_set.empty()) {
      const EvalReport v = evaluate(model, val_set);
      row.val_oa = v.oa;
      row.val_aa = v.aa;
    } else {
      row.val_oa = row.val_aa = nan;
    }
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    loss_sum = 0.0;
    loss_steps = 0;
    result.history.push_back(row);
    if (sink) sink(row);
    if (options.target_train_oa > 0.0 && row.train_oa >= options.target_train_oa) done = true;
  };

  for (std::size_t epoch = 1; epoch <= options.epochs && !done; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(options.seed, epoch));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);

    for (std::size_t pos = 0; pos < order.size(); pos += options.batch_size) {
      const std::span<const std::size_t> idx(order.data() + pos, std::min(options.batch_size, order.size() - pos));
      const Batch batch = make_batch(train_set, idx, model.config());
      Tape tape;
      model.params().zero_grad();
      const ModelOutput out = model.forward(tape, batch);
      const Tensor loss = total_loss(tape, out.experts, batch.answers, model.config().lambdas);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw TrainingError("non-finite loss " + std::to_string(value) + " at epoch " + std::to_string(epoch) +
                            ", step " + std::to_string(result.steps + 1));
      }
      tape.backward(loss);
      nn::adam_step(params, adam, options.adam);
      ++result.steps;
      loss_sum += value;
      ++loss_steps;
      if (options.max_steps > 0 && result.steps >= options.max_steps) {
        done = true;
        break;
      }
    }
    if (done || epoch % options.eval_every == 0 || epoch == options.epochs) emit_row(epoch);
  }
  return result;
}

}  // namespace tgfnet
