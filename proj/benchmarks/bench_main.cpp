#include <benchmark/benchmark.h>

#include "tgfnet/adam.hpp"
#include "tgfnet/model.hpp"
#include "tgfnet/nn.hpp"
#include "tgfnet/ops.hpp"
#include "tgfnet/training.hpp"

using namespace tgfnet;

namespace {

Tensor random_tensor(Rng& rng, Shape shape) {
  std::vector<double> v(numel(shape));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor(std::move(shape), std::move(v));
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_tensor(rng, {n, n});
  const Tensor b = random_tensor(rng, {n, n});
  for (auto _ : state) {
    Tape tape(Tape::Mode::kInference);
    benchmark::DoNotOptimize(ops::matmul(tape, a, b));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_CrossAttention(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  ParameterStore store;
  const auto p = nn::AttentionParams::create(ParamInit(store, rng), d, 4);
  const Tensor q = random_tensor(rng, {32, 14, d});
  const Tensor kv = random_tensor(rng, {32, 16, d});
  for (auto _ : state) {
    Tape tape(Tape::Mode::kInference);
    benchmark::DoNotOptimize(nn::multi_head_cross_attention(tape, q, kv, p));
  }
}
BENCHMARK(BM_CrossAttention)->Arg(16)->Arg(32)->Arg(64);

// One forward, backward and Adam update on a batch of 32 at desk scale.
void BM_TrainStep(benchmark::State& state) {
  ModelConfig c;
  c.variant = static_cast<Variant>(state.range(0));
  c.question_len = 14;
  TgfNet model(c, 3);
  const auto samples = synth::generate_dataset(5, 4, synth::SynthConfig{});
  std::vector<std::size_t> idx(32);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i % samples.size();
  const Batch batch = make_batch(samples, idx, c);
  std::vector<Tensor> params = model.params().tensors();
  nn::AdamState adam;
  const nn::AdamOptions opt;
  for (auto _ : state) {
    Tape tape;
    model.params().zero_grad();
    const ModelOutput out = model.forward(tape, batch);
    const Tensor loss = total_loss(tape, out.experts, batch.answers, c.lambdas);
    tape.backward(loss);
    nn::adam_step(params, adam, opt);
  }
  state.SetLabel(std::string(variant_name(c.variant)));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(Variant::kExp1))
    ->Arg(static_cast<int>(Variant::kExp2))
    ->Arg(static_cast<int>(Variant::kFull))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
