#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tgfnet/tensor.hpp"

namespace tgfnet::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;
};

// One bias-corrected Adam update over `params`, reading each tensor's
// gradient (absent gradients count as zero). The step counter is incremented
// before the update.
void adam_step(std::span<Tensor> params, AdamState& state, const AdamOptions& options);

}  // namespace tgfnet::nn
