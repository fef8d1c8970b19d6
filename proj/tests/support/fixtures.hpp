#pragma once

#include <vector>

#include "gradcheck.hpp"
#include "tgfnet/params.hpp"

namespace tgfnet::fixtures {

// Overwrites every parameter with uniform(-scale, scale) noise so that no
// gradient check runs at a special point (unit gains, zero biases).
inline void randomize(ParameterStore& store, Rng& rng, double scale = 0.5) {
  for (const auto& [name, t] : store.entries()) {
    Tensor h = t;
    for (double& v : h.mutable_values()) v = rng.uniform(-scale, scale);
  }
}

inline std::vector<Tensor> with_params(std::vector<Tensor> inputs, const ParameterStore& store) {
  for (const Tensor& t : store.tensors()) inputs.push_back(t);
  return inputs;
}

inline Tensor identity(std::size_t n) {
  Tensor t = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.mutable_values()[i * n + i] = 1.0;
  return t;
}

}  // namespace tgfnet::fixtures
