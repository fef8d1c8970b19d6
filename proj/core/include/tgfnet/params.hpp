#pragma once

#include <map>
#include <string>
#include <vector>

#include "tgfnet/rng.hpp"
#include "tgfnet/tensor.hpp"

namespace tgfnet {

// Named trainable tensors, iterated in lexicographic name order so that
// optimizer updates and checkpoints are deterministic.
class ParameterStore {
 public:
  Tensor add(const std::string& name, Tensor value);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  const std::map<std::string, Tensor>& entries() const { return params_; }
  std::vector<Tensor> tensors() const;
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::map<std::string, Tensor> params_;
};

// Registers parameters under a dotted prefix and draws their initial values
// from a shared generator, in creation order.
class ParamInit {
 public:
  ParamInit(ParameterStore& store, Rng& rng, std::string prefix = "")
      : store_(&store), rng_(&rng), prefix_(std::move(prefix)) {}

  ParamInit scope(const std::string& name) const;

  // Glorot-uniform rows x cols matrix.
  Tensor xavier(const std::string& name, std::size_t rows, std::size_t cols);
  Tensor normal(const std::string& name, Shape shape, double stddev);
  Tensor constant(const std::string& name, Shape shape, double value);

 private:
  std::string full_name(const std::string& name) const;

  ParameterStore* store_;
  Rng* rng_;
  std::string prefix_;
};

}  // namespace tgfnet
