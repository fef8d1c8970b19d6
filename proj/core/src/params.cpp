#include "tgfnet/params.hpp"

#include <cmath>
#include <stdexcept>

namespace tgfnet {

Tensor ParameterStore::add(const std::string& name, Tensor value) {
  if (!params_.emplace(name, value).second) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  value.set_requires_grad(true);
  return value;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

std::vector<Tensor> ParameterStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, t] : params_) {
    Tensor handle = t;
    handle.zero_grad();
  }
}

ParamInit ParamInit::scope(const std::string& name) const {
  return ParamInit(*store_, *rng_, full_name(name));
}

std::string ParamInit::full_name(const std::string& name) const {
  return prefix_.empty() ? name : prefix_ + "." + name;
}

Tensor ParamInit::xavier(const std::string& name, std::size_t rows, std::size_t cols) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng_->uniform(-bound, bound);
  return store_->add(full_name(name), Tensor({rows, cols}, std::move(v)));
}

Tensor ParamInit::normal(const std::string& name, Shape shape, double stddev) {
  std::vector<double> v(numel(shape));
  for (double& x : v) x = stddev * rng_->normal();
  return store_->add(full_name(name), Tensor(std::move(shape), std::move(v)));
}

Tensor ParamInit::constant(const std::string& name, Shape shape, double value) {
  return store_->add(full_name(name), Tensor::full(std::move(shape), value));
}

}  // namespace tgfnet
