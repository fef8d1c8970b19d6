#include "tgfnet/tensor.hpp"

#include <numeric>
#include <sstream>

#include "tgfnet/tape.hpp"

namespace tgfnet {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::span<double> TensorNode::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto extent : shape) {
    if (extent == 0) throw ShapeError("tensor extents must be positive: " + to_string(shape));
  }
  if (numel(shape) != values.size()) {
    throw ShapeError("shape " + to_string(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  node_ = std::make_shared<TensorNode>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar tensor " + to_string(shape()));
  return node_->value[0];
}

Tensor Tensor::clone() const {
  return Tensor(node_->shape, node_->value, false);
}

Tensor Tape::finish(Shape shape, std::vector<double> values, bool needs_grad,
                    BackwardFn fn) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  if (recording() && needs_grad) {
    node->requires_grad = true;
    entries_.push_back(Entry{node, std::move(fn)});
  }
  return Tensor(std::move(node));
}

Tensor Tape::record(Shape shape, std::vector<double> values,
                    std::initializer_list<const Tensor*> inputs, BackwardFn fn) {
  bool needs_grad = false;
  for (const Tensor* t : inputs) needs_grad = needs_grad || t->requires_grad();
  return finish(std::move(shape), std::move(values), needs_grad, std::move(fn));
}

Tensor Tape::record(Shape shape, std::vector<double> values,
                    std::span<const Tensor> inputs, BackwardFn fn) {
  bool needs_grad = false;
  for (const Tensor& t : inputs) needs_grad = needs_grad || t.requires_grad();
  return finish(std::move(shape), std::move(values), needs_grad, std::move(fn));
}

std::size_t Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward requires a scalar loss, got " +
                     (loss.defined() ? to_string(loss.shape()) : std::string("undefined")));
  }
  auto seed = loss.node()->grad_buffer();
  seed[0] += 1.0;
  std::size_t visited = 0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    ++visited;
    const auto& out = *it->output;
    if (out.grad.empty()) continue;
    it->fn(out);
  }
  return visited;
}

}  // namespace tgfnet
