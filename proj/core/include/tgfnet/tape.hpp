#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tgfnet/tensor.hpp"

namespace tgfnet {

// Receives the recorded output (values and gradient) and accumulates into
// the inputs captured by the rule.
using BackwardFn = std::function<void(const TensorNode& out)>;

// Ordered record of the forward computation. Not thread-safe; use one tape per
// model replica.
class Tape {
 public:
  enum class Mode { kRecord, kInference };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::kRecord; }
  std::size_t size() const { return entries_.size(); }

  // Wraps freshly computed values as an op output. If recording and any input
  // requires a gradient, the output is marked differentiable and `fn` is kept.
  Tensor record(Shape shape, std::vector<double> values,
                std::initializer_list<const Tensor*> inputs, BackwardFn fn);
  Tensor record(Shape shape, std::vector<double> values,
                std::span<const Tensor> inputs, BackwardFn fn);

  // Seeds d(loss)/d(loss) = 1 and replays every entry in reverse order.
  // Returns the number of entries visited.
  std::size_t backward(const Tensor& loss);

  void clear() { entries_.clear(); }

 private:
  struct Entry {
    std::shared_ptr<TensorNode> output;
    BackwardFn fn;
  };

  Tensor finish(Shape shape, std::vector<double> values, bool needs_grad,
                BackwardFn fn);

  Mode mode_;
  std::vector<Entry> entries_;
};

inline std::size_t backward(Tape& tape, const Tensor& loss) {
  return tape.backward(loss);
}

}  // namespace tgfnet
