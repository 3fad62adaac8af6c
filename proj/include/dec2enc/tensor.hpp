/*
 * Copyright 2026 The dec2enc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DEC2ENC_TENSOR_HPP_
#define DEC2ENC_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dec2enc {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Raised whenever operand shapes are incompatible. The message names every
// offending shape.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tape;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a backward pass touches the node
  bool requires_grad = false;
  // Set when the node is the output of an operation recorded on a tape.
  const Tape* producer = nullptr;
  std::size_t record_index = 0;
};

using NodePtr = std::shared_ptr<Node>;

}  // namespace detail

// Dense row-major array of doubles with optional gradient tracking.
//
// A Tensor is a handle: copies share the same storage. Operations in ops.hpp
// always allocate fresh outputs, so sharing is only observable through the
// explicit mutable accessors used by optimizers and gradient checkers.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }
  // Negative axes count from the back.
  std::size_t size(int axis) const;

  std::span<const double> data() const { return node_->data; }
  std::span<double> mutable_data() { return node_->data; }
  double operator[](std::size_t flat) const { return node_->data[flat]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool value);

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void zero_grad();

  // Fresh leaf holding a copy of the values.
  Tensor detach() const;

  const detail::NodePtr& node() const { return node_; }
  explicit Tensor(detail::NodePtr node) : node_(std::move(node)) {}

 private:
  detail::NodePtr node_;
};

// Ordered record of differentiable operations for reverse-mode AD.
//
// Operations record themselves on the tape installed by TapeScope on the
// calling thread; with no scope active nothing is recorded and results never
// require grad. Every record's inputs are leaves or outputs of earlier
// records, so replaying in reverse order is a valid topological sweep.
class Tape {
 public:
  // Receives the gradient of the recorded output and accumulates into the
  // gradients of its inputs.
  using BackwardFn = std::function<void(std::span<const double> grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::vector<detail::NodePtr> inputs, const detail::NodePtr& output,
              BackwardFn backward);

  // Populates grads of every requires_grad node reachable from `loss`. Leaf
  // gradients accumulate across calls on different tapes; a tape may be
  // replayed only once until reset().
  void backward(const Tensor& loss);

  void reset();
  std::size_t size() const { return records_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Record {
    std::vector<detail::NodePtr> inputs;
    detail::NodePtr output;
    BackwardFn backward;
  };
  std::vector<Record> records_;
  bool consumed_ = false;
};

// Installs `tape` as the recording tape of the current thread for the
// lifetime of the scope. Scopes nest.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* current_tape();

}  // namespace dec2enc

#endif  // DEC2ENC_TENSOR_HPP_
