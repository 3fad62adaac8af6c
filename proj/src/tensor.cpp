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

#include "dec2enc/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

namespace dec2enc {

namespace {
thread_local Tape* g_current_tape = nullptr;
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

Tensor::Tensor(Shape shape, double fill) : node_(std::make_shared<detail::Node>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("zero extent in shape " + shape_to_string(shape));
  }
  node_->data.assign(shape_numel(shape), fill);
  node_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : node_(std::make_shared<detail::Node>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("zero extent in shape " + shape_to_string(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_to_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->data = std::move(values);
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

std::size_t Tensor::size(int axis) const {
  const int n = static_cast<int>(dim());
  const int a = axis < 0 ? axis + n : axis;
  if (a < 0 || a >= n) {
    throw std::out_of_range("axis " + std::to_string(axis) + " out of range for shape " +
                            shape_to_string(shape()));
  }
  return node_->shape[a];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() needs a single-element tensor, got " + shape_to_string(shape()));
  }
  return node_->data[0];
}

Tensor& Tensor::set_requires_grad(bool value) {
  node_->requires_grad = value;
  return *this;
}

void Tensor::zero_grad() {
  if (node_->grad.empty()) return;
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->data); }

void Tape::record(std::vector<detail::NodePtr> inputs, const detail::NodePtr& output,
                  BackwardFn backward) {
  if (consumed_) throw std::logic_error("recording on a tape that was already replayed");
  for (const auto& in : inputs) {
    if (in->producer == nullptr) continue;
    if (in->producer != this || in->record_index >= records_.size() ||
        records_[in->record_index].output != in) {
      throw std::logic_error("operation input was produced on a different tape");
    }
  }
  output->producer = this;
  output->record_index = records_.size();
  records_.push_back(Record{std::move(inputs), output, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got " +
                     (loss.defined() ? shape_to_string(loss.shape()) : std::string("<undefined>")));
  }
  const auto& root = loss.node();
  if (root->producer != this || root->record_index >= records_.size() ||
      records_[root->record_index].output != root) {
    throw std::logic_error("backward(): loss is detached from this tape");
  }
  if (consumed_) throw std::logic_error("backward(): tape already replayed; call reset()");
  consumed_ = true;

  for (const auto& rec : records_) {
    if (rec.output->requires_grad) rec.output->grad.assign(rec.output->data.size(), 0.0);
    for (const auto& in : rec.inputs) {
      if (in->requires_grad && in->grad.size() != in->data.size()) {
        in->grad.assign(in->data.size(), 0.0);
      }
    }
  }
  root->grad[0] = 1.0;
  for (std::size_t i = root->record_index + 1; i-- > 0;) {
    const auto& rec = records_[i];
    if (!rec.output->requires_grad) continue;
    rec.backward(rec.output->grad);
  }
}

void Tape::reset() {
  records_.clear();
  consumed_ = false;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_current_tape) { g_current_tape = &tape; }

TapeScope::~TapeScope() { g_current_tape = previous_; }

Tape* current_tape() { return g_current_tape; }

}  // namespace dec2enc
