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

#include "dec2enc/check/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dec2enc::check {

GradCheckResult gradient_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                               std::vector<Tensor> inputs, double step) {
  for (auto& t : inputs) {
    if (!t.requires_grad()) throw std::invalid_argument("gradient_check: inputs must require grad");
    t.zero_grad();
  }

  std::vector<std::vector<double>> analytic;
  double base = 0.0;
  {
    Tape tape;
    TapeScope scope(tape);
    const Tensor loss = fn(inputs);
    base = loss.item();
    tape.backward(loss);
  }
  for (const auto& t : inputs) {
    if (t.has_grad()) analytic.emplace_back(t.grad().begin(), t.grad().end());
    else analytic.emplace_back(t.numel(), 0.0);
  }

  GradCheckResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto values = inputs[i].mutable_data();
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + step;
      const double up = fn(inputs).item();
      values[j] = saved - step;
      const double down = fn(inputs).item();
      values[j] = saved;
      const double numeric = (up - down) / (2.0 * step);
      diff2 += (analytic[i][j] - numeric) * (analytic[i][j] - numeric);
      a2 += analytic[i][j] * analytic[i][j];
      n2 += numeric * numeric;
    }
    double rel = std::sqrt(diff2) / std::max(std::sqrt(std::max(a2, n2)), 1e-300);
    // A vanishing gradient (a bias under a shift-invariant loss) is compared
    // only up to finite-difference roundoff.
    const double roundoff = 100.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(base)) / step *
                            std::sqrt(static_cast<double>(values.size()));
    if (std::sqrt(a2) <= roundoff && std::sqrt(n2) <= roundoff) rel = 0.0;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_input = i;
    }
  }
  return result;
}

Tensor random_constant(const Shape& shape, Rng& rng, double scale) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = scale * rng.normal();
  return Tensor(shape, std::move(v));
}

Tensor random_tensor(const Shape& shape, Rng& rng, double scale) {
  Tensor t = random_constant(shape, rng, scale);
  t.set_requires_grad(true);
  return t;
}

}  // namespace dec2enc::check
