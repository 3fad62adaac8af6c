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

#ifndef DEC2ENC_CHECK_GRADCHECK_HPP_
#define DEC2ENC_CHECK_GRADCHECK_HPP_

#include <functional>
#include <string>
#include <vector>

#include "dec2enc/rng.hpp"
#include "dec2enc/tensor.hpp"

namespace dec2enc::check {

struct GradCheckResult {
  // max over inputs of |analytic - numeric|_2 / max(|analytic|_2, |numeric|_2)
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
};

// Compares tape gradients of the scalar `fn(inputs)` against central finite
// differences with the given step. `inputs` must require grad; their values
// are restored afterwards.
GradCheckResult gradient_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                               std::vector<Tensor> inputs, double step = 1e-5);

// Leaf with entries ~ N(0, scale^2) that requires grad.
Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0);
// Same, without gradient tracking.
Tensor random_constant(const Shape& shape, Rng& rng, double scale = 1.0);

}  // namespace dec2enc::check

#endif  // DEC2ENC_CHECK_GRADCHECK_HPP_
