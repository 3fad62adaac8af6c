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

#ifndef DEC2ENC_CHECK_SELFTEST_HPP_
#define DEC2ENC_CHECK_SELFTEST_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dec2enc::check {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline constexpr double kGradTolerance = 1e-4;

// Finite-difference comparison for every primitive, loss and for small
// end-to-end models (each pooling kind x each loss); `instances` random
// instances per case, shapes varying across instances.
std::vector<CheckResult> gradient_suite(std::uint64_t seed, std::size_t instances = 3);

// Causality under future-token perturbations plus the Prefix(L) ==
// Bidirectional and Prefix(0) == Causal identities and attention row sums.
std::vector<CheckResult> masking_suite(std::uint64_t seed, std::size_t pairs = 100);

// Mutating pad ids leaves logits bit-identical for every mask mode, pooling
// kind and padding side.
std::vector<CheckResult> pad_invariance_suite(std::uint64_t seed);

// Losses and metrics against the naive oracles on random small instances,
// plus closed-form values.
std::vector<CheckResult> oracle_suite(std::uint64_t seed, std::size_t instances = 1000);

bool all_passed(const std::vector<CheckResult>& results);

// Runs every suite, prints one line per check, returns the failure count.
int run_selftest(std::ostream& out, std::uint64_t seed);

}  // namespace dec2enc::check

#endif  // DEC2ENC_CHECK_SELFTEST_HPP_
