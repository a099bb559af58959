// Copyright 2026 The MSDAN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "msdan/params.hpp"
#include "msdan/tensor.hpp"

namespace msdan::testing {

struct GradCheckResult {
  // Worst |analytic - numeric| / max(1, |numeric|) over all entries.
  double max_relative_error = 0.0;
  std::string worst;  // name or index of the worst tensor
  std::size_t entries = 0;
  // Entries whose step-h estimate disagrees with a step-h/100 estimate, so
  // the +-h probe crossed a ReLU, max or threshold switch. These are judged
  // against the finer estimate.
  std::size_t kinks = 0;
};

inline constexpr double kKinkTolerance = 1e-5;

using Fn = std::function<ag::Tensor(const std::vector<ag::Tensor>&)>;

// Central differences of sum(r * f(inputs)) for a fixed random projection r,
// against reverse-mode gradients. Inputs are treated as leaves.
GradCheckResult check_gradients(const Fn& f, std::vector<ag::Tensor> inputs,
                                double h = 1e-4, std::uint64_t seed = 7);

// Same, perturbing every trainable entry of `params` in place.
GradCheckResult check_param_gradients(const std::function<ag::Tensor()>& forward,
                                      ag::ParamStore& params, double h = 1e-4,
                                      std::uint64_t seed = 7);

// Random tensor with entries uniform in [lo, hi].
ag::Tensor random_tensor(ag::Shape shape, std::uint64_t seed, double lo = -1.0,
                         double hi = 1.0, bool requires_grad = false);

}  // namespace msdan::testing
