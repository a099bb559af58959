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

#include <vector>

#include "msdan/tensor.hpp"

namespace msdan::ag {

// Elementwise with numpy-style broadcasting between equal-rank operands
// (each dimension equal, or 1 on one side).
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor abs(const Tensor& x);

// Row-wise over [B,C], max-subtracted.
Tensor softmax(const Tensor& x);

// sign(x) * max(|x| - tau, 0); tau broadcasts against x and must be >= 0.
// Subgradient at |x| == tau is 0 for both x and tau.
Tensor soft_threshold(const Tensor& x, const Tensor& tau);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

// Cross-correlation. x [B,Cin,W], kernel [Cout,Cin,K], bias [Cout] or undefined.
Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              std::size_t stride = 1, std::size_t padding = 0);

// Per-channel normalization for [B,C,W] (statistics over B and W) or [B,C]
// (over B). Training mode uses batch statistics and updates the running
// buffers in place; eval mode uses the running buffers.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Tensor& running_mean, Tensor& running_var, bool training,
                  double eps = 1e-5, double momentum = 0.1);

// [B,C,W] -> [B,C,floor((W-k)/s)+1]; ties route gradient to the first max.
Tensor max_pool1d(const Tensor& x, std::size_t kernel, std::size_t stride);
// [B,C,W] -> [B,C]
Tensor global_avg_pool(const Tensor& x);
Tensor global_max_pool(const Tensor& x);
// [B,C,W] -> [B,2,W]: mean over channels, max over channels.
Tensor channel_pool(const Tensor& x);

Tensor concat(const std::vector<Tensor>& xs, std::size_t axis = 1);

// x [B,F] @ weight [F,G] + bias [G]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

}  // namespace msdan::ag
