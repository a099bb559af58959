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
#include <string>
#include <vector>

#include "msdan/params.hpp"
#include "msdan/tensor.hpp"

namespace msdan::model {

using ag::Tensor;

enum class Mode { Train, Eval };

struct ModelConfig {
  std::vector<std::size_t> branch_kernel_sizes{3, 5, 7};
  std::size_t branch_channels = 32;
  std::size_t attention_channels = 96;
  std::size_t attention_blocks = 3;
  std::size_t channel_attention_reduction = 4;
  std::size_t spatial_kernel = 3;
  // pool_sizes[0] follows the branch concat, pool_sizes[i] follows block i;
  // the last block is never pooled. 1 means no pooling.
  std::vector<std::size_t> pool_sizes{8, 4, 4};
  std::size_t num_classes = 5;
  std::size_t input_length = 3000;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  // Throws Errc::ConfigError.
  void validate() const;
  // Feature width after the multi-scale stage and after each inter-block
  // pool, then the last block's output width and the pooled head width 1.
  std::vector<std::size_t> widths() const;

  // branch_channels 4, input length 64, pools (4,2,2): fast enough for
  // finite-difference checks of the whole network.
  static ModelConfig micro();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Xavier-uniform conv/linear weights, zero biases, unit BN scale, zero BN
// shift, running mean 0 / variance 1. Deterministic in `seed`.
ag::ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed);

class Msdan {
 public:
  Msdan(ModelConfig cfg, std::uint64_t seed);
  Msdan(ModelConfig cfg, ag::ParamStore params);

  const ModelConfig& config() const { return cfg_; }
  ag::ParamStore& params() { return params_; }
  const ag::ParamStore& params() const { return params_; }

  // [B,1,L] -> [B,num_classes] pre-softmax logits.
  Tensor forward(const Tensor& x, Mode mode);

  // conv-BN-ReLU-conv-BN plus a 1x1 projection of the input, then ReLU.
  Tensor branch_forward(const Tensor& x, std::size_t branch, Mode mode);
  // Concatenated branches, max-pooled by pool_sizes[0].
  Tensor multiscale_forward(const Tensor& x, Mode mode);

  // Per-channel gate theta in (0,1), [B,C].
  Tensor channel_gate(std::size_t block, const Tensor& x, Mode mode);
  Tensor channel_attention(std::size_t block, const Tensor& x, Mode mode);
  // Soft-thresholds each channel at theta_c * mean|x_c|.
  static Tensor apply_channel_threshold(const Tensor& x, const Tensor& theta);

  // Spatial gate beta in (0,1), [B,1,W].
  Tensor spatial_gate(std::size_t block, const Tensor& x);
  Tensor spatial_attention(std::size_t block, const Tensor& x);

  Tensor attention_block(std::size_t block, const Tensor& x, Mode mode);

 private:
  Tensor conv(const std::string& prefix, const Tensor& x, std::size_t padding);
  Tensor bn(const std::string& prefix, const Tensor& x, Mode mode);

  ModelConfig cfg_;
  ag::ParamStore params_;
};

}  // namespace msdan::model
