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

#include "msdan/model.hpp"

#include <cmath>
#include <random>

#include "msdan/error.hpp"
#include "msdan/ops.hpp"

namespace msdan::model {

namespace {

std::string branch_prefix(std::size_t k) { return "branch" + std::to_string(k); }
std::string block_prefix(std::size_t i) { return "block" + std::to_string(i); }

class Initializer {
 public:
  Initializer(ag::ParamStore& store, std::uint64_t seed) : store_(store), rng_(seed) {}

  void xavier(const std::string& name, ag::Shape shape, std::size_t fan_in,
              std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> v(ag::numel(shape));
    for (double& x : v) x = dist(rng_);
    store_.add(name, Tensor(std::move(shape), std::move(v)));
  }

  void conv(const std::string& prefix, std::size_t cout, std::size_t cin, std::size_t k) {
    xavier(prefix + ".weight", {cout, cin, k}, cin * k, cout * k);
    store_.add(prefix + ".bias", Tensor::zeros({cout}));
  }

  void linear(const std::string& prefix, std::size_t in, std::size_t out) {
    xavier(prefix + ".weight", {in, out}, in, out);
    store_.add(prefix + ".bias", Tensor::zeros({out}));
  }

  void bn(const std::string& prefix, std::size_t c) {
    store_.add(prefix + ".gamma", Tensor::full({c}, 1.0));
    store_.add(prefix + ".beta", Tensor::zeros({c}));
    store_.add(prefix + ".running_mean", Tensor::zeros({c}), false);
    store_.add(prefix + ".running_var", Tensor::full({c}, 1.0), false);
  }

 private:
  ag::ParamStore& store_;
  std::mt19937_64 rng_;
};

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(Errc::ConfigError, why); };
  if (branch_kernel_sizes.empty()) fail("at least one branch is required");
  for (std::size_t k : branch_kernel_sizes) {
    if (k == 0 || k % 2 == 0) fail("branch kernel sizes must be odd");
  }
  if (branch_channels == 0) fail("branch_channels must be positive");
  if (attention_channels != branch_channels * branch_kernel_sizes.size()) {
    fail("attention_channels must equal branch_channels x number of branches");
  }
  if (attention_blocks == 0) fail("attention_blocks must be positive");
  if (channel_attention_reduction == 0 ||
      attention_channels / channel_attention_reduction == 0) {
    fail("channel_attention_reduction too large for attention_channels");
  }
  if (spatial_kernel % 2 == 0) fail("spatial_kernel must be odd");
  if (pool_sizes.size() != attention_blocks) {
    fail("pool_sizes needs one entry per attention block");
  }
  if (num_classes < 2) fail("num_classes must be >= 2");
  for (std::size_t w : widths()) {
    if (w == 0) fail("pooling schedule collapses the feature width to zero");
  }
}

std::vector<std::size_t> ModelConfig::widths() const {
  std::vector<std::size_t> out;
  std::size_t w = input_length;
  for (std::size_t i = 0; i < pool_sizes.size(); ++i) {
    const std::size_t p = pool_sizes[i];
    w = p <= 1 ? w : (w < p ? 0 : (w - p) / p + 1);
    out.push_back(w);
  }
  // The last block keeps its width.
  out.push_back(w);
  out.push_back(1);
  return out;
}

ModelConfig ModelConfig::micro() {
  ModelConfig cfg;
  cfg.branch_channels = 4;
  cfg.attention_channels = 12;
  cfg.input_length = 64;
  cfg.pool_sizes = {4, 2, 2};
  return cfg;
}

ag::ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ag::ParamStore store;
  Initializer init(store, seed);
  const std::size_t C = cfg.branch_channels;
  for (std::size_t b = 0; b < cfg.branch_kernel_sizes.size(); ++b) {
    const std::size_t k = cfg.branch_kernel_sizes[b];
    const std::string p = branch_prefix(b);
    init.conv(p + ".conv1", C, 1, k);
    init.bn(p + ".bn1", C);
    init.conv(p + ".conv2", C, C, k);
    init.bn(p + ".bn2", C);
    init.conv(p + ".proj", C, 1, 1);
  }
  const std::size_t A = cfg.attention_channels;
  const std::size_t R = A / cfg.channel_attention_reduction;
  for (std::size_t i = 0; i < cfg.attention_blocks; ++i) {
    const std::string p = block_prefix(i);
    init.conv(p + ".conv1", A, A, 3);
    init.bn(p + ".bn1", A);
    init.conv(p + ".conv2", A, A, 3);
    init.bn(p + ".bn2", A);
    init.linear(p + ".ca.fc1", A, R);
    init.bn(p + ".ca.bn", R);
    init.linear(p + ".ca.fc2", R, A);
    init.conv(p + ".sa.conv", 1, 2, cfg.spatial_kernel);
    init.conv(p + ".sa.pointwise", A, A, 1);
  }
  init.linear("head", A, cfg.num_classes);
  return store;
}

Msdan::Msdan(ModelConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), params_(init_params(cfg_, seed)) {}

Msdan::Msdan(ModelConfig cfg, ag::ParamStore params)
    : cfg_(std::move(cfg)), params_(init_params(cfg_, 0)) {
  ag::restore_into(params_, params);
}

Tensor Msdan::conv(const std::string& prefix, const Tensor& x, std::size_t padding) {
  return ag::conv1d(x, params_.get(prefix + ".weight"), params_.get(prefix + ".bias"), 1,
                    padding);
}

Tensor Msdan::bn(const std::string& prefix, const Tensor& x, Mode mode) {
  return ag::batch_norm(x, params_.get(prefix + ".gamma"), params_.get(prefix + ".beta"),
                        params_.get(prefix + ".running_mean"),
                        params_.get(prefix + ".running_var"), mode == Mode::Train,
                        cfg_.bn_eps, cfg_.bn_momentum);
}

Tensor Msdan::branch_forward(const Tensor& x, std::size_t branch, Mode mode) {
  if (x.rank() != 3 || x.dim(1) != 1) {
    throw Error(Errc::ShapeMismatch, "branch input must be [B,1,W], got " +
                                         ag::shape_str(x.shape()));
  }
  const std::string p = branch_prefix(branch);
  const std::size_t pad = cfg_.branch_kernel_sizes.at(branch) / 2;
  Tensor h = ag::relu(bn(p + ".bn1", conv(p + ".conv1", x, pad), mode));
  h = bn(p + ".bn2", conv(p + ".conv2", h, pad), mode);
  return ag::relu(ag::add(h, conv(p + ".proj", x, 0)));
}

Tensor Msdan::multiscale_forward(const Tensor& x, Mode mode) {
  std::vector<Tensor> outs;
  outs.reserve(cfg_.branch_kernel_sizes.size());
  for (std::size_t b = 0; b < cfg_.branch_kernel_sizes.size(); ++b) {
    outs.push_back(branch_forward(x, b, mode));
  }
  Tensor fused = ag::concat(outs, 1);
  const std::size_t pool = cfg_.pool_sizes.front();
  return pool > 1 ? ag::max_pool1d(fused, pool, pool) : fused;
}

Tensor Msdan::channel_gate(std::size_t block, const Tensor& x, Mode mode) {
  const std::string p = block_prefix(block) + ".ca";
  Tensor level = ag::global_avg_pool(ag::abs(x));
  Tensor h = ag::linear(level, params_.get(p + ".fc1.weight"), params_.get(p + ".fc1.bias"));
  h = ag::relu(bn(p + ".bn", h, mode));
  h = ag::linear(h, params_.get(p + ".fc2.weight"), params_.get(p + ".fc2.bias"));
  return ag::sigmoid(h);
}

Tensor Msdan::apply_channel_threshold(const Tensor& x, const Tensor& theta) {
  if (x.rank() != 3 || theta.rank() != 2 || theta.dim(0) != x.dim(0) ||
      theta.dim(1) != x.dim(1)) {
    throw Error(Errc::ShapeMismatch, "gate " + ag::shape_str(theta.shape()) +
                                         " does not match features " +
                                         ag::shape_str(x.shape()));
  }
  Tensor level = ag::global_avg_pool(ag::abs(x));
  Tensor tau = ag::reshape(ag::mul(theta, level), {x.dim(0), x.dim(1), 1});
  return ag::soft_threshold(x, tau);
}

Tensor Msdan::channel_attention(std::size_t block, const Tensor& x, Mode mode) {
  if (x.rank() != 3 || x.dim(1) != cfg_.attention_channels) {
    throw Error(Errc::ShapeMismatch, "channel attention expects [B," +
                                         std::to_string(cfg_.attention_channels) +
                                         ",W], got " + ag::shape_str(x.shape()));
  }
  return apply_channel_threshold(x, channel_gate(block, x, mode));
}

Tensor Msdan::spatial_gate(std::size_t block, const Tensor& x) {
  const std::string p = block_prefix(block) + ".sa.conv";
  return ag::sigmoid(conv(p, ag::channel_pool(x), cfg_.spatial_kernel / 2));
}

Tensor Msdan::spatial_attention(std::size_t block, const Tensor& x) {
  if (x.rank() != 3 || x.dim(1) != cfg_.attention_channels) {
    throw Error(Errc::ShapeMismatch, "spatial attention expects [B," +
                                         std::to_string(cfg_.attention_channels) +
                                         ",W], got " + ag::shape_str(x.shape()));
  }
  Tensor mixed = conv(block_prefix(block) + ".sa.pointwise", x, 0);
  return ag::mul(mixed, spatial_gate(block, x));
}

Tensor Msdan::attention_block(std::size_t block, const Tensor& x, Mode mode) {
  if (x.rank() != 3 || x.dim(1) != cfg_.attention_channels) {
    throw Error(Errc::ShapeMismatch, "attention block expects [B," +
                                         std::to_string(cfg_.attention_channels) +
                                         ",W], got " + ag::shape_str(x.shape()));
  }
  const std::string p = block_prefix(block);
  Tensor h = ag::relu(bn(p + ".bn1", conv(p + ".conv1", x, 1), mode));
  h = bn(p + ".bn2", conv(p + ".conv2", h, 1), mode);
  h = channel_attention(block, h, mode);
  h = spatial_attention(block, h);
  return ag::relu(ag::add(h, x));
}

Tensor Msdan::forward(const Tensor& x, Mode mode) {
  if (x.rank() != 3 || x.dim(1) != 1 || x.dim(2) != cfg_.input_length) {
    throw Error(Errc::ShapeMismatch, "model input must be [B,1," +
                                         std::to_string(cfg_.input_length) + "], got " +
                                         ag::shape_str(x.shape()));
  }
  Tensor h = multiscale_forward(x, mode);
  for (std::size_t i = 0; i < cfg_.attention_blocks; ++i) {
    h = attention_block(i, h, mode);
    if (i + 1 < cfg_.attention_blocks) {
      const std::size_t pool = cfg_.pool_sizes[i + 1];
      if (pool > 1) h = ag::max_pool1d(h, pool, pool);
    }
  }
  return ag::linear(ag::global_avg_pool(h), params_.get("head.weight"),
                    params_.get("head.bias"));
}

}  // namespace msdan::model
