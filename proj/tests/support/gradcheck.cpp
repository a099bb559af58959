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

#include "support/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "msdan/ops.hpp"

namespace msdan::testing {

namespace {

double projected(const ag::Tensor& out, const std::vector<double>& r) {
  double s = 0.0;
  const auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * r[i];
  return s;
}

std::vector<double> projection(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> r(n);
  for (double& x : r) x = d(rng);
  return r;
}

double relative(double a, double n) { return std::abs(a - n) / std::max(1.0, std::abs(n)); }

// Runs `eval` once with gradients to get the analytic gradient of each
// tensor, then probes each tensor's entries by central differences.
GradCheckResult run(const std::function<ag::Tensor()>& eval, std::vector<ag::Tensor*> leaves,
                    const std::vector<std::string>& names, double h, std::uint64_t seed) {
  for (auto* t : leaves) t->zero_grad();
  ag::Tensor out = eval();
  const auto r = projection(out.numel(), seed);
  const std::vector<double> rv = r;
  ag::Tensor proj(out.shape(), rv);
  ag::backward(ag::sum(ag::mul(out, proj)));

  GradCheckResult result;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    ag::Tensor& t = *leaves[k];
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) analytic.assign(t.grad().begin(), t.grad().end());
    auto values = t.mutable_values();
    const auto central = [&](std::size_t i, double step) {
      const double orig = values[i];
      double plus, minus;
      {
        ag::NoGradGuard guard;
        values[i] = orig + step;
        plus = projected(eval(), r);
        values[i] = orig - step;
        minus = projected(eval(), r);
      }
      values[i] = orig;
      return (plus - minus) / (2.0 * step);
    };
    for (std::size_t i = 0; i < values.size(); ++i) {
      ++result.entries;
      const double numeric = central(i, h);
      double rel = relative(analytic[i], numeric);
      if (rel >= kKinkTolerance) {
        const double fine = central(i, h * 1e-2);
        if (relative(fine, numeric) >= kKinkTolerance) {
          ++result.kinks;
          rel = relative(analytic[i], fine);
        }
      }
      if (rel >= result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst = names[k];
      }
    }
  }
  return result;
}

}  // namespace

GradCheckResult check_gradients(const Fn& f, std::vector<ag::Tensor> inputs, double h,
                                std::uint64_t seed) {
  std::vector<ag::Tensor*> leaves;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    inputs[i].set_requires_grad(true);
    leaves.push_back(&inputs[i]);
    names.push_back("input" + std::to_string(i));
  }
  return run([&] { return f(inputs); }, leaves, names, h, seed);
}

GradCheckResult check_param_gradients(const std::function<ag::Tensor()>& forward,
                                      ag::ParamStore& params, double h, std::uint64_t seed) {
  std::vector<ag::Tensor*> leaves;
  std::vector<std::string> names;
  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    leaves.push_back(&e.tensor);
    names.push_back(e.name);
  }
  return run(forward, leaves, names, h, seed);
}

ag::Tensor random_tensor(ag::Shape shape, std::uint64_t seed, double lo, double hi,
                         bool requires_grad) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(ag::numel(shape));
  for (double& x : v) x = d(rng);
  return ag::Tensor(std::move(shape), std::move(v), requires_grad);
}

}  // namespace msdan::testing
