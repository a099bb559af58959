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

#include "msdan/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "msdan/error.hpp"

namespace msdan::ag {

using detail::grad_of;
using detail::make_result;

namespace {

[[noreturn]] void shape_error(const std::string& op, const std::string& detail) {
  throw Error(Errc::ShapeMismatch, op + ": " + detail);
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (!t.defined() || t.rank() != rank) {
    shape_error(op, "expected rank " + std::to_string(rank) + ", got " +
                        (t.defined() ? shape_str(t.shape()) : std::string("undefined")));
  }
}

struct Broadcast {
  Shape out;
  std::vector<std::size_t> stride_a;
  std::vector<std::size_t> stride_b;
  bool same = false;
};

std::vector<std::size_t> contiguous_strides(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t d = s.size(); d-- > 1;) st[d - 1] = st[d] * s[d];
  return st;
}

Broadcast broadcast(const Shape& a, const Shape& b, const char* op) {
  Broadcast bc;
  if (a == b) {
    bc.out = a;
    bc.same = true;
    return bc;
  }
  if (a.size() != b.size()) {
    shape_error(op, "rank mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
  const auto sa = contiguous_strides(a);
  const auto sb = contiguous_strides(b);
  bc.out.resize(a.size());
  bc.stride_a.resize(a.size());
  bc.stride_b.resize(a.size());
  for (std::size_t d = 0; d < a.size(); ++d) {
    if (a[d] != b[d] && a[d] != 1 && b[d] != 1) {
      shape_error(op, "cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    }
    bc.out[d] = std::max(a[d], b[d]);
    bc.stride_a[d] = a[d] == 1 ? 0 : sa[d];
    bc.stride_b[d] = b[d] == 1 ? 0 : sb[d];
  }
  return bc;
}

// f(out_index, a_index, b_index)
template <typename F>
void for_each_broadcast(const Broadcast& bc, F&& f) {
  const std::size_t n = numel(bc.out);
  if (bc.same) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, i);
    return;
  }
  const std::size_t rank = bc.out.size();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, ia, ib);
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      ia += bc.stride_a[d];
      ib += bc.stride_b[d];
      if (idx[d] < bc.out[d]) break;
      ia -= bc.stride_a[d] * bc.out[d];
      ib -= bc.stride_b[d] * bc.out[d];
      idx[d] = 0;
    }
  }
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  std::vector<double> y(x.numel());
  const auto xv = x.values();
  std::transform(xv.begin(), xv.end(), y.begin(), fwd);
  return make_result(x.shape(), std::move(y), {x}, [x, deriv](Node& self) {
    double* gx = grad_of(x);
    const auto xv = x.values();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      gx[i] += self.grad[i] * deriv(xv[i], self.value[i]);
    }
  });
}

double stable_sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  auto bc = broadcast(a.shape(), b.shape(), "add");
  std::vector<double> y(numel(bc.out));
  const auto av = a.values();
  const auto bv = b.values();
  for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
    y[i] = av[ia] + bv[ib];
  });
  return make_result(bc.out, std::move(y), {a, b}, [a, b, bc](Node& self) {
    double* ga = grad_of(a);
    double* gb = grad_of(b);
    for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      if (ga) ga[ia] += self.grad[i];
      if (gb) gb[ib] += self.grad[i];
    });
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  auto bc = broadcast(a.shape(), b.shape(), "mul");
  std::vector<double> y(numel(bc.out));
  const auto av = a.values();
  const auto bv = b.values();
  for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
    y[i] = av[ia] * bv[ib];
  });
  return make_result(bc.out, std::move(y), {a, b}, [a, b, bc](Node& self) {
    double* ga = grad_of(a);
    double* gb = grad_of(b);
    const auto av = a.values();
    const auto bv = b.values();
    for_each_broadcast(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      if (ga) ga[ia] += self.grad[i] * bv[ib];
      if (gb) gb[ib] += self.grad[i] * av[ia];
    });
  });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor abs(const Tensor& x) {
  return unary(
      x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor softmax(const Tensor& x) {
  require_rank(x, 2, "softmax");
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.dim(1);
  const auto xv = x.values();
  std::vector<double> y(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * cols;
    double* out = y.data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += (out[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) out[c] /= total;
  }
  return make_result(x.shape(), std::move(y), {x}, [x, rows, cols](Node& self) {
    double* gx = grad_of(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * cols;
      const double* g = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += g[c] * y[c];
      for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += y[c] * (g[c] - dot);
    }
  });
}

Tensor soft_threshold(const Tensor& x, const Tensor& tau) {
  auto bc = broadcast(x.shape(), tau.shape(), "soft_threshold");
  if (bc.out != x.shape()) {
    shape_error("soft_threshold", "threshold " + shape_str(tau.shape()) +
                                      " must broadcast into " + shape_str(x.shape()));
  }
  const auto tv = tau.values();
  if (std::any_of(tv.begin(), tv.end(), [](double t) { return !(t >= 0.0); })) {
    throw Error(Errc::NegativeThreshold, "soft_threshold needs tau >= 0");
  }
  const auto xv = x.values();
  std::vector<double> y(xv.size());
  for_each_broadcast(bc, [&](std::size_t i, std::size_t ix, std::size_t it) {
    const double mag = std::abs(xv[ix]) - tv[it];
    y[i] = mag > 0.0 ? std::copysign(mag, xv[ix]) : 0.0;
  });
  return make_result(x.shape(), std::move(y), {x, tau}, [x, tau, bc](Node& self) {
    double* gx = grad_of(x);
    double* gt = grad_of(tau);
    const auto xv = x.values();
    const auto tv = tau.values();
    for_each_broadcast(bc, [&](std::size_t i, std::size_t ix, std::size_t it) {
      if (!(std::abs(xv[ix]) > tv[it])) return;
      if (gx) gx[ix] += self.grad[i];
      if (gt) gt[it] -= self.grad[i] * (xv[ix] > 0.0 ? 1.0 : -1.0);
    });
  });
}

Tensor sum(const Tensor& x) {
  const auto xv = x.values();
  const double total = std::accumulate(xv.begin(), xv.end(), 0.0);
  return make_result(Shape{1}, {total}, {x}, [x](Node& self) {
    double* gx = grad_of(x);
    for (std::size_t i = 0; i < x.numel(); ++i) gx[i] += self.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    shape_error("reshape", shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> y(x.values().begin(), x.values().end());
  return make_result(std::move(shape), std::move(y), {x}, [x](Node& self) {
    double* gx = grad_of(x);
    for (std::size_t i = 0; i < x.numel(); ++i) gx[i] += self.grad[i];
  });
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, std::size_t padding) {
  require_rank(x, 3, "conv1d");
  require_rank(kernel, 3, "conv1d kernel");
  const std::size_t B = x.dim(0), Cin = x.dim(1), W = x.dim(2);
  const std::size_t Cout = kernel.dim(0), K = kernel.dim(2);
  if (kernel.dim(1) != Cin) {
    shape_error("conv1d", "kernel " + shape_str(kernel.shape()) + " vs input " +
                              shape_str(x.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != Cout)) {
    shape_error("conv1d", "bias " + shape_str(bias.shape()) + " for " +
                              std::to_string(Cout) + " output channels");
  }
  if (stride < 1) shape_error("conv1d", "stride must be >= 1");
  if (W + 2 * padding < K) shape_error("conv1d", "kernel wider than padded input");
  const std::size_t Wo = (W + 2 * padding - K) / stride + 1;

  // Output positions o with 0 <= o*stride + k - padding < W, as [lo, hi).
  auto valid_range = [=](std::size_t k) {
    const long shift = static_cast<long>(k) - static_cast<long>(padding);
    const long s = static_cast<long>(stride);
    long lo = shift >= 0 ? 0 : (-shift + s - 1) / s;
    long hi = (static_cast<long>(W) - 1 - shift) < 0
                  ? 0
                  : (static_cast<long>(W) - 1 - shift) / s + 1;
    hi = std::min(hi, static_cast<long>(Wo));
    lo = std::min(lo, hi);
    return std::pair<std::size_t, std::size_t>(static_cast<std::size_t>(lo),
                                               static_cast<std::size_t>(hi));
  };

  const auto xv = x.values();
  const auto wv = kernel.values();
  std::vector<double> y(B * Cout * Wo, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t co = 0; co < Cout; ++co) {
      double* out = y.data() + (b * Cout + co) * Wo;
      if (bias.defined()) std::fill(out, out + Wo, bias.values()[co]);
      for (std::size_t ci = 0; ci < Cin; ++ci) {
        const double* in = xv.data() + (b * Cin + ci) * W;
        const double* w = wv.data() + (co * Cin + ci) * K;
        for (std::size_t k = 0; k < K; ++k) {
          const auto [lo, hi] = valid_range(k);
          const double wk = w[k];
          const long shift = static_cast<long>(k) - static_cast<long>(padding);
          for (std::size_t o = lo; o < hi; ++o) {
            out[o] += wk * in[static_cast<long>(o * stride) + shift];
          }
        }
      }
    }
  }

  std::vector<Tensor> inputs{x, kernel};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      Shape{B, Cout, Wo}, std::move(y), inputs,
      [=](Node& self) {
        double* gx = grad_of(x);
        double* gw = grad_of(kernel);
        double* gb = bias.defined() ? grad_of(bias) : nullptr;
        const auto xv = x.values();
        const auto wv = kernel.values();
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t co = 0; co < Cout; ++co) {
            const double* g = self.grad.data() + (b * Cout + co) * Wo;
            if (gb) {
              double acc = 0.0;
              for (std::size_t o = 0; o < Wo; ++o) acc += g[o];
              gb[co] += acc;
            }
            for (std::size_t ci = 0; ci < Cin; ++ci) {
              const double* in = xv.data() + (b * Cin + ci) * W;
              const double* w = wv.data() + (co * Cin + ci) * K;
              for (std::size_t k = 0; k < K; ++k) {
                const auto [lo, hi] = valid_range(k);
                const long shift = static_cast<long>(k) - static_cast<long>(padding);
                if (gw) {
                  double acc = 0.0;
                  for (std::size_t o = lo; o < hi; ++o) {
                    acc += g[o] * in[static_cast<long>(o * stride) + shift];
                  }
                  gw[(co * Cin + ci) * K + k] += acc;
                }
                if (gx) {
                  double* gin = gx + (b * Cin + ci) * W;
                  const double wk = w[k];
                  for (std::size_t o = lo; o < hi; ++o) {
                    gin[static_cast<long>(o * stride) + shift] += wk * g[o];
                  }
                }
              }
            }
          }
        }
      });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Tensor& running_mean, Tensor& running_var, bool training,
                  double eps, double momentum) {
  if (!x.defined() || (x.rank() != 2 && x.rank() != 3)) {
    shape_error("batch_norm", "expected [B,C] or [B,C,W]");
  }
  const std::size_t B = x.dim(0), C = x.dim(1);
  const std::size_t W = x.rank() == 3 ? x.dim(2) : 1;
  for (const Tensor* t : std::initializer_list<const Tensor*>{&gamma, &beta, &running_mean, &running_var}) {
    if (t->rank() != 1 || t->dim(0) != C) {
      shape_error("batch_norm", "per-channel tensor " + shape_str(t->shape()) + " for " +
                                    std::to_string(C) + " channels");
    }
  }
  const std::size_t N = B * W;
  if (N == 0) shape_error("batch_norm", "empty batch");
  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();

  std::vector<double> center(C), invstd(C);
  if (training) {
    auto rm = running_mean.mutable_values();
    auto rv = running_var.mutable_values();
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const double* p = xv.data() + (b * C + c) * W;
        for (std::size_t w = 0; w < W; ++w) s += p[w];
      }
      const double mu = s / static_cast<double>(N);
      double ss = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const double* p = xv.data() + (b * C + c) * W;
        for (std::size_t w = 0; w < W; ++w) ss += (p[w] - mu) * (p[w] - mu);
      }
      const double var = ss / static_cast<double>(N);
      center[c] = mu;
      invstd[c] = 1.0 / std::sqrt(var + eps);
      const double unbiased = N > 1 ? ss / static_cast<double>(N - 1) : var;
      rm[c] = (1.0 - momentum) * rm[c] + momentum * mu;
      rv[c] = (1.0 - momentum) * rv[c] + momentum * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      center[c] = running_mean.values()[c];
      invstd[c] = 1.0 / std::sqrt(running_var.values()[c] + eps);
    }
  }

  std::vector<double> y(xv.size());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (b * C + c) * W;
      for (std::size_t w = 0; w < W; ++w) {
        y[base + w] = gv[c] * (xv[base + w] - center[c]) * invstd[c] + bv[c];
      }
    }
  }

  return make_result(x.shape(), std::move(y), {x, gamma, beta},
                     [=](Node& self) {
    double* gx = grad_of(x);
    double* gg = grad_of(gamma);
    double* gbeta = grad_of(beta);
    const auto xv = x.values();
    const auto gv = gamma.values();
    const double n = static_cast<double>(N);
    for (std::size_t c = 0; c < C; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t base = (b * C + c) * W;
        for (std::size_t w = 0; w < W; ++w) {
          const double g = self.grad[base + w];
          sum_g += g;
          sum_gx += g * (xv[base + w] - center[c]) * invstd[c];
        }
      }
      if (gg) gg[c] += sum_gx;
      if (gbeta) gbeta[c] += sum_g;
      if (!gx) continue;
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t base = (b * C + c) * W;
        for (std::size_t w = 0; w < W; ++w) {
          const double g = self.grad[base + w];
          if (training) {
            const double xhat = (xv[base + w] - center[c]) * invstd[c];
            gx[base + w] += gv[c] * invstd[c] / n * (n * g - sum_g - xhat * sum_gx);
          } else {
            gx[base + w] += gv[c] * invstd[c] * g;
          }
        }
      }
    }
  });
}

Tensor max_pool1d(const Tensor& x, std::size_t kernel, std::size_t stride) {
  require_rank(x, 3, "max_pool1d");
  const std::size_t B = x.dim(0), C = x.dim(1), W = x.dim(2);
  if (kernel < 1 || stride < 1 || kernel > W) {
    shape_error("max_pool1d", "kernel " + std::to_string(kernel) + " on width " +
                                  std::to_string(W));
  }
  const std::size_t Wo = (W - kernel) / stride + 1;
  const auto xv = x.values();
  std::vector<double> y(B * C * Wo);
  std::vector<std::size_t> arg(B * C * Wo);
  for (std::size_t row = 0; row < B * C; ++row) {
    const double* in = xv.data() + row * W;
    for (std::size_t o = 0; o < Wo; ++o) {
      std::size_t best = o * stride;
      for (std::size_t k = 1; k < kernel; ++k) {
        if (in[o * stride + k] > in[best]) best = o * stride + k;
      }
      y[row * Wo + o] = in[best];
      arg[row * Wo + o] = row * W + best;
    }
  }
  return make_result(Shape{B, C, Wo}, std::move(y), {x},
                     [x, arg = std::move(arg)](Node& self) {
    double* gx = grad_of(x);
    for (std::size_t i = 0; i < arg.size(); ++i) gx[arg[i]] += self.grad[i];
  });
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 3, "global_avg_pool");
  const std::size_t B = x.dim(0), C = x.dim(1), W = x.dim(2);
  const auto xv = x.values();
  std::vector<double> y(B * C);
  for (std::size_t row = 0; row < B * C; ++row) {
    y[row] = std::accumulate(xv.begin() + static_cast<long>(row * W),
                             xv.begin() + static_cast<long>((row + 1) * W), 0.0) /
             static_cast<double>(W);
  }
  return make_result(Shape{B, C}, std::move(y), {x}, [x, W](Node& self) {
    double* gx = grad_of(x);
    for (std::size_t row = 0; row < self.grad.size(); ++row) {
      const double g = self.grad[row] / static_cast<double>(W);
      for (std::size_t w = 0; w < W; ++w) gx[row * W + w] += g;
    }
  });
}

Tensor global_max_pool(const Tensor& x) {
  require_rank(x, 3, "global_max_pool");
  const std::size_t B = x.dim(0), C = x.dim(1), W = x.dim(2);
  return reshape(max_pool1d(x, W, W), Shape{B, C});
}

Tensor channel_pool(const Tensor& x) {
  require_rank(x, 3, "channel_pool");
  const std::size_t B = x.dim(0), C = x.dim(1), W = x.dim(2);
  if (C < 1) shape_error("channel_pool", "no channels");
  const auto xv = x.values();
  std::vector<double> y(B * 2 * W);
  std::vector<std::size_t> arg(B * W);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t w = 0; w < W; ++w) {
      double s = 0.0;
      std::size_t best = 0;
      for (std::size_t c = 0; c < C; ++c) {
        const double v = xv[(b * C + c) * W + w];
        s += v;
        if (v > xv[(b * C + best) * W + w]) best = c;
      }
      y[(b * 2) * W + w] = s / static_cast<double>(C);
      y[(b * 2 + 1) * W + w] = xv[(b * C + best) * W + w];
      arg[b * W + w] = (b * C + best) * W + w;
    }
  }
  return make_result(Shape{B, 2, W}, std::move(y), {x},
                     [x, B, C, W, arg = std::move(arg)](Node& self) {
    double* gx = grad_of(x);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t w = 0; w < W; ++w) {
        const double gmean = self.grad[(b * 2) * W + w] / static_cast<double>(C);
        for (std::size_t c = 0; c < C; ++c) gx[(b * C + c) * W + w] += gmean;
        gx[arg[b * W + w]] += self.grad[(b * 2 + 1) * W + w];
      }
    }
  });
}

Tensor concat(const std::vector<Tensor>& xs, std::size_t axis) {
  if (xs.empty()) shape_error("concat", "no inputs");
  const Shape& first = xs.front().shape();
  if (axis >= first.size()) shape_error("concat", "axis out of range");
  Shape out = first;
  out[axis] = 0;
  for (const auto& t : xs) {
    if (t.rank() != first.size()) shape_error("concat", "rank mismatch");
    for (std::size_t d = 0; d < first.size(); ++d) {
      if (d != axis && t.dim(d) != first[d]) {
        shape_error("concat", shape_str(t.shape()) + " vs " + shape_str(first));
      }
    }
    out[axis] += t.dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];

  std::vector<double> y(numel(out));
  const std::size_t out_row = out[axis] * inner;
  std::size_t offset = 0;
  for (const auto& t : xs) {
    const std::size_t row = t.dim(axis) * inner;
    const auto tv = t.values();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(tv.data() + o * row, row, y.data() + o * out_row + offset);
    }
    offset += row;
  }
  return make_result(out, std::move(y), xs, [xs, axis, outer, inner, out_row](Node& self) {
    std::size_t offset = 0;
    for (const auto& t : xs) {
      const std::size_t row = t.dim(axis) * inner;
      if (double* gt = grad_of(t)) {
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < row; ++i) {
            gt[o * row + i] += self.grad[o * out_row + offset + i];
          }
        }
      }
      offset += row;
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear weight");
  const std::size_t B = x.dim(0), F = x.dim(1), G = weight.dim(1);
  if (weight.dim(0) != F) {
    shape_error("linear", shape_str(x.shape()) + " @ " + shape_str(weight.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != G)) {
    shape_error("linear", "bias " + shape_str(bias.shape()));
  }
  const auto xv = x.values();
  const auto wv = weight.values();
  std::vector<double> y(B * G, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    double* out = y.data() + b * G;
    if (bias.defined()) std::copy_n(bias.values().data(), G, out);
    for (std::size_t f = 0; f < F; ++f) {
      const double xf = xv[b * F + f];
      const double* w = wv.data() + f * G;
      for (std::size_t g = 0; g < G; ++g) out[g] += xf * w[g];
    }
  }
  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(Shape{B, G}, std::move(y), inputs, [=](Node& self) {
    double* gx = grad_of(x);
    double* gw = grad_of(weight);
    double* gb = bias.defined() ? grad_of(bias) : nullptr;
    const auto xv = x.values();
    const auto wv = weight.values();
    for (std::size_t b = 0; b < B; ++b) {
      const double* g = self.grad.data() + b * G;
      for (std::size_t f = 0; f < F; ++f) {
        const double* w = wv.data() + f * G;
        double acc = 0.0;
        for (std::size_t k = 0; k < G; ++k) {
          acc += g[k] * w[k];
          if (gw) gw[f * G + k] += xv[b * F + f] * g[k];
        }
        if (gx) gx[b * F + f] += acc;
      }
      if (gb) {
        for (std::size_t k = 0; k < G; ++k) gb[k] += g[k];
      }
    }
  });
}

}  // namespace msdan::ag
