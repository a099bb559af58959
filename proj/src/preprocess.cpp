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

#include "msdan/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "msdan/error.hpp"

namespace msdan::preprocess {

Rng derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

void AugmentConfig::validate() const {
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
    throw Error(Errc::ConfigError, "flip_probability must lie in [0, 1]");
  }
  if (!(noise_fraction >= 0.0)) {
    throw Error(Errc::ConfigError, "noise_fraction must be >= 0");
  }
}

double quantile(std::span<const double> samples, double q) {
  if (samples.empty()) throw Error(Errc::EmptySignal, "quantile of an empty signal");
  std::vector<double> work(samples.begin(), samples.end());
  const double pos = q * static_cast<double>(work.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(lo), work.end());
  const double lo_value = work[lo];
  if (frac == 0.0 || lo + 1 >= work.size()) return lo_value;
  const double hi_value =
      *std::min_element(work.begin() + static_cast<std::ptrdiff_t>(lo) + 1, work.end());
  return lo_value + frac * (hi_value - lo_value);
}

NormalizationStats compute_stats(std::span<const double> samples) {
  if (samples.empty()) throw Error(Errc::EmptySignal, "no samples");
  for (double v : samples) {
    if (!std::isfinite(v)) throw Error(Errc::EmptySignal, "non-finite sample");
  }
  NormalizationStats stats{quantile(samples, 0.05), quantile(samples, 0.95)};
  if (stats.s05 == stats.s95) {
    throw Error(Errc::DegenerateSignal,
                "5th and 95th percentiles coincide at " + std::to_string(stats.s05));
  }
  return stats;
}

double normalize_one(double x, const NormalizationStats& stats) {
  return 2.0 * (x - stats.s05) / (stats.s95 - stats.s05) - 1.0;
}

std::vector<double> normalize(std::span<const double> x, const NormalizationStats& stats) {
  if (!(stats.s95 > stats.s05)) {
    throw Error(Errc::DegenerateSignal, "s95 must exceed s05");
  }
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(),
                 [&](double v) { return normalize_one(v, stats); });
  return out;
}

edf::LabeledEpoch augment(const edf::LabeledEpoch& epoch, const AugmentConfig& cfg,
                          Rng& rng) {
  edf::LabeledEpoch out = epoch;
  std::bernoulli_distribution flip(cfg.flip_probability);
  if (flip(rng)) std::reverse(out.samples.begin(), out.samples.end());
  if (cfg.noise_fraction > 0.0 && !out.samples.empty()) {
    const double n = static_cast<double>(out.samples.size());
    const double mean = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) / n;
    double ss = 0.0;
    for (float v : out.samples) ss += (v - mean) * (v - mean);
    const double sigma = cfg.noise_fraction * std::sqrt(ss / n);
    if (sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, sigma);
      for (float& v : out.samples) v = static_cast<float>(v + noise(rng));
    }
  }
  return out;
}

}  // namespace msdan::preprocess
