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

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "msdan/edf.hpp"

namespace msdan::preprocess {

using Rng = std::mt19937_64;

// Independent, reproducible stream for a (seed, a, b) triple, e.g.
// (run seed, training pass, epoch index).
Rng derive_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0);

struct NormalizationStats {
  double s05 = 0.0;
  double s95 = 0.0;
};

struct AugmentConfig {
  double flip_probability = 0.5;
  double noise_fraction = 0.01;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Empirical quantile with linear interpolation between closest ranks:
// position (n - 1) * q in the sorted array.
double quantile(std::span<const double> samples, double q);

// Throws Errc::EmptySignal / Errc::DegenerateSignal.
NormalizationStats compute_stats(std::span<const double> samples);

// 2 (x - s05) / (s95 - s05) - 1, unclipped. Throws Errc::DegenerateSignal.
std::vector<double> normalize(std::span<const double> x, const NormalizationStats& stats);
double normalize_one(double x, const NormalizationStats& stats);

// Time reversal with probability flip_probability, then zero-mean Gaussian
// noise with sigma = noise_fraction * std(samples). Label is untouched.
edf::LabeledEpoch augment(const edf::LabeledEpoch& epoch, const AugmentConfig& cfg,
                          Rng& rng);

}  // namespace msdan::preprocess
