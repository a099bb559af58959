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
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "msdan/edf.hpp"
#include "msdan/stage.hpp"

namespace msdan::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Class frequency in Hz for the separable sinusoid task: 2, 6, 10, 14, 18
// for codes 0..4.
double class_frequency(Stage s);

// Sinusoid at the class frequency with random phase and amplitude in
// [0.8, 1.2], plus Gaussian noise of the given standard deviation, sampled at
// 100 Hz.
std::vector<double> stage_waveform(Stage s, std::size_t samples, std::uint64_t seed,
                                   double noise = 0.1);

// n epochs with labels cycling through the five classes.
std::vector<edf::LabeledEpoch> sinusoid_dataset(std::size_t n, std::size_t length,
                                                std::uint64_t seed, double noise = 0.1);

// Single-channel EDF at `rate` Hz with 1 s data records, physical range
// +-500 uV over the full int16 digital range.
edf::EdfFile make_psg(const std::vector<double>& physical, double rate = 100.0,
                      const std::string& label = std::string(edf::kDefaultChannel));

// EDF+ annotation file with one "Sleep stage X" annotation per interval.
edf::EdfFile make_annotation_hypnogram(
    const std::vector<std::pair<double, std::string>>& onsets_and_texts,
    double epoch_seconds = 30.0);

// Code-signal hypnogram sidecar, one code per 30 s.
edf::EdfFile make_code_hypnogram(const std::vector<int>& codes);

// Writes S<i>-PSG.edf / S<i>-Hypnogram.edf pairs whose EEG follows the stage
// sequence with the class waveforms. Returns the subject ids.
std::vector<std::string> write_synthetic_corpus(const std::filesystem::path& dir,
                                                std::size_t subjects,
                                                std::size_t epochs_per_subject,
                                                std::uint64_t seed);

}  // namespace msdan::testing
