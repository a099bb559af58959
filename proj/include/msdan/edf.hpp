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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msdan/stage.hpp"

namespace msdan::edf {

inline constexpr std::string_view kDefaultChannel = "EEG Fpz-Cz";
inline constexpr std::string_view kAnnotationsLabel = "EDF Annotations";
inline constexpr double kEpochSeconds = 30.0;

struct StartDateTime {
  int year = 1985;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;

  friend bool operator==(const StartDateTime&, const StartDateTime&) = default;
};

struct SignalHeader {
  std::string label;
  std::string transducer;
  std::string physical_dimension;
  double physical_min = 0.0;
  double physical_max = 0.0;
  int digital_min = -32768;
  int digital_max = 32767;
  std::string prefiltering;
  int samples_per_record = 0;
  std::string reserved;

  friend bool operator==(const SignalHeader&, const SignalHeader&) = default;
};

struct Header {
  std::string version = "0";
  std::string patient_id;
  std::string recording_id;
  StartDateTime start;
  int header_bytes = 0;
  // "EDF+C" / "EDF+D" for EDF+ files, otherwise free text.
  std::string reserved;
  long record_count = 0;
  double record_duration = 0.0;
  std::vector<SignalHeader> signals;

  int signal_count() const { return static_cast<int>(signals.size()); }
  bool is_edf_plus() const { return reserved.rfind("EDF+", 0) == 0; }
  int record_samples() const;  // samples per data record over all signals
  double sample_rate(int signal) const;

  friend bool operator==(const Header&, const Header&) = default;
};

struct EdfFile {
  Header header;
  // digital[i] holds every sample of signal i, records concatenated.
  std::vector<std::vector<std::int16_t>> digital;

  // Throws Errc::SignalNotFound.
  std::size_t signal_index(std::string_view label) const;
};

// Decodes header and de-interleaves the 16-bit little-endian data records.
// Throws Errc::TruncatedFile / Errc::MalformedHeader.
EdfFile parse_edf(std::span<const std::byte> bytes);
EdfFile read_edf(const std::filesystem::path& path);

// Encodes an EdfFile; header_bytes is recomputed. Field values that do not fit
// their fixed ASCII width throw Errc::MalformedHeader.
std::vector<std::byte> serialize_edf(const EdfFile& file);
void write_edf(const std::filesystem::path& path, const EdfFile& file);

// Affine digital -> physical map. Values outside [digital_min, digital_max]
// are clamped and reported once per call through the logger.
std::vector<double> calibrate(std::span<const std::int16_t> digital,
                              const SignalHeader& signal);

struct EegRecording {
  std::string subject_id;
  std::string channel_name;
  double sample_rate = 0.0;
  std::vector<double> samples;  // physical units
  StartDateTime start;
};

EegRecording extract_recording(const EdfFile& file, std::string_view channel,
                               std::string subject_id);

// ---------------------------------------------------------------------------
// Hypnograms

struct Annotation {
  double onset = 0.0;
  double duration = 0.0;
  std::vector<std::string> texts;
};

// Raw stage strings are normalized to one of W,1,2,3,4,R,M,?.
struct StageInterval {
  double onset = 0.0;
  double duration = 0.0;
  std::string stage;

  friend bool operator==(const StageInterval&, const StageInterval&) = default;
};

// Decodes the time-stamped annotation lists of every "EDF Annotations" signal.
std::vector<Annotation> parse_annotations(const EdfFile& file);

// Accepts either an EDF+ annotation file ("Sleep stage W", "Movement time", ...)
// or a sidecar code hypnogram: an EDF file whose single signal holds one stage
// code per sample (0=W 1..4 5=R 6=M 9=unscored, ASCII stage letters also
// accepted). Output is sorted by onset; adjacent equal stages are not merged.
// Throws Errc::OverlappingAnnotations / Errc::UnknownStageString.
std::vector<StageInterval> parse_hypnogram(const EdfFile& file);
std::vector<StageInterval> read_hypnogram(const std::filesystem::path& path);

// Excluded (nullopt) for M and unscored. Throws Errc::UnknownStageString.
std::optional<Stage> map_label(std::string_view raw_stage);

struct LabeledEpoch {
  std::vector<float> samples;
  Stage label = Stage::W;
  std::string subject_id;
  int epoch_index = 0;
};

// One epoch per fully covered 30 s window with an included label; window i
// spans samples [i*n, (i+1)*n). Throws Errc::SampleRateMismatch when 30 s is
// not a whole number of samples.
std::vector<LabeledEpoch> epoch_recording(
    const EegRecording& recording, std::span<const StageInterval> stages);

// Binary epoch cache: "MSDANEPC", u32 version, u64 count, then per epoch a
// label byte followed by kCacheEpochSamples little-endian float32 values.
inline constexpr std::uint32_t kCacheVersion = 1;
inline constexpr std::size_t kCacheEpochSamples = 3000;

void write_epoch_cache(const std::filesystem::path& path,
                       std::span<const LabeledEpoch> epochs);
// subject_id is left empty and epoch_index is the position in the file.
std::vector<LabeledEpoch> read_epoch_cache(const std::filesystem::path& path);

}  // namespace msdan::edf
