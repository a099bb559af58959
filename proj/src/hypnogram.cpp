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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "msdan/edf.hpp"
#include "msdan/error.hpp"

namespace msdan::edf {

namespace {

constexpr char kTalOnsetEnd = 0x14;
constexpr char kTalDuration = 0x15;

double parse_seconds(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(Errc::MalformedHeader, "bad annotation time '" + std::string(s) + "'");
  }
  return v;
}

// One time-stamped annotation list: +onset[\x15duration]\x14text\x14...\x14
void parse_tal(std::string_view tal, std::vector<Annotation>& out) {
  const auto onset_end = tal.find(kTalOnsetEnd);
  if (onset_end == std::string_view::npos) {
    throw Error(Errc::MalformedHeader, "annotation without onset terminator");
  }
  std::string_view stamp = tal.substr(0, onset_end);
  Annotation ann;
  const auto dur_at = stamp.find(kTalDuration);
  if (dur_at != std::string_view::npos) {
    ann.onset = parse_seconds(stamp.substr(0, dur_at));
    ann.duration = parse_seconds(stamp.substr(dur_at + 1));
  } else {
    ann.onset = parse_seconds(stamp);
  }
  std::string_view rest = tal.substr(onset_end + 1);
  while (!rest.empty()) {
    const auto end = rest.find(kTalOnsetEnd);
    std::string_view text = rest.substr(0, end);
    if (!text.empty()) ann.texts.emplace_back(text);
    if (end == std::string_view::npos) break;
    rest.remove_prefix(end + 1);
  }
  // The first TAL of each record is a time-keeping stamp with no text.
  if (!ann.texts.empty()) out.push_back(std::move(ann));
}

std::string normalize_stage(std::string_view raw) {
  static const std::map<std::string_view, std::string_view> kLong = {
      {"Sleep stage W", "W"}, {"Sleep stage 1", "1"}, {"Sleep stage 2", "2"},
      {"Sleep stage 3", "3"}, {"Sleep stage 4", "4"}, {"Sleep stage R", "R"},
      {"Sleep stage ?", "?"}, {"Movement time", "M"},
  };
  if (auto it = kLong.find(raw); it != kLong.end()) return std::string(it->second);
  if (raw == "W" || raw == "1" || raw == "2" || raw == "3" || raw == "4" ||
      raw == "R" || raw == "M" || raw == "?") {
    return std::string(raw);
  }
  if (raw == "unscored" || raw == "Unscored") return "?";
  throw Error(Errc::UnknownStageString, "'" + std::string(raw) + "'");
}

std::string stage_from_code_sample(int code) {
  switch (code) {
    case 0: case 'W': return "W";
    case 1: case '1': return "1";
    case 2: case '2': return "2";
    case 3: case '3': return "3";
    case 4: case '4': return "4";
    case 5: case 'R': return "R";
    case 6: case 'M': return "M";
    case 9: case '?': return "?";
    default:
      throw Error(Errc::UnknownStageString, "hypnogram code " + std::to_string(code));
  }
}

void check_ordered(const std::vector<StageInterval>& intervals) {
  constexpr double kSlack = 1e-6;
  for (std::size_t i = 1; i < intervals.size(); ++i) {
    const auto& prev = intervals[i - 1];
    if (intervals[i].onset + kSlack < prev.onset + prev.duration) {
      throw Error(Errc::OverlappingAnnotations,
                  "interval at " + std::to_string(intervals[i].onset) +
                      " s starts before the previous one ends at " +
                      std::to_string(prev.onset + prev.duration) + " s");
    }
  }
}

}  // namespace

std::vector<Annotation> parse_annotations(const EdfFile& file) {
  std::vector<Annotation> out;
  const auto& h = file.header;
  for (std::size_t i = 0; i < h.signals.size(); ++i) {
    if (h.signals[i].label != kAnnotationsLabel) continue;
    const auto spr = static_cast<std::size_t>(h.signals[i].samples_per_record);
    const auto& samples = file.digital[i];
    for (std::size_t r = 0; r * spr < samples.size(); ++r) {
      std::string record;
      record.reserve(2 * spr);
      for (std::size_t k = 0; k < spr; ++k) {
        const auto v = static_cast<std::uint16_t>(samples[r * spr + k]);
        record.push_back(static_cast<char>(v & 0xff));
        record.push_back(static_cast<char>(v >> 8));
      }
      std::string_view view(record);
      while (!view.empty()) {
        const auto end = view.find('\0');
        std::string_view tal = view.substr(0, end);
        if (!tal.empty()) parse_tal(tal, out);
        if (end == std::string_view::npos) break;
        view.remove_prefix(end + 1);
      }
    }
  }
  return out;
}

std::vector<StageInterval> parse_hypnogram(const EdfFile& file) {
  std::vector<StageInterval> intervals;
  const bool has_annotations =
      std::any_of(file.header.signals.begin(), file.header.signals.end(),
                  [](const SignalHeader& s) { return s.label == kAnnotationsLabel; });
  if (has_annotations) {
    for (const auto& ann : parse_annotations(file)) {
      for (const auto& text : ann.texts) {
        intervals.push_back({ann.onset, ann.duration, normalize_stage(text)});
      }
    }
  } else {
    const double step = file.header.record_duration /
                        file.header.signals.front().samples_per_record;
    const auto& codes = file.digital.front();
    intervals.reserve(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
      intervals.push_back({static_cast<double>(i) * step, step,
                           stage_from_code_sample(codes[i])});
    }
  }
  check_ordered(intervals);
  return intervals;
}

std::vector<StageInterval> read_hypnogram(const std::filesystem::path& path) {
  return parse_hypnogram(read_edf(path));
}

std::optional<Stage> map_label(std::string_view raw_stage) {
  const std::string s = normalize_stage(raw_stage);
  if (s == "W") return Stage::W;
  if (s == "R") return Stage::R;
  if (s == "1") return Stage::N1;
  if (s == "2") return Stage::N2;
  if (s == "3" || s == "4") return Stage::N3;
  return std::nullopt;  // M, ?
}

std::vector<LabeledEpoch> epoch_recording(const EegRecording& recording,
                                          std::span<const StageInterval> stages) {
  const double exact = kEpochSeconds * recording.sample_rate;
  const double rounded = std::round(exact);
  if (rounded < 1.0 || std::abs(exact - rounded) > 1e-6) {
    throw Error(Errc::SampleRateMismatch,
                "30 s at " + std::to_string(recording.sample_rate) +
                    " Hz is not a whole number of samples");
  }
  const auto epoch_len = static_cast<std::size_t>(rounded);
  const std::size_t windows = recording.samples.size() / epoch_len;

  constexpr double kSlack = 1e-6;
  std::vector<LabeledEpoch> out;
  std::size_t cursor = 0;
  for (std::size_t w = 0; w < windows; ++w) {
    const double t0 = static_cast<double>(w) * kEpochSeconds;
    const double t1 = t0 + kEpochSeconds;
    while (cursor < stages.size() &&
           stages[cursor].onset + stages[cursor].duration <= t0 + kSlack) {
      ++cursor;
    }
    if (cursor == stages.size()) break;
    const auto& iv = stages[cursor];
    if (iv.onset > t0 + kSlack || iv.onset + iv.duration < t1 - kSlack) continue;
    const auto label = map_label(iv.stage);
    if (!label) continue;

    LabeledEpoch epoch;
    epoch.label = *label;
    epoch.subject_id = recording.subject_id;
    epoch.epoch_index = static_cast<int>(w);
    epoch.samples.resize(epoch_len);
    const auto begin = recording.samples.begin() + static_cast<std::ptrdiff_t>(w * epoch_len);
    std::transform(begin, begin + static_cast<std::ptrdiff_t>(epoch_len),
                   epoch.samples.begin(), [](double v) { return static_cast<float>(v); });
    out.push_back(std::move(epoch));
  }
  return out;
}

}  // namespace msdan::edf
