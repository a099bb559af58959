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

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace msdan {

// Integer codes are the network's class indices.
enum class Stage : std::uint8_t { N3 = 0, N2 = 1, N1 = 2, R = 3, W = 4 };

inline constexpr int kNumStages = 5;

inline constexpr std::array<Stage, kNumStages> kAllStages = {
    Stage::N3, Stage::N2, Stage::N1, Stage::R, Stage::W};

// Row order used by the published confusion tables.
inline constexpr std::array<Stage, kNumStages> kDisplayRowOrder = {
    Stage::W, Stage::R, Stage::N1, Stage::N2, Stage::N3};

constexpr int stage_code(Stage s) { return static_cast<int>(s); }

constexpr std::optional<Stage> stage_from_code(int code) {
  if (code < 0 || code >= kNumStages) return std::nullopt;
  return static_cast<Stage>(code);
}

constexpr std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::N3: return "N3";
    case Stage::N2: return "N2";
    case Stage::N1: return "N1";
    case Stage::R: return "R";
    case Stage::W: return "W";
  }
  return "?";
}

constexpr std::optional<Stage> stage_from_name(std::string_view name) {
  for (Stage s : kAllStages) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

}  // namespace msdan
