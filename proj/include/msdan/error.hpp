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

#include <stdexcept>
#include <string>
#include <string_view>

namespace msdan {

enum class Errc {
  // ingestion
  TruncatedFile,
  MalformedHeader,
  SignalNotFound,
  DegenerateCalibration,
  OverlappingAnnotations,
  UnknownStageString,
  SampleRateMismatch,
  MalformedCache,
  // preprocessing
  EmptySignal,
  DegenerateSignal,
  // autograd
  ShapeMismatch,
  NegativeThreshold,
  NonScalarLoss,
  GraphConsumed,
  MalformedCheckpoint,
  // training
  ZeroProportion,
  MissingGradient,
  EmptySplit,
  SplitOverlap,
  // evaluation
  UndefinedMetric,
  TooFewSamples,
  TooFewSubjects,
  SingleClassPresent,
  // cli
  ChecksumMismatch,
  NetworkFailure,
  ConfigMismatch,
  ConfigError,
  IoError,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::SignalNotFound: return "SignalNotFound";
    case Errc::DegenerateCalibration: return "DegenerateCalibration";
    case Errc::OverlappingAnnotations: return "OverlappingAnnotations";
    case Errc::UnknownStageString: return "UnknownStageString";
    case Errc::SampleRateMismatch: return "SampleRateMismatch";
    case Errc::MalformedCache: return "MalformedCache";
    case Errc::EmptySignal: return "EmptySignal";
    case Errc::DegenerateSignal: return "DegenerateSignal";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NegativeThreshold: return "NegativeThreshold";
    case Errc::NonScalarLoss: return "NonScalarLoss";
    case Errc::GraphConsumed: return "GraphConsumed";
    case Errc::MalformedCheckpoint: return "MalformedCheckpoint";
    case Errc::ZeroProportion: return "ZeroProportion";
    case Errc::MissingGradient: return "MissingGradient";
    case Errc::EmptySplit: return "EmptySplit";
    case Errc::SplitOverlap: return "SplitOverlap";
    case Errc::UndefinedMetric: return "UndefinedMetric";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::TooFewSubjects: return "TooFewSubjects";
    case Errc::SingleClassPresent: return "SingleClassPresent";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::NetworkFailure: return "NetworkFailure";
    case Errc::ConfigMismatch: return "ConfigMismatch";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

// All library failures are reported through this one exception type; callers
// branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace msdan
