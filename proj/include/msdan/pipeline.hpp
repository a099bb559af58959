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
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msdan/config.hpp"
#include "msdan/edf.hpp"
#include "msdan/error.hpp"
#include "msdan/evaluation.hpp"

namespace msdan::pipeline {

namespace fs = std::filesystem;

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitRuntime = 4;

int exit_code_for(Errc code);

struct RecordingPair {
  std::string subject_id;
  fs::path psg;
  std::optional<fs::path> hypnogram;
};

// Every EDF under `root` that is not itself a hypnogram, paired with its
// hypnogram: the same stem, or (Sleep-EDF naming) a stem of equal length that
// differs only in its last character, after removing "-PSG" / "-Hypnogram"
// suffixes. The subject id is the recording's stem. Sorted by subject id.
std::vector<RecordingPair> discover_recordings(const fs::path& root);

// Cache directory layout under output_dir.
struct CachePaths {
  fs::path dir;
  fs::path epochs;       // epochs.bin
  fs::path index;        // epochs_index.csv
  fs::path stats;        // stats.csv
  fs::path counts;       // class_counts.txt
  fs::path fingerprint;  // fingerprint.txt
};
CachePaths cache_paths(const fs::path& output_dir);

struct PreprocessSummary {
  std::size_t recordings = 0;
  std::size_t epochs = 0;
  std::vector<std::string> failures;  // "<subject>: <reason>"
  std::array<std::size_t, kNumStages> counts{};
  bool reused_cache = false;
};

// Ingests, normalizes per subject and epochs every discovered recording,
// writing the epoch cache, per-subject statistics and the class-count table.
// A recording that fails is reported and skipped. Reuses an existing cache
// when the corpus fingerprint (paths, sizes, mtimes, channel) is unchanged.
PreprocessSummary cmd_preprocess(const config::RunConfig& cfg);

// Epoch cache with subject ids and per-recording epoch indices restored.
// Throws Errc::MalformedCache.
std::vector<edf::LabeledEpoch> load_dataset(const fs::path& output_dir);

struct TrainSummary {
  eval::EvalResult pooled;
  std::vector<fs::path> checkpoints;
  fs::path metrics_path;
};

// Trains one model per fold (or the hold-out split), keeps each fold's best
// checkpoint with its manifest and training log, evaluates it on the held
// out data and writes pooled metrics.json, predictions.csv, curves.csv and
// confusion.svg to output_dir.
TrainSummary cmd_train(const config::RunConfig& cfg);

// With a checkpoint: evaluates it on the validation side of the configured
// split (fold 0 unless a fold is configured). Without: re-evaluates every
// fold checkpoint written by cmd_train. Reports go to output_dir/eval.
eval::EvalResult cmd_eval(const config::RunConfig& cfg,
                          const std::optional<fs::path>& checkpoint);

struct PredictionRow {
  int epoch_index = 0;
  double onset_seconds = 0.0;
  Stage predicted = Stage::W;
  eval::Probabilities probabilities{};
  std::optional<Stage> reference;
};

// Stages every whole 30 s window of `edf_file`. Throws Errc::ConfigMismatch
// before reading any signal when the checkpoint was trained on another
// channel or input length. Writes <stem>_stages.csv and <stem>_hypnogram.svg
// to out_dir, overlaying the manual scoring when a hypnogram is found.
std::vector<PredictionRow> cmd_predict(const fs::path& checkpoint, const fs::path& edf_file,
                                       const std::string& channel, const fs::path& out_dir,
                                       const std::optional<fs::path>& hypnogram = std::nullopt);

// Rebuilds confusion.svg and one hypnogram per subject from the
// predictions.csv in `dir`. Returns the files written.
std::vector<fs::path> cmd_plot(const fs::path& dir);

}  // namespace msdan::pipeline
