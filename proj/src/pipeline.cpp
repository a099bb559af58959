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

#include "msdan/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "msdan/model.hpp"
#include "msdan/params.hpp"
#include "msdan/preprocess.hpp"
#include "msdan/report.hpp"
#include "msdan/training.hpp"

namespace msdan::pipeline {

namespace {

constexpr std::string_view kPsgSuffix = "-PSG";
constexpr std::string_view kHypnogramSuffix = "-Hypnogram";

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_hypnogram_name(const std::string& stem) {
  return lower(stem).find("hypnogram") != std::string::npos;
}

std::string strip_suffix(std::string stem, std::string_view suffix) {
  if (stem.size() > suffix.size() &&
      lower(stem.substr(stem.size() - suffix.size())) == lower(std::string(suffix))) {
    stem.resize(stem.size() - suffix.size());
  }
  return stem;
}

bool stems_pair(const std::string& psg, const std::string& hyp) {
  if (psg == hyp) return true;
  return psg.size() == hyp.size() && !psg.empty() &&
         psg.compare(0, psg.size() - 1, hyp, 0, hyp.size() - 1) == 0;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_field(const std::string& s, const fs::path& file) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(Errc::MalformedCache, file.string() + ": bad field '" + s + "'");
  }
  return v;
}

std::string file_stamp(const fs::path& p) {
  std::error_code ec;
  const auto size = fs::file_size(p, ec);
  const auto mtime = fs::last_write_time(p, ec).time_since_epoch().count();
  return p.string() + " " + std::to_string(size) + " " + std::to_string(mtime);
}

std::string fingerprint(const std::vector<RecordingPair>& recs, const config::RunConfig& cfg) {
  std::ostringstream out;
  out << "cache_version " << edf::kCacheVersion << '\n' << "channel " << cfg.channel << '\n';
  for (const auto& r : recs) {
    out << r.subject_id << ' ' << file_stamp(r.psg) << " | "
        << (r.hypnogram ? file_stamp(*r.hypnogram) : std::string("none")) << '\n';
  }
  return out.str();
}

struct IngestResult {
  std::vector<edf::LabeledEpoch> epochs;
  preprocess::NormalizationStats stats;
  std::string error;
};

edf::EegRecording load_normalized(const fs::path& psg, const std::string& channel,
                                  const std::string& subject,
                                  preprocess::NormalizationStats* stats_out) {
  auto rec = edf::extract_recording(edf::read_edf(psg), channel, subject);
  const auto stats = preprocess::compute_stats(rec.samples);
  rec.samples = preprocess::normalize(rec.samples, stats);
  if (stats_out) *stats_out = stats;
  return rec;
}

void require_epoch_length(const edf::EegRecording& rec) {
  const double per_epoch = rec.sample_rate * edf::kEpochSeconds;
  if (per_epoch != static_cast<double>(edf::kCacheEpochSamples)) {
    throw Error(Errc::SampleRateMismatch,
                "channel '" + rec.channel_name + "' is sampled at " +
                    std::to_string(rec.sample_rate) + " Hz; 30 s epochs must hold " +
                    std::to_string(edf::kCacheEpochSamples) + " samples (100 Hz)");
  }
}

IngestResult ingest(const RecordingPair& pair, const std::string& channel) {
  IngestResult r;
  try {
    if (!pair.hypnogram) {
      r.error = "no hypnogram found next to " + pair.psg.filename().string();
      return r;
    }
    const auto intervals = edf::read_hypnogram(*pair.hypnogram);
    const auto rec = load_normalized(pair.psg, channel, pair.subject_id, &r.stats);
    require_epoch_length(rec);
    r.epochs = edf::epoch_recording(rec, intervals);
  } catch (const Error& e) {
    r.error = e.what();
  }
  return r;
}

std::vector<eval::Split> build_splits(const config::RunConfig& cfg,
                                      std::span<const edf::LabeledEpoch> epochs,
                                      std::vector<std::size_t>* fold_ids) {
  std::vector<eval::Split> splits;
  if (cfg.split.kind == config::SplitKind::KFold) {
    const auto kf = eval::kfold_split(epochs.size(), cfg.split.k, cfg.seed);
    for (std::size_t f = 0; f < cfg.split.k; ++f) {
      if (cfg.split.fold && *cfg.split.fold != f) continue;
      splits.push_back(kf.fold(f));
      fold_ids->push_back(f);
    }
  } else {
    std::vector<std::string> subjects;
    for (const auto& e : epochs) subjects.push_back(e.subject_id);
    splits.push_back(eval::holdout_split(subjects, cfg.split.ratio, cfg.seed).apply(epochs));
    fold_ids->push_back(0);
  }
  return splits;
}

fs::path fold_dir(const fs::path& out, const config::RunConfig& cfg, std::size_t fold) {
  return out / (cfg.split.kind == config::SplitKind::KFold ? "fold" + std::to_string(fold)
                                                           : std::string("holdout"));
}

std::string protocol_name(const config::RunConfig& cfg) {
  return config::split_to_string(cfg.split);
}

void write_reports(const fs::path& dir, const eval::EvalResult& result,
                   const std::string& protocol, std::span<const report::FoldReport> folds) {
  report::write_text(dir / "metrics.json", report::metrics_json(result, protocol, folds));
  report::write_text(dir / "predictions.csv", report::predictions_csv(result.predictions));
  report::write_text(dir / "curves.csv", report::curves_csv(result.curves));
  report::write_text(dir / "confusion.svg", report::confusion_svg(result.confusion, protocol));
}

model::Msdan load_model(const fs::path& checkpoint, const config::ModelManifest& manifest) {
  return model::Msdan(manifest.model, ag::load_checkpoint(checkpoint));
}

void check_manifest(const config::ModelManifest& m, const std::string& channel,
                    const fs::path& checkpoint) {
  if (m.channel != channel) {
    throw Error(Errc::ConfigMismatch, "checkpoint " + checkpoint.string() +
                                          " was trained on channel '" + m.channel +
                                          "', requested '" + channel + "'");
  }
  if (m.model.input_length != edf::kCacheEpochSamples) {
    throw Error(Errc::ConfigMismatch,
                "checkpoint expects " + std::to_string(m.model.input_length) +
                    "-sample epochs; this pipeline produces " +
                    std::to_string(edf::kCacheEpochSamples));
  }
}

}  // namespace

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ConfigError:
    case Errc::ConfigMismatch:
      return kExitConfig;
    case Errc::TruncatedFile:
    case Errc::MalformedHeader:
    case Errc::SignalNotFound:
    case Errc::DegenerateCalibration:
    case Errc::OverlappingAnnotations:
    case Errc::UnknownStageString:
    case Errc::SampleRateMismatch:
    case Errc::MalformedCache:
    case Errc::EmptySignal:
    case Errc::DegenerateSignal:
    case Errc::MalformedCheckpoint:
    case Errc::ChecksumMismatch:
    case Errc::ZeroProportion:
    case Errc::EmptySplit:
    case Errc::SplitOverlap:
    case Errc::TooFewSamples:
    case Errc::TooFewSubjects:
    case Errc::SingleClassPresent:
    case Errc::UndefinedMetric:
    case Errc::IoError:
      return kExitData;
    default:
      return kExitRuntime;
  }
}

std::vector<RecordingPair> discover_recordings(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(Errc::ConfigError, "dataset root " + root.string() + " is not a directory");
  }
  std::vector<fs::path> psgs;
  std::vector<std::pair<std::string, fs::path>> hyps;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || lower(entry.path().extension().string()) != ".edf") {
      continue;
    }
    const std::string stem = entry.path().stem().string();
    if (is_hypnogram_name(stem)) {
      hyps.emplace_back(strip_suffix(stem, kHypnogramSuffix), entry.path());
    } else {
      psgs.push_back(entry.path());
    }
  }
  std::sort(hyps.begin(), hyps.end());
  std::vector<RecordingPair> out;
  for (const auto& psg : psgs) {
    RecordingPair pair;
    pair.subject_id = strip_suffix(psg.stem().string(), kPsgSuffix);
    pair.psg = psg;
    // Prefer an exact stem match in the same directory.
    for (int pass = 0; pass < 2 && !pair.hypnogram; ++pass) {
      for (const auto& [stem, path] : hyps) {
        if (path.parent_path() != psg.parent_path()) continue;
        if (pass == 0 ? stem == pair.subject_id : stems_pair(pair.subject_id, stem)) {
          pair.hypnogram = path;
          break;
        }
      }
    }
    out.push_back(std::move(pair));
  }
  std::sort(out.begin(), out.end(), [](const RecordingPair& a, const RecordingPair& b) {
    return std::tie(a.subject_id, a.psg) < std::tie(b.subject_id, b.psg);
  });
  return out;
}

CachePaths cache_paths(const fs::path& output_dir) {
  CachePaths p;
  p.dir = output_dir / "cache";
  p.epochs = p.dir / "epochs.bin";
  p.index = p.dir / "epochs_index.csv";
  p.stats = p.dir / "stats.csv";
  p.counts = p.dir / "class_counts.txt";
  p.fingerprint = p.dir / "fingerprint.txt";
  return p;
}

PreprocessSummary cmd_preprocess(const config::RunConfig& cfg) {
  config::validate(cfg);
  const auto paths = cache_paths(cfg.output_dir);
  auto recs = discover_recordings(cfg.dataset_root);
  if (cfg.max_recordings > 0 && recs.size() > cfg.max_recordings) {
    recs.resize(cfg.max_recordings);
  }
  const std::string print = fingerprint(recs, cfg);
  PreprocessSummary summary;
  summary.recordings = recs.size();

  std::error_code ec;
  if (fs::exists(paths.fingerprint, ec) && fs::exists(paths.epochs, ec) &&
      fs::exists(paths.index, ec) && read_file(paths.fingerprint) == print) {
    const auto epochs = load_dataset(cfg.output_dir);
    for (const auto& e : epochs) ++summary.counts[stage_code(e.label)];
    summary.epochs = epochs.size();
    summary.reused_cache = true;
    spdlog::info("epoch cache is current ({} epochs); skipping ingestion", epochs.size());
    return summary;
  }

  std::vector<IngestResult> results(recs.size());
  std::atomic<std::size_t> next{0};
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min(cfg.workers ? cfg.workers : hw, recs.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < recs.size(); i = next++) {
          results[i] = ingest(recs[i], cfg.channel);
        }
      });
    }
  }

  std::vector<edf::LabeledEpoch> all;
  std::ostringstream index, stats;
  index << "row,subject_id,epoch_index\n";
  stats << "subject_id,s05,s95\n";
  for (std::size_t i = 0; i < recs.size(); ++i) {
    auto& r = results[i];
    if (!r.error.empty()) {
      spdlog::error("{}: {}", recs[i].subject_id, r.error);
      summary.failures.push_back(recs[i].subject_id + ": " + r.error);
      continue;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", r.stats.s05, r.stats.s95);
    stats << recs[i].subject_id << ',' << buf << '\n';
    for (auto& e : r.epochs) {
      index << all.size() << ',' << e.subject_id << ',' << e.epoch_index << '\n';
      ++summary.counts[stage_code(e.label)];
      all.push_back(std::move(e));
    }
  }
  summary.epochs = all.size();
  fs::create_directories(paths.dir);
  edf::write_epoch_cache(paths.epochs, all);
  report::write_text(paths.index, index.str());
  report::write_text(paths.stats, stats.str());
  report::write_text(paths.counts, report::class_count_table(summary.counts));
  report::write_text(paths.fingerprint, print);
  return summary;
}

std::vector<edf::LabeledEpoch> load_dataset(const fs::path& output_dir) {
  const auto paths = cache_paths(output_dir);
  auto epochs = edf::read_epoch_cache(paths.epochs);
  std::istringstream in(read_file(paths.index));
  std::string line;
  std::getline(in, line);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3 || row >= epochs.size() ||
        parse_field<std::size_t>(f[0], paths.index) != row) {
      throw Error(Errc::MalformedCache, paths.index.string() + " disagrees with the cache at row " +
                                            std::to_string(row));
    }
    epochs[row].subject_id = f[1];
    epochs[row].epoch_index = parse_field<int>(f[2], paths.index);
    ++row;
  }
  if (row != epochs.size()) {
    throw Error(Errc::MalformedCache, "index lists " + std::to_string(row) + " epochs, cache has " +
                                          std::to_string(epochs.size()));
  }
  return epochs;
}

TrainSummary cmd_train(const config::RunConfig& cfg) {
  config::validate(cfg);
  const auto pre = cmd_preprocess(cfg);
  if (pre.epochs == 0) throw Error(Errc::EmptySplit, "the corpus produced no labeled epochs");
  const auto epochs = load_dataset(cfg.output_dir);
  report::write_text(cfg.output_dir / "run.cfg", config::to_text(cfg));

  std::vector<std::size_t> fold_ids;
  const auto splits = build_splits(cfg, epochs, &fold_ids);
  TrainSummary summary;
  std::vector<eval::EpochPrediction> pooled;
  std::vector<report::FoldReport> folds;
  const config::ModelManifest manifest{cfg.model, cfg.channel, edf::kCacheVersion};

  for (std::size_t s = 0; s < splits.size(); ++s) {
    const std::size_t fold = fold_ids[s];
    const fs::path dir = fold_dir(cfg.output_dir, cfg, fold);
    fs::create_directories(dir);
    spdlog::info("{}: {} training / {} validation epochs", dir.filename().string(),
                 splits[s].train.size(), splits[s].validation.size());

    train::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed + fold;
    preprocess::AugmentConfig ac = cfg.augment;
    ac.rng_seed = cfg.augment.rng_seed + fold;
    train::TrainHooks hooks;
    hooks.on_checkpoint = [&](std::size_t pass, const ag::ParamStore& params) {
      const auto path = dir / ("pass" + std::to_string(pass) + ".ckpt");
      ag::save_checkpoint(path, params);
      config::save_manifest(path, manifest);
    };
    auto result = train::train(epochs, splits[s], tc, cfg.model, ac, hooks);

    const auto ckpt = dir / "best.ckpt";
    ag::save_checkpoint(ckpt, result.best_params);
    config::save_manifest(ckpt, manifest);
    train::write_training_log(dir / "training_log.csv", result.log);
    summary.checkpoints.push_back(ckpt);

    model::Msdan net(cfg.model, std::move(result.best_params));
    auto fold_eval = eval::evaluate(net, epochs, splits[s].validation);
    folds.push_back({dir.filename().string(), fold_eval.confusion, result.best_pass});
    for (auto& p : fold_eval.predictions) pooled.push_back(std::move(p));
  }

  summary.pooled = eval::summarize(std::move(pooled));
  write_reports(cfg.output_dir, summary.pooled, protocol_name(cfg), folds);
  summary.metrics_path = cfg.output_dir / "metrics.json";
  return summary;
}

eval::EvalResult cmd_eval(const config::RunConfig& cfg,
                          const std::optional<fs::path>& checkpoint) {
  config::validate(cfg);
  if (checkpoint) check_manifest(config::load_manifest(*checkpoint), cfg.channel, *checkpoint);
  cmd_preprocess(cfg);
  const auto epochs = load_dataset(cfg.output_dir);
  std::vector<std::size_t> fold_ids;
  auto splits = build_splits(cfg, epochs, &fold_ids);

  std::vector<eval::EpochPrediction> pooled;
  std::vector<report::FoldReport> folds;
  auto run = [&](const fs::path& ckpt, const eval::Split& split, const std::string& name) {
    const auto manifest = config::load_manifest(ckpt);
    check_manifest(manifest, cfg.channel, ckpt);
    auto net = load_model(ckpt, manifest);
    auto r = eval::evaluate(net, epochs, split.validation);
    folds.push_back({name, r.confusion, 0});
    for (auto& p : r.predictions) pooled.push_back(std::move(p));
  };

  if (checkpoint) {
    // splits[0] is the configured fold, or fold 0 when none is configured.
    run(*checkpoint, splits.front(), checkpoint->filename().string());
  } else {
    for (std::size_t s = 0; s < splits.size(); ++s) {
      const fs::path dir = fold_dir(cfg.output_dir, cfg, fold_ids[s]);
      const fs::path ckpt = dir / "best.ckpt";
      if (!fs::exists(ckpt)) {
        throw Error(Errc::ConfigError, "no checkpoint at " + ckpt.string() +
                                           "; run 'train' first or pass --checkpoint");
      }
      run(ckpt, splits[s], dir.filename().string());
    }
  }
  auto result = eval::summarize(std::move(pooled));
  write_reports(cfg.output_dir / "eval", result, protocol_name(cfg), folds);
  return result;
}

std::vector<PredictionRow> cmd_predict(const fs::path& checkpoint, const fs::path& edf_file,
                                       const std::string& channel, const fs::path& out_dir,
                                       const std::optional<fs::path>& hypnogram) {
  const auto manifest = config::load_manifest(checkpoint);
  check_manifest(manifest, channel, checkpoint);
  auto net = load_model(checkpoint, manifest);

  std::optional<fs::path> hyp = hypnogram;
  if (!hyp) {
    const std::string stem = strip_suffix(edf_file.stem().string(), kPsgSuffix);
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(edf_file.parent_path().empty()
                                                        ? fs::path(".")
                                                        : edf_file.parent_path(),
                                                    ec)) {
      const std::string other = entry.path().stem().string();
      if (lower(entry.path().extension().string()) == ".edf" && is_hypnogram_name(other) &&
          stems_pair(stem, strip_suffix(other, kHypnogramSuffix))) {
        hyp = entry.path();
        break;
      }
    }
  }

  const std::string subject = strip_suffix(edf_file.stem().string(), kPsgSuffix);
  const auto rec = load_normalized(edf_file, channel, subject, nullptr);
  require_epoch_length(rec);
  const double duration = static_cast<double>(rec.samples.size()) / rec.sample_rate;
  const std::vector<edf::StageInterval> whole{{0.0, duration, "W"}};
  const auto windows = edf::epoch_recording(rec, whole);

  std::map<int, Stage> reference;
  if (hyp) {
    for (const auto& e : edf::epoch_recording(rec, edf::read_hypnogram(*hyp))) {
      reference[e.epoch_index] = e.label;
    }
  }

  std::vector<std::size_t> all(windows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto probs = eval::predict_probabilities(net, windows, all);

  std::vector<PredictionRow> rows;
  std::vector<Stage> predicted, ref_track;
  std::ostringstream csv;
  csv << "epoch_index,onset_s,predicted,reference";
  for (Stage s : kAllStages) csv << ",p_" << stage_name(s);
  csv << '\n';
  for (std::size_t i = 0; i < windows.size(); ++i) {
    PredictionRow row;
    row.epoch_index = windows[i].epoch_index;
    row.onset_seconds = edf::kEpochSeconds * row.epoch_index;
    row.probabilities = probs[i];
    row.predicted = eval::argmax_stage(probs[i]);
    if (const auto it = reference.find(row.epoch_index); it != reference.end()) {
      row.reference = it->second;
    }
    predicted.push_back(row.predicted);
    // Unscored windows repeat the previous manual stage so the track stays
    // continuous.
    if (hyp) {
      ref_track.push_back(row.reference ? *row.reference
                                        : (ref_track.empty() ? Stage::W : ref_track.back()));
    }
    char onset[32];
    std::snprintf(onset, sizeof onset, "%g", row.onset_seconds);
    csv << row.epoch_index << ',' << onset << ',' << stage_name(row.predicted) << ','
        << (row.reference ? std::string(stage_name(*row.reference)) : std::string());
    for (double p : row.probabilities) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", p);
      csv << ',' << buf;
    }
    csv << '\n';
    rows.push_back(row);
  }

  report::write_text(out_dir / (subject + "_stages.csv"), csv.str());
  std::optional<std::span<const Stage>> ref_span;
  if (hyp) ref_span = std::span<const Stage>(ref_track);
  report::write_text(out_dir / (subject + "_hypnogram.svg"),
                     report::hypnogram_svg(predicted, ref_span, subject));
  if (!hyp) spdlog::info("no hypnogram for {}; writing predictions only", subject);
  return rows;
}

std::vector<fs::path> cmd_plot(const fs::path& dir) {
  const fs::path csv_path = dir / "predictions.csv";
  std::istringstream in(read_file(csv_path));
  std::string line;
  std::getline(in, line);
  eval::ConfusionMatrix cm;
  std::map<std::string, std::vector<std::pair<int, std::pair<Stage, Stage>>>> by_subject;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < 4) throw Error(Errc::MalformedCache, csv_path.string() + ": short row");
    const auto truth = stage_from_name(f[2]);
    const auto pred = stage_from_name(f[3]);
    if (!truth || !pred) {
      throw Error(Errc::MalformedCache, csv_path.string() + ": unknown stage in '" + line + "'");
    }
    cm.add(*truth, *pred);
    by_subject[f[0]].push_back({parse_field<int>(f[1], csv_path), {*truth, *pred}});
  }
  std::vector<fs::path> written;
  const fs::path fig_dir = dir / "figures";
  written.push_back(fig_dir / "confusion.svg");
  report::write_text(written.back(), report::confusion_svg(cm, "Confusion matrix"));
  for (auto& [subject, rows] : by_subject) {
    std::sort(rows.begin(), rows.end());
    std::vector<Stage> truth, pred;
    for (const auto& [idx, tp] : rows) {
      truth.push_back(tp.first);
      pred.push_back(tp.second);
    }
    written.push_back(fig_dir / ("hypnogram_" + subject + ".svg"));
    report::write_text(written.back(),
                       report::hypnogram_svg(pred, std::span<const Stage>(truth), subject));
  }
  return written;
}

}  // namespace msdan::pipeline
