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

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "msdan/config.hpp"
#include "msdan/error.hpp"
#include "msdan/fetch.hpp"
#include "msdan/pipeline.hpp"
#include "msdan/report.hpp"

namespace fs = std::filesystem;
using namespace msdan;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> channel;
  std::optional<std::string> split;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Run configuration file (key = value)");
  cmd->add_option("--seed", f.seed, "Seed for splits, initialization and shuffling");
  cmd->add_option("--channel", f.channel, "EEG channel label");
  cmd->add_option("--split", f.split, "kfold[:k[:fold]] or holdout[:ratio]");
  cmd->add_option("--out", f.out, "Output directory");
}

config::RunConfig resolve(const CommonFlags& f) {
  config::RunConfig cfg =
      f.config_path.empty() ? config::RunConfig{} : config::load_run_config(f.config_path);
  config::apply_environment(cfg);
  if (f.seed) cfg.seed = *f.seed;
  if (f.channel) cfg.channel = *f.channel;
  if (f.split) cfg.split = config::parse_split(*f.split);
  if (f.out) cfg.output_dir = *f.out;
  config::validate(cfg);
  return cfg;
}

void print_summary(const eval::EvalResult& r) {
  if (!r.summary) {
    std::printf("metrics undefined for %llu epochs\n",
                static_cast<unsigned long long>(r.confusion.total()));
    return;
  }
  const auto& s = *r.summary;
  std::printf("epochs %llu  accuracy %.2f%%  kappa %.4f  MF1 %.4f  mean acc %.2f%%  mean recall %.2f%%\n",
              static_cast<unsigned long long>(r.confusion.total()), s.overall_accuracy, s.kappa,
              s.macro_f1, s.mean_accuracy, s.mean_recall);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MSDAN single-channel EEG sleep staging"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  CommonFlags fetch_flags;
  std::string manifest_path;
  std::string checksums_path;
  std::string base_url;
  std::optional<std::string> root_override;
  std::size_t fetch_workers = 4;
  auto* fetch_cmd = app.add_subcommand("fetch", "Download and verify the corpus");
  fetch_cmd->add_option("--config", fetch_flags.config_path, "Run configuration file");
  fetch_cmd->add_option("--manifest", manifest_path, "Pinned manifest (base_url + sha256 size path)");
  fetch_cmd->add_option("--checksums", checksums_path,
                        "Build the manifest from a SHA256SUMS listing instead");
  fetch_cmd->add_option("--base-url", base_url, "Base URL for --checksums");
  fetch_cmd->add_option("--root", root_override, "Dataset root (default: config / environment)");
  fetch_cmd->add_option("--workers", fetch_workers, "Parallel downloads")->check(CLI::PositiveNumber);

  CommonFlags pre_flags, train_flags, eval_flags;
  auto* pre_cmd = app.add_subcommand("preprocess", "Build the normalized epoch cache");
  add_common(pre_cmd, pre_flags);
  auto* train_cmd = app.add_subcommand("train", "Train per fold and report validation metrics");
  add_common(train_cmd, train_flags);
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints on the configured split");
  add_common(eval_cmd, eval_flags);
  std::optional<std::string> eval_checkpoint;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint to evaluate");

  std::string predict_checkpoint, predict_edf;
  std::string predict_channel{edf::kDefaultChannel};
  std::string predict_out = ".";
  std::optional<std::string> predict_hyp;
  auto* predict_cmd = app.add_subcommand("predict", "Stage one EDF recording");
  predict_cmd->add_option("--checkpoint", predict_checkpoint, "Trained checkpoint")->required();
  predict_cmd->add_option("edf", predict_edf, "PSG EDF file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--channel", predict_channel, "EEG channel label");
  predict_cmd->add_option("--out", predict_out, "Output directory");
  predict_cmd->add_option("--hypnogram", predict_hyp, "Manual scoring to overlay");

  std::string plot_dir = "out";
  auto* plot_cmd = app.add_subcommand("plot", "Redraw figures from predictions.csv");
  plot_cmd->add_option("--out", plot_dir, "Directory holding predictions.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? pipeline::kExitOk : pipeline::kExitConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*fetch_cmd) {
      config::RunConfig cfg = fetch_flags.config_path.empty()
                                  ? config::RunConfig{}
                                  : config::load_run_config(fetch_flags.config_path);
      config::apply_environment(cfg);
      const fs::path root = root_override ? fs::path(*root_override) : cfg.dataset_root;
      fetch::DatasetManifest manifest;
      if (!manifest_path.empty()) {
        manifest = fetch::load_manifest(manifest_path);
      } else if (!checksums_path.empty() && !base_url.empty()) {
        std::ifstream in(checksums_path, std::ios::binary);
        if (!in) throw Error(Errc::ConfigError, "cannot read " + checksums_path);
        std::string listing((std::istreambuf_iterator<char>(in)), {});
        const std::vector<std::string> suffixes{".edf"};
        manifest = fetch::manifest_from_checksums(base_url, listing, suffixes);
      } else {
        throw Error(Errc::ConfigError, "fetch needs --manifest, or --checksums with --base-url");
      }
      fetch::FetchOptions opts;
      opts.workers = fetch_workers;
      const auto rep = fetch::fetch_dataset(manifest, root, opts);
      std::printf("%zu files already valid, %zu downloaded (%zu bytes)\n", rep.already_valid,
                  rep.downloaded, rep.bytes_transferred);
    } else if (*pre_cmd) {
      const auto cfg = resolve(pre_flags);
      const auto s = pipeline::cmd_preprocess(cfg);
      std::printf("%zu recordings, %zu epochs%s\n", s.recordings, s.epochs,
                  s.reused_cache ? " (cache reused)" : "");
      std::fputs(report::class_count_table(s.counts).c_str(), stdout);
      for (const auto& f : s.failures) std::fprintf(stderr, "skipped %s\n", f.c_str());
    } else if (*train_cmd) {
      const auto cfg = resolve(train_flags);
      const auto s = pipeline::cmd_train(cfg);
      print_summary(s.pooled);
      std::printf("metrics written to %s\n", s.metrics_path.string().c_str());
    } else if (*eval_cmd) {
      const auto cfg = resolve(eval_flags);
      std::optional<fs::path> ckpt;
      if (eval_checkpoint) ckpt = *eval_checkpoint;
      print_summary(pipeline::cmd_eval(cfg, ckpt));
    } else if (*predict_cmd) {
      std::optional<fs::path> hyp;
      if (predict_hyp) hyp = *predict_hyp;
      const auto rows =
          pipeline::cmd_predict(predict_checkpoint, predict_edf, predict_channel, predict_out, hyp);
      std::size_t scored = 0, agree = 0;
      for (const auto& r : rows) {
        if (!r.reference) continue;
        ++scored;
        agree += *r.reference == r.predicted;
      }
      std::printf("%zu epochs staged", rows.size());
      if (scored) std::printf(", %.2f%% agreement with manual scoring", 100.0 * agree / scored);
      std::printf("\n");
    } else if (*plot_cmd) {
      for (const auto& p : pipeline::cmd_plot(plot_dir)) std::printf("%s\n", p.string().c_str());
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return pipeline::exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return pipeline::kExitRuntime;
  }
  return pipeline::kExitOk;
}
