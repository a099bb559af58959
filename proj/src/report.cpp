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

#include "msdan/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "msdan/error.hpp"

namespace msdan::report {

namespace {

using nlohmann::json;

constexpr std::array<Stage, kNumStages> kDisplayColumnOrder = {
    Stage::N3, Stage::N2, Stage::N1, Stage::R, Stage::W};

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json confusion_json(const eval::ConfusionMatrix& cm) {
  json rows = json::array();
  for (const auto& row : cm.to_display()) rows.push_back(json(row));
  json j;
  j["row_order"] = json::array();
  for (Stage s : kDisplayRowOrder) j["row_order"].push_back(stage_name(s));
  j["column_order"] = json::array();
  for (Stage s : kDisplayColumnOrder) j["column_order"].push_back(stage_name(s));
  j["counts"] = std::move(rows);
  j["total"] = cm.total();
  return j;
}

json summary_json(const eval::ConfusionMatrix& cm) {
  if (cm.total() == 0) return nullptr;
  try {
    const auto s = eval::summary_metrics(cm);
    return {{"overall_accuracy", s.overall_accuracy},
            {"mean_accuracy", s.mean_accuracy},
            {"kappa", s.kappa},
            {"macro_f1", s.macro_f1},
            {"mean_recall", s.mean_recall},
            {"all_stages_defined", s.all_stages_defined}};
  } catch (const Error& e) {
    if (e.code() != Errc::UndefinedMetric) throw;
    return nullptr;
  }
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Vertical position of a stage in the hypnogram, 0 = top.
int hypnogram_level(Stage s) {
  switch (s) {
    case Stage::W: return 0;
    case Stage::R: return 1;
    case Stage::N1: return 2;
    case Stage::N2: return 3;
    case Stage::N3: return 4;
  }
  return 0;
}

std::string step_path(std::span<const Stage> stages, double x0, double dx, double y0, double dy) {
  std::ostringstream d;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const double y = y0 + dy * hypnogram_level(stages[i]);
    const double xa = x0 + dx * static_cast<double>(i);
    d << (i == 0 ? "M" : " L") << num(xa) << ',' << num(y) << " L" << num(xa + dx) << ','
      << num(y);
  }
  return d.str();
}

}  // namespace

std::string metrics_json(const eval::EvalResult& pooled, std::string_view protocol,
                         std::span<const FoldReport> folds) {
  json j;
  j["schema_version"] = kMetricsSchemaVersion;
  j["protocol"] = std::string(protocol);
  j["confusion"] = confusion_json(pooled.confusion);

  json stages = json::object();
  for (Stage s : kAllStages) {
    const auto& m = pooled.stages[stage_code(s)];
    stages[std::string(stage_name(s))] = {{"accuracy", optional_number(m.accuracy)},
                                          {"recall", optional_number(m.recall)},
                                          {"precision", optional_number(m.precision)},
                                          {"f1", optional_number(m.f1)}};
  }
  j["stages"] = std::move(stages);
  j["summary"] = summary_json(pooled.confusion);

  json curves = json::object();
  for (Stage s : kAllStages) {
    const auto& c = pooled.curves[stage_code(s)];
    curves[std::string(stage_name(s))] =
        c ? json{{"roc_auc", c->roc_auc}, {"pr_auc", c->pr_auc}} : json(nullptr);
  }
  j["curves"] = std::move(curves);

  json fold_list = json::array();
  for (const auto& f : folds) {
    fold_list.push_back({{"name", f.name},
                         {"best_pass", f.best_pass},
                         {"confusion", confusion_json(f.confusion)},
                         {"summary", summary_json(f.confusion)}});
  }
  j["folds"] = std::move(fold_list);
  return j.dump(2) + "\n";
}

std::string predictions_csv(std::span<const eval::EpochPrediction> predictions) {
  std::ostringstream out;
  out << "subject_id,epoch_index,truth,predicted";
  for (Stage s : kAllStages) out << ",p_" << stage_name(s);
  out << '\n';
  for (const auto& p : predictions) {
    out << p.subject_id << ',' << p.epoch_index << ',' << stage_name(p.truth) << ','
        << stage_name(p.predicted);
    for (double v : p.probabilities) out << ',' << full(v);
    out << '\n';
  }
  return out.str();
}

std::string curves_csv(const std::array<std::optional<eval::ClassCurves>, kNumStages>& curves) {
  std::ostringstream out;
  out << "stage,curve,x,y,threshold\n";
  for (Stage s : kAllStages) {
    const auto& c = curves[stage_code(s)];
    if (!c) continue;
    for (const auto& [name, pts] :
         {std::pair<const char*, const std::vector<eval::CurvePoint>*>{"roc", &c->roc},
          {"pr", &c->pr}}) {
      for (const auto& p : *pts) {
        out << stage_name(s) << ',' << name << ',' << full(p.x) << ',' << full(p.y) << ','
            << full(p.threshold) << '\n';
      }
    }
  }
  return out.str();
}

std::string confusion_svg(const eval::ConfusionMatrix& cm, std::string_view title) {
  constexpr int cell = 80, left = 90, top = 70;
  const auto rows = cm.to_display();
  const int size = cell * kNumStages;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + size + 20
      << "\" height=\"" << top + size + 50 << "\" font-family=\"sans-serif\">\n"
      << "<text x=\"" << left + size / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << escape_xml(title) << "</text>\n"
      << "<text x=\"" << left + size / 2 << "\" y=\"" << top - 28
      << "\" text-anchor=\"middle\" font-size=\"12\">Predicted</text>\n"
      << "<text x=\"16\" y=\"" << top + size / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 "
      << top + size / 2 << ")\" text-anchor=\"middle\">Manual</text>\n";
  for (int c = 0; c < kNumStages; ++c) {
    svg << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\"" << top - 8
        << "\" text-anchor=\"middle\" font-size=\"12\">" << stage_name(kDisplayColumnOrder[c])
        << "</text>\n";
  }
  for (int r = 0; r < kNumStages; ++r) {
    std::uint64_t row_total = 0;
    for (auto v : rows[r]) row_total += v;
    svg << "<text x=\"" << left - 10 << "\" y=\"" << top + r * cell + cell / 2 + 4
        << "\" text-anchor=\"end\" font-size=\"12\">" << stage_name(kDisplayRowOrder[r])
        << "</text>\n";
    for (int c = 0; c < kNumStages; ++c) {
      const double share =
          row_total ? static_cast<double>(rows[r][c]) / static_cast<double>(row_total) : 0.0;
      const int shade = static_cast<int>(255.0 - 200.0 * share);
      svg << "<rect x=\"" << left + c * cell << "\" y=\"" << top + r * cell << "\" width=\""
          << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ',' << shade
          << ",255)\" stroke=\"#888\"/>\n"
          << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\"" << top + r * cell + cell / 2 + 4
          << "\" text-anchor=\"middle\" font-size=\"12\" fill=\"" << (share > 0.6 ? "#fff" : "#000")
          << "\">" << rows[r][c] << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string hypnogram_svg(std::span<const Stage> predicted,
                          std::optional<std::span<const Stage>> reference,
                          std::string_view title) {
  constexpr double left = 50, top = 40, height = 200, width = 900;
  const std::size_t n = std::max<std::size_t>(
      1, std::max(predicted.size(), reference ? reference->size() : std::size_t{0}));
  const double dx = width / static_cast<double>(n);
  const double dy = height / (kNumStages - 1);
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + width + 20
      << "\" height=\"" << top + height + 60 << "\" font-family=\"sans-serif\">\n"
      << "<text x=\"" << left + width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">"
      << escape_xml(title) << "</text>\n";
  for (Stage s : kDisplayRowOrder) {
    const double y = top + dy * hypnogram_level(s);
    svg << "<text x=\"" << left - 8 << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"end\" font-size=\"12\">" << stage_name(s) << "</text>\n"
        << "<line x1=\"" << left << "\" y1=\"" << num(y) << "\" x2=\"" << left + width
        << "\" y2=\"" << num(y) << "\" stroke=\"#ddd\"/>\n";
  }
  if (reference && !reference->empty()) {
    svg << "<path d=\"" << step_path(*reference, left, dx, top, dy)
        << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
  }
  if (!predicted.empty()) {
    svg << "<path d=\"" << step_path(predicted, left, dx, top, dy)
        << "\" fill=\"none\" stroke=\"#ff7f0e\" stroke-width=\"1\"/>\n";
  }
  svg << "<text x=\"" << left + width / 2 << "\" y=\"" << top + height + 40
      << "\" text-anchor=\"middle\" font-size=\"12\">Epoch (30 s)</text>\n"
      << "</svg>\n";
  return svg.str();
}

std::string class_count_table(const std::array<std::size_t, kNumStages>& counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  std::ostringstream out;
  out << "stage     count   share\n";
  for (Stage s : {Stage::W, Stage::N1, Stage::N2, Stage::N3, Stage::R}) {
    const auto c = counts[stage_code(s)];
    char line[64];
    std::snprintf(line, sizeof line, "%-5s %9zu  %5.1f%%\n", std::string(stage_name(s)).c_str(),
                  c, total ? 100.0 * static_cast<double>(c) / static_cast<double>(total) : 0.0);
    out << line;
  }
  char line[64];
  std::snprintf(line, sizeof line, "%-5s %9zu\n", "Total", total);
  out << line;
  return out.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

}  // namespace msdan::report
