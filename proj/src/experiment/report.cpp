// Copyright (c) 2026, The bcstage Authors. All rights reserved.
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

#include "bcstage/experiment/report.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bcstage/core/error.hpp"
#include "bcstage/experiment/config.hpp"
#include "bcstage/models/registry.hpp"

namespace bcstage::experiment {
namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kSplitOrder{"train", "eval", "test", "unassigned"};

std::string display_name(const std::string& id) {
  try {
    return std::string(models::backbone_info(id).display_name);
  } catch (const RegistryError&) {
    return id;
  }
}

// Shortest round-trip form; always '.' as decimal separator.
std::string exact(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

std::string results_csv(const ResultsTable& table) {
  const auto backbones = table.backbones();
  std::ostringstream out;
  out << "learning_rate";
  for (const auto& b : backbones) out << ',' << b;
  out << '\n';
  for (const double lr : table.learning_rates()) {
    out << format_lr(lr);
    for (const auto& b : backbones) {
      out << ',';
      if (const auto* c = table.find(b, lr)) {
        if (c->status == CellStatus::kFailed) {
          out << "failed";
        } else if (c->eval_mse) {
          out << exact(*c->eval_mse);
        }
      }
    }
    out << '\n';
  }
  out << "best_lr";
  const auto best = table.best_per_model();
  for (const auto& b : backbones) {
    out << ',';
    for (const auto& cell : best) {
      if (cell.backbone == b) out << format_lr(cell.learning_rate);
    }
  }
  out << '\n';
  return out.str();
}

std::string stats_csv(const DatasetStats& s) {
  std::ostringstream out;
  out << "panel,key,value\n";
  for (std::size_t k = 0; k < s.biopsies_per_stage.size(); ++k) {
    out << "biopsies_per_stage," << k << ',' << s.biopsies_per_stage[k] << '\n';
  }
  out << "biopsies_per_stage,unlabeled," << s.unlabeled << '\n';
  const std::pair<const char*, std::size_t SplitCounts::*> panels[] = {{"biopsies_per_split", &SplitCounts::biopsies},
                                                                        {"labeled_per_split", &SplitCounts::labeled},
                                                                        {"unlabeled_per_split", &SplitCounts::unlabeled},
                                                                        {"patients_per_split", &SplitCounts::patients},
                                                                        {"slides_per_split", &SplitCounts::slides}};
  for (const auto& [panel, field] : panels) {
    for (const auto& split : kSplitOrder) out << panel << ',' << split << ',' << s.per_split.at(split).*field << '\n';
  }
  out << "totals,biopsies," << s.biopsies << '\n';
  out << "totals,slides," << s.slides << '\n';
  out << "totals,patients," << s.patients << '\n';
  out << "totals,patients_in_several_splits," << s.patients_in_several_splits << '\n';
  return out.str();
}

struct Series {
  std::string name;
  std::vector<double> values;
  cv::Scalar color;
};

// Grouped bar chart drawn with Hershey fonts, which render identically on
// every platform.
cv::Mat bar_chart(const std::string& title, const std::vector<std::string>& labels, const std::vector<Series>& series) {
  constexpr int kW = 720, kH = 420, kLeft = 60, kRight = 20, kTop = 50, kBottom = 60;
  cv::Mat img(kH, kW, CV_8UC3, cv::Scalar(255, 255, 255));
  const auto font = cv::FONT_HERSHEY_SIMPLEX;
  cv::putText(img, title, {kLeft, 30}, font, 0.6, {0, 0, 0}, 1, cv::LINE_8);

  double top = 1.0;
  for (const auto& s : series) {
    for (const double v : s.values) top = std::max(top, v);
  }
  const int plot_w = kW - kLeft - kRight;
  const int plot_h = kH - kTop - kBottom;
  cv::line(img, {kLeft, kTop + plot_h}, {kLeft + plot_w, kTop + plot_h}, {0, 0, 0}, 1, cv::LINE_8);
  cv::line(img, {kLeft, kTop}, {kLeft, kTop + plot_h}, {0, 0, 0}, 1, cv::LINE_8);
  cv::putText(img, exact(top), {4, kTop + 5}, font, 0.4, {0, 0, 0}, 1, cv::LINE_8);
  cv::putText(img, "0", {kLeft - 14, kTop + plot_h}, font, 0.4, {0, 0, 0}, 1, cv::LINE_8);

  const int groups = static_cast<int>(labels.size());
  const int per_group = std::max<int>(1, static_cast<int>(series.size()));
  const int group_w = groups > 0 ? plot_w / groups : plot_w;
  const int bar_w = std::max(4, (group_w * 7 / 10) / per_group);
  for (int g = 0; g < groups; ++g) {
    const int x0 = kLeft + g * group_w + (group_w - bar_w * per_group) / 2;
    for (int k = 0; k < static_cast<int>(series.size()); ++k) {
      const double v = series[k].values[g];
      const int h = static_cast<int>(v / top * plot_h + 0.5);
      const int x = x0 + k * bar_w;
      cv::rectangle(img, {x, kTop + plot_h - h}, {x + bar_w - 2, kTop + plot_h}, series[k].color, cv::FILLED,
                    cv::LINE_8);
      cv::putText(img, exact(v), {x, kTop + plot_h - h - 4}, font, 0.35, {0, 0, 0}, 1, cv::LINE_8);
    }
    cv::putText(img, labels[g], {kLeft + g * group_w + 4, kTop + plot_h + 20}, font, 0.45, {0, 0, 0}, 1,
                cv::LINE_8);
  }
  int legend_x = kLeft;
  for (const auto& s : series) {
    if (series.size() < 2) break;
    cv::rectangle(img, {legend_x, kH - 22}, {legend_x + 12, kH - 10}, s.color, cv::FILLED, cv::LINE_8);
    cv::putText(img, s.name, {legend_x + 16, kH - 11}, font, 0.45, {0, 0, 0}, 1, cv::LINE_8);
    legend_x += 20 + static_cast<int>(s.name.size()) * 10;
  }
  return img;
}

void write_png(const fs::path& path, const cv::Mat& img) {
  if (!cv::imwrite(path.string(), img, {cv::IMWRITE_PNG_COMPRESSION, 6})) throw IoError("cannot write " + path.string());
}

std::vector<fs::path> stats_charts(const DatasetStats& s, const fs::path& dir) {
  const cv::Scalar blue(180, 119, 31), orange(14, 127, 255), green(44, 160, 44), red(40, 39, 214);
  std::vector<fs::path> out;

  std::vector<double> per_stage(s.biopsies_per_stage.begin(), s.biopsies_per_stage.end());
  per_stage.push_back(static_cast<double>(s.unlabeled));
  out.push_back(dir / "stats_biopsies_per_stage.png");
  write_png(out.back(), bar_chart("Biopsies per cancer stage", {"0", "1", "2", "3", "4", "unlabeled"},
                                  {{"biopsies", per_stage, blue}}));

  std::vector<std::string> splits;
  for (const auto& name : kSplitOrder) {
    if (s.per_split.at(name).biopsies > 0) splits.push_back(name);
  }
  auto column = [&](std::size_t SplitCounts::*field) {
    std::vector<double> v;
    for (const auto& name : splits) v.push_back(static_cast<double>(s.per_split.at(name).*field));
    return v;
  };
  out.push_back(dir / "stats_labeled_per_split.png");
  write_png(out.back(), bar_chart("Labeled and unlabeled biopsies per split", splits,
                                  {{"labeled", column(&SplitCounts::labeled), green},
                                   {"unlabeled", column(&SplitCounts::unlabeled), red}}));
  out.push_back(dir / "stats_patients_per_split.png");
  write_png(out.back(),
            bar_chart("Patients per split", splits, {{"patients", column(&SplitCounts::patients), orange}}));
  out.push_back(dir / "stats_slides_per_split.png");
  write_png(out.back(), bar_chart("Slides per split", splits, {{"slides", column(&SplitCounts::slides), blue}}));
  return out;
}

std::string markdown(const SweepResults& results, const std::optional<DatasetStats>& stats,
                     const std::vector<fs::path>& charts) {
  const auto& table = results.table;
  const auto backbones = table.backbones();
  const auto best = table.best_per_model();
  auto is_best = [&](const CellResult& c) {
    for (const auto& b : best) {
      if (b.backbone == c.backbone && b.learning_rate == c.learning_rate) return true;
    }
    return false;
  };

  std::ostringstream md;
  md << "# Cancer stage prediction report\n\n";
  md << "## Eval MSE per backbone and learning rate\n\n";
  md << "Bold marks each model's best learning rate.\n\n";
  md << "| Learning rate |";
  for (const auto& b : backbones) md << ' ' << display_name(b) << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < backbones.size(); ++i) md << "---:|";
  md << '\n';
  for (const double lr : table.learning_rates()) {
    md << "| " << format_lr(lr) << " |";
    for (const auto& b : backbones) {
      const auto* c = table.find(b, lr);
      if (c == nullptr) {
        md << " |";
      } else if (c->status == CellStatus::kFailed) {
        md << " failed |";
      } else if (is_best(*c)) {
        md << " **" << fixed6(*c->eval_mse) << "** |";
      } else {
        md << ' ' << fixed6(*c->eval_mse) << " |";
      }
    }
    md << '\n';
  }

  std::vector<const CellResult*> failed;
  for (const auto& c : table.cells) {
    if (c.status == CellStatus::kFailed) failed.push_back(&c);
  }
  if (!failed.empty()) {
    md << "\n**" << failed.size() << " failed cell(s), excluded from best-per-model and ensembles:**\n\n";
    for (const auto* c : failed) md << "- " << c->backbone << " at lr " << format_lr(c->learning_rate) << ": " << c->error << '\n';
  }

  md << "\n## Ensembles\n\n";
  if (results.ensembles.empty()) {
    md << "No ensemble has been evaluated.\n";
  } else {
    md << "| Strategy | Threshold | Members | MSE | Mean member MSE |\n|---|---:|---|---:|---:|\n";
    for (const auto& e : results.ensembles) {
      std::string members;
      for (const auto& m : e.members) members += (members.empty() ? "" : ", ") + display_name(m);
      double mean = 0.0;
      for (const auto& [id, v] : e.member_mses) mean += v;
      if (!e.member_mses.empty()) mean /= static_cast<double>(e.member_mses.size());
      md << "| " << to_string(e.strategy) << " | " << fixed6(e.threshold) << " | " << members << " (" << e.members.size()
         << ") | " << (e.mse ? fixed6(*e.mse) : std::string("not evaluated")) << " | "
         << (e.member_mses.empty() ? std::string("-") : fixed6(mean)) << " |\n";
    }
  }

  if (stats) {
    const auto& s = *stats;
    md << "\n## Dataset statistics\n\n";
    md << "| Stage | 0 | 1 | 2 | 3 | 4 | Unlabeled | Total |\n|---|---:|---:|---:|---:|---:|---:|---:|\n| Biopsies |";
    for (const auto n : s.biopsies_per_stage) md << ' ' << n << " |";
    md << ' ' << s.unlabeled << " | " << s.biopsies << " |\n\n";
    md << "| Split | Biopsies | Labeled | Unlabeled | Patients | Slides |\n|---|---:|---:|---:|---:|---:|\n";
    for (const auto& name : kSplitOrder) {
      const auto& c = s.per_split.at(name);
      md << "| " << name << " | " << c.biopsies << " | " << c.labeled << " | " << c.unlabeled << " | " << c.patients
         << " | " << c.slides << " |\n";
    }
    md << "\n" << s.patients << " patients in total";
    if (s.patients_in_several_splits > 0) md << ", " << s.patients_in_several_splits << " of them in several splits";
    md << ".\n\n";
    for (const auto& chart : charts) md << "![" << chart.stem().string() << "](" << chart.filename().string() << ")\n";
  }
  return md.str();
}

}  // namespace

std::vector<fs::path> render_report(const SweepResults& results, const std::optional<DatasetStats>& stats,
                                    const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create report directory " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  std::vector<fs::path> charts;
  if (stats) {
    written.push_back(out_dir / "stats.csv");
    write_text(written.back(), stats_csv(*stats));
    charts = stats_charts(*stats, out_dir);
    written.insert(written.end(), charts.begin(), charts.end());
  }
  written.push_back(out_dir / "results.csv");
  write_text(written.back(), results_csv(results.table));
  written.push_back(out_dir / "report.md");
  write_text(written.back(), markdown(results, stats, charts));
  return written;
}

std::vector<fs::path> render_stats(const DatasetStats& stats, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written{out_dir / "stats.csv"};
  write_text(written.back(), stats_csv(stats));
  const auto charts = stats_charts(stats, out_dir);
  written.insert(written.end(), charts.begin(), charts.end());
  return written;
}

}  // namespace bcstage::experiment
