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

#include "bcstage/data/manifest.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "bcstage/core/error.hpp"

namespace bcstage::data {
namespace {

constexpr std::array<std::string_view, 5> kColumns{"biopsy_id", "patient_id", "slide_path", "stage",
                                                   "split"};

std::string row_context(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

// RFC 4180 field splitting for a single physical line.
std::vector<std::string> split_csv_line(std::string_view line, std::string_view source, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) {
    throw ManifestFormatError(row_context(source, lineno) + "unterminated quoted field");
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string quote_if_needed(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::optional<Stage> parse_stage_cell(std::string_view cell, std::string_view source, std::size_t lineno) {
  if (cell.empty()) return std::nullopt;
  int value = 0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ManifestFormatError(row_context(source, lineno) + "stage '" + std::string(cell) +
                              "' is not an integer");
  }
  if (value < Stage::kMin || value > Stage::kMax) {
    throw ManifestFormatError(row_context(source, lineno) + "stage '" + std::string(cell) +
                              "' outside {0..4}");
  }
  return Stage(value);
}

}  // namespace

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kEval:
      return "eval";
    case Split::kTest:
      return "test";
    case Split::kUnassigned:
      return "";
  }
  return "";
}

std::optional<Split> parse_split(std::string_view text) noexcept {
  if (text == "train") return Split::kTrain;
  if (text == "eval") return Split::kEval;
  if (text == "test") return Split::kTest;
  if (text.empty()) return Split::kUnassigned;
  return std::nullopt;
}

std::filesystem::path DatasetManifest::resolve(const SlideRecord& slide) const {
  if (slide.image_path.is_absolute() || base_dir.empty()) return slide.image_path;
  return base_dir / slide.image_path;
}

std::size_t DatasetManifest::slide_count() const noexcept {
  std::size_t n = 0;
  for (const auto& b : biopsies) n += b.slides.size();
  return n;
}

const BiopsyRecord* DatasetManifest::find(std::string_view biopsy_id) const noexcept {
  for (const auto& b : biopsies) {
    if (b.biopsy_id == biopsy_id) return &b;
  }
  return nullptr;
}

void DatasetManifest::validate() const {
  std::set<std::string_view> biopsy_ids;
  std::set<std::string_view> slide_ids;
  for (const auto& b : biopsies) {
    if (b.biopsy_id.empty()) throw ManifestFormatError("biopsy with empty id");
    if (!biopsy_ids.insert(b.biopsy_id).second) {
      throw ManifestFormatError("duplicate biopsy_id '" + b.biopsy_id + "'");
    }
    if (b.slides.empty()) {
      throw ManifestFormatError("biopsy '" + b.biopsy_id + "' has zero slides");
    }
    if (b.stage_imputed && !b.stage) {
      throw ManifestFormatError("biopsy '" + b.biopsy_id + "' marked imputed without a stage");
    }
    for (const auto& s : b.slides) {
      if (s.biopsy_id != b.biopsy_id) {
        throw ManifestFormatError("slide '" + s.slide_id + "' belongs to '" + s.biopsy_id +
                                  "' but is listed under '" + b.biopsy_id + "'");
      }
      if (!slide_ids.insert(s.slide_id).second) {
        throw ManifestFormatError("duplicate slide_id '" + s.slide_id + "'");
      }
    }
  }
}

DatasetManifest parse_manifest(std::istream& in, std::filesystem::path base_dir, std::string_view source) {
  DatasetManifest manifest;
  manifest.base_dir = std::move(base_dir);

  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) {
    throw ManifestFormatError(std::string(source) + ": empty manifest (missing header)");
  }
  ++lineno;
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv_line(line, source, lineno);
  std::array<std::size_t, kColumns.size()> column_index{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    std::size_t found = header.size();
    for (std::size_t h = 0; h < header.size(); ++h) {
      if (header[h] == kColumns[c]) found = h;
    }
    if (found == header.size()) {
      throw ManifestFormatError(row_context(source, lineno) + "missing column '" +
                                std::string(kColumns[c]) + "'");
    }
    column_index[c] = found;
  }

  std::unordered_map<std::string, std::size_t> biopsy_pos;
  std::set<std::string> slide_ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line, source, lineno);
    if (fields.size() != header.size()) {
      throw ManifestFormatError(row_context(source, lineno) + "expected " + std::to_string(header.size()) +
                                " fields, got " + std::to_string(fields.size()));
    }
    const auto& biopsy_id = fields[column_index[0]];
    const auto& patient_id = fields[column_index[1]];
    const auto& slide_path = fields[column_index[2]];
    const auto stage = parse_stage_cell(fields[column_index[3]], source, lineno);
    const auto split = parse_split(fields[column_index[4]]);

    if (biopsy_id.empty()) {
      throw ManifestFormatError(row_context(source, lineno) + "empty biopsy_id");
    }
    if (slide_path.empty()) {
      throw ManifestFormatError(row_context(source, lineno) + "biopsy '" + biopsy_id +
                                "' row has no slide_path (biopsy with zero slides)");
    }
    if (!split) {
      throw ManifestFormatError(row_context(source, lineno) + "unknown split '" + fields[column_index[4]] +
                                "'");
    }
    if (!slide_ids.insert(slide_path).second) {
      throw ManifestFormatError(row_context(source, lineno) + "duplicate slide_id '" + slide_path + "'");
    }

    auto [it, inserted] = biopsy_pos.try_emplace(biopsy_id, manifest.biopsies.size());
    if (inserted) {
      BiopsyRecord record;
      record.biopsy_id = biopsy_id;
      record.patient_id = patient_id;
      record.stage = stage;
      record.split = *split;
      manifest.biopsies.push_back(std::move(record));
    }
    auto& record = manifest.biopsies[it->second];
    if (record.patient_id != patient_id || record.stage != stage || record.split != *split) {
      throw ManifestFormatError(row_context(source, lineno) + "biopsy '" + biopsy_id +
                                "' has conflicting patient_id/stage/split across rows");
    }
    record.slides.push_back(SlideRecord{slide_path, biopsy_id, std::filesystem::path(slide_path)});
  }
  manifest.validate();
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open manifest " + path.string());
  }
  return parse_manifest(in, path.parent_path(), path.string());
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::ostringstream out;
  out << "biopsy_id,patient_id,slide_path,stage,split\n";
  for (const auto& b : manifest.biopsies) {
    const std::string stage = b.stage ? std::to_string(b.stage->value()) : std::string();
    for (const auto& s : b.slides) {
      out << quote_if_needed(b.biopsy_id) << ',' << quote_if_needed(b.patient_id) << ','
          << quote_if_needed(s.image_path.generic_string()) << ',' << stage << ',' << to_string(b.split)
          << '\n';
    }
  }
  return out.str();
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write manifest " + path.string());
  }
  out << format_manifest(manifest);
  if (!out) {
    throw IoError("short write on manifest " + path.string());
  }
}

ImputationResult impute_unlabeled(DatasetManifest manifest, Stage fill) {
  std::size_t imputed = 0;
  for (auto& b : manifest.biopsies) {
    if (!b.stage) {
      b.stage = fill;
      b.stage_imputed = true;
      ++imputed;
    }
  }
  return ImputationResult{std::move(manifest), imputed};
}

}  // namespace bcstage::data
