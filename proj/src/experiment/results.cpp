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

#include "bcstage/experiment/results.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bcstage/core/error.hpp"
#include "json.hpp"

namespace bcstage::experiment {
namespace {

using nlohmann::ordered_json;

CellStatus parse_status(const std::string& s) {
  if (s == "completed") return CellStatus::kCompleted;
  if (s == "failed") return CellStatus::kFailed;
  throw FormatError("unknown cell status '" + s + "'");
}

}  // namespace

std::string_view to_string(CellStatus s) noexcept { return s == CellStatus::kCompleted ? "completed" : "failed"; }

std::vector<BestCell> ResultsTable::best_per_model() const {
  std::vector<BestCell> out;
  for (const auto& backbone : backbones()) {
    std::optional<BestCell> best;
    for (const auto& c : cells) {
      if (c.backbone != backbone || c.status != CellStatus::kCompleted || !c.eval_mse) continue;
      if (!best || *c.eval_mse < best->eval_mse) best = BestCell{c.backbone, c.learning_rate, *c.eval_mse};
    }
    if (best) out.push_back(*best);
  }
  return out;
}

std::map<std::string, double> ResultsTable::best_mses() const {
  std::map<std::string, double> out;
  for (const auto& b : best_per_model()) out.emplace(b.backbone, b.eval_mse);
  return out;
}

std::vector<std::string> ResultsTable::backbones() const {
  std::vector<std::string> out;
  for (const auto& c : cells) {
    if (std::find(out.begin(), out.end(), c.backbone) == out.end()) out.push_back(c.backbone);
  }
  return out;
}

std::vector<double> ResultsTable::learning_rates() const {
  std::vector<double> out;
  for (const auto& c : cells) {
    if (std::find(out.begin(), out.end(), c.learning_rate) == out.end()) out.push_back(c.learning_rate);
  }
  return out;
}

const CellResult* ResultsTable::find(std::string_view backbone, double learning_rate) const noexcept {
  for (const auto& c : cells) {
    if (c.backbone == backbone && c.learning_rate == learning_rate) return &c;
  }
  return nullptr;
}

std::string results_to_json(const SweepResults& results) {
  ordered_json cells = ordered_json::array();
  for (const auto& c : results.table.cells) {
    ordered_json cell;
    cell["backbone"] = c.backbone;
    cell["lr"] = c.learning_rate;
    cell["eval_mse"] = c.eval_mse ? ordered_json(*c.eval_mse) : ordered_json(nullptr);
    cell["status"] = to_string(c.status);
    cell["checkpoint"] = c.checkpoint;
    if (c.status == CellStatus::kCompleted) cell["best_epoch"] = c.best_epoch;
    if (!c.error.empty()) cell["error"] = c.error;
    cells.push_back(std::move(cell));
  }
  ordered_json best = ordered_json::array();
  for (const auto& b : results.table.best_per_model()) {
    best.push_back({{"backbone", b.backbone}, {"lr", b.learning_rate}, {"eval_mse", b.eval_mse}});
  }
  ordered_json ensembles = ordered_json::array();
  for (const auto& e : results.ensembles) {
    ordered_json item;
    item["strategy"] = to_string(e.strategy);
    item["threshold"] = e.threshold;
    item["members"] = e.members;
    item["mse"] = e.mse ? ordered_json(*e.mse) : ordered_json(nullptr);
    ordered_json member_mses = ordered_json::object();
    for (const auto& [id, v] : e.member_mses) member_mses[id] = v;
    item["member_mses"] = std::move(member_mses);
    ensembles.push_back(std::move(item));
  }
  ordered_json root;
  root["cells"] = std::move(cells);
  root["best"] = std::move(best);
  root["ensembles"] = std::move(ensembles);
  return root.dump(2) + "\n";
}

SweepResults results_from_json(std::string_view text) {
  SweepResults out;
  try {
    const auto root = ordered_json::parse(text);
    for (const auto& c : root.at("cells")) {
      CellResult cell;
      cell.backbone = c.at("backbone").get<std::string>();
      cell.learning_rate = c.at("lr").get<double>();
      cell.status = parse_status(c.at("status").get<std::string>());
      if (!c.at("eval_mse").is_null()) cell.eval_mse = c.at("eval_mse").get<double>();
      if (cell.status == CellStatus::kCompleted && !cell.eval_mse) {
        throw FormatError("completed cell " + cell.backbone + " has no eval_mse");
      }
      cell.checkpoint = c.value("checkpoint", "");
      cell.best_epoch = c.value("best_epoch", 0);
      cell.error = c.value("error", "");
      out.table.cells.push_back(std::move(cell));
    }
    if (const auto it = root.find("best"); it != root.end()) {
      const auto expected = out.table.best_per_model();
      if (it->size() != expected.size()) throw FormatError("results 'best' section does not match its cells");
      for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& b = (*it)[i];
        if (b.at("backbone").get<std::string>() != expected[i].backbone ||
            b.at("lr").get<double>() != expected[i].learning_rate ||
            b.at("eval_mse").get<double>() != expected[i].eval_mse) {
          throw FormatError("results 'best' entry for " + expected[i].backbone + " is not the row minimum");
        }
      }
    }
    if (const auto it = root.find("ensembles"); it != root.end()) {
      for (const auto& e : *it) {
        EnsembleResult r;
        const auto strategy = parse_strategy(e.at("strategy").get<std::string>());
        if (!strategy) throw FormatError("unknown ensemble strategy");
        r.strategy = *strategy;
        r.threshold = e.at("threshold").get<double>();
        r.members = e.at("members").get<std::vector<std::string>>();
        if (!e.at("mse").is_null()) r.mse = e.at("mse").get<double>();
        if (const auto m = e.find("member_mses"); m != e.end()) {
          for (const auto& [id, v] : m->items()) r.member_mses.emplace(id, v.get<double>());
        }
        out.ensembles.push_back(std::move(r));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed results JSON: ") + e.what());
  }
  return out;
}

void write_results(const SweepResults& results, const std::filesystem::path& path) {
  // Write-then-rename so readers never see a half-written file.
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out << results_to_json(results);
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

SweepResults read_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read results file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return results_from_json(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace bcstage::experiment
