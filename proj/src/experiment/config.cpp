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

#include "bcstage/experiment/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bcstage/core/error.hpp"

namespace bcstage::experiment {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(std::string_view key, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw ConfigError("config key '" + std::string(key) + "': '" + text + "' is not a number");
  }
  return v;
}

template <typename Int>
Int parse_int(std::string_view key, const std::string& text) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + std::string(key) + "': '" + text + "' is not an integer");
  }
  return v;
}

bool parse_bool(std::string_view key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': '" + text + "' is not a boolean");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& text) {
  std::filesystem::path p(text);
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

void SweepConfig::validate() {
  if (backbones.empty()) backbones = models::default_sweep_backbones();
  for (const auto& b : backbones) {
    try {
      (void)models::backbone_info(b);
    } catch (const RegistryError& e) {
      throw ConfigError(e.what());
    }
  }
  if (learning_rates.empty()) throw ConfigError("learning_rates must not be empty");
  for (const double lr : learning_rates) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rates must be positive and finite");
  }
  hyper.validate();
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must be in (0, 1)");
  if (!(ensemble_threshold > 0.0) || !std::isfinite(ensemble_threshold)) {
    throw ConfigError("ensemble_threshold must be positive and finite");
  }
  if (input_size < 16) throw ConfigError("input_size must be at least 16");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (loader_threads < 1) throw ConfigError("loader_threads must be at least 1");
  if (output_dir.empty()) throw ConfigError("output_dir must be set");
}

data::SplitOptions SweepConfig::split_options() const {
  return {split_ratio, split_seed, group_by_patient};
}

data::PreprocessConfig SweepConfig::preprocess() const {
  data::PreprocessConfig p;
  p.target_size = input_size;
  return p;
}

ConfigValues parse_config(std::string_view text, std::string_view source) {
  ConfigValues values;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": expected key = value");
    }
    auto key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": empty key");
    if (values.contains(key)) {
      throw ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    values.emplace(std::move(key), trim(std::string_view(body).substr(eq + 1)));
  }
  return values;
}

ConfigValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void apply_config(SweepConfig& c, const ConfigValues& values, const std::filesystem::path& base_dir) {
  for (const auto& [key, value] : values) {
    if (key == "manifest") {
      c.manifest_path = resolve(base_dir, value);
    } else if (key == "backbones") {
      c.backbones = split_list(value);
    } else if (key == "learning_rates") {
      c.learning_rates.clear();
      for (const auto& item : split_list(value)) c.learning_rates.push_back(parse_double(key, item));
    } else if (key == "batch_size") {
      c.hyper.batch_size = parse_int<int>(key, value);
    } else if (key == "epochs") {
      c.hyper.epochs = parse_int<int>(key, value);
    } else if (key == "weight_decay") {
      c.hyper.weight_decay = parse_double(key, value);
    } else if (key == "seed") {
      c.hyper.seed = parse_int<std::uint64_t>(key, value);
    } else if (key == "split_ratio") {
      c.split_ratio = parse_double(key, value);
    } else if (key == "split_seed") {
      c.split_seed = parse_int<std::uint64_t>(key, value);
    } else if (key == "group_by_patient") {
      c.group_by_patient = parse_bool(key, value);
    } else if (key == "output_dir") {
      c.output_dir = resolve(base_dir, value);
    } else if (key == "ensemble_threshold") {
      c.ensemble_threshold = parse_double(key, value);
    } else if (key == "input_size") {
      c.input_size = parse_int<int>(key, value);
    } else if (key == "pretrained") {
      c.pretrained = parse_bool(key, value);
    } else if (key == "pretrained_dir") {
      c.pretrained_dir = resolve(base_dir, value);
    } else if (key == "workers") {
      c.workers = parse_int<int>(key, value);
    } else if (key == "loader_threads") {
      c.loader_threads = parse_int<int>(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

std::string format_lr(double lr) {
  char buf[32];
  for (int precision = 0; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*e", precision, lr);
    if (std::strtod(buf, nullptr) == lr) break;
  }
  // "1.0e-04" style cleanup: drop the exponent's plus sign and leading zeros.
  std::string s(buf);
  const auto e = s.find('e');
  std::string mantissa = s.substr(0, e);
  std::string exponent = s.substr(e + 1);
  const bool negative = exponent.front() == '-';
  exponent.erase(0, 1);
  exponent.erase(0, std::min(exponent.find_first_not_of('0'), exponent.size() - 1));
  return mantissa + "e" + (negative ? "-" : "") + exponent;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace bcstage::experiment
