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

#include "bcstage/experiment/run_log.hpp"

#include <chrono>
#include <ctime>

#include "bcstage/core/error.hpp"
#include "json.hpp"

namespace bcstage::experiment {
namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  const auto n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + n, sizeof buf - n, ".%03dZ", static_cast<int>(ms));
  return buf;
}

}  // namespace

RunLog::RunLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw IoError("cannot open log file " + path.string());
}

void RunLog::write(const LogEvent& e) {
  nlohmann::ordered_json j;
  j["ts"] = utc_timestamp();
  j["event"] = e.event;
  j["backbone"] = e.backbone.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(e.backbone);
  j["lr"] = e.lr ? nlohmann::ordered_json(*e.lr) : nlohmann::ordered_json(nullptr);
  j["epoch"] = e.epoch ? nlohmann::ordered_json(*e.epoch) : nlohmann::ordered_json(nullptr);
  j["metric"] = e.metric ? nlohmann::ordered_json(*e.metric) : nlohmann::ordered_json(nullptr);
  if (!e.message.empty()) j["message"] = e.message;
  const std::lock_guard lock(mutex_);
  if (!out_.is_open()) return;
  out_ << j.dump() << '\n';
  out_.flush();
}

}  // namespace bcstage::experiment
