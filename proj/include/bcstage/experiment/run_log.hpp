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

#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace bcstage::experiment {

struct LogEvent {
  std::string event;
  std::string backbone;
  std::optional<double> lr;
  std::optional<int> epoch;
  std::optional<double> metric;
  std::string message;
};

/// Append-only JSON-lines log, one object per line with fields
/// {ts, event, backbone, lr, epoch, metric} and an optional message.
/// Timestamps live only here, never in results files. Thread-safe.
class RunLog {
 public:
  RunLog() = default;  // discards everything
  explicit RunLog(const std::filesystem::path& path);

  void write(const LogEvent& e);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

}  // namespace bcstage::experiment
