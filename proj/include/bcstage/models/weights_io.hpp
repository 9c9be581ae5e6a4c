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
#include <string>
#include <string_view>
#include <vector>

#include <torch/torch.h>

namespace bcstage::models {

/// Binary tensor container:
///   "BCSW" | u32 version | u64 count |
///   count x (u32 name_len | name | u8 dtype | u32 ndim | i64 dims[ndim] | u64 nbytes | data)
/// Little-endian throughout. dtype codes: 0 float32, 1 float64, 2 int64.
inline constexpr std::uint32_t kWeightsFormatVersion = 1;

struct NamedTensor {
  std::string name;
  torch::Tensor tensor;
};

/// Parameters followed by buffers, in registration order.
[[nodiscard]] std::vector<NamedTensor> collect_state(const torch::nn::Module& module);

[[nodiscard]] std::string encode_weights(const std::vector<NamedTensor>& tensors);
/// Throws FormatError on malformed input.
[[nodiscard]] std::vector<NamedTensor> decode_weights(std::string_view bytes);

void write_file(const std::filesystem::path& path, std::string_view bytes);
/// Throws IoError when the file cannot be read.
[[nodiscard]] std::string read_file(const std::filesystem::path& path);

[[nodiscard]] std::string sha256_hex(std::string_view bytes);

struct LoadOptions {
  /// Entries whose name starts with this prefix are ignored.
  std::string skip_prefix;
  /// Every remaining model tensor must be present in the source.
  bool require_all = true;
};

/// Copies tensors into the module by name. Shape or dtype mismatches and
/// unknown names throw FormatError.
void load_state(torch::nn::Module& module, const std::vector<NamedTensor>& tensors, const LoadOptions& options = {});

}  // namespace bcstage::models
