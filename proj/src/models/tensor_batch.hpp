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

#include <cstring>
#include <span>
#include <string>

#include <torch/torch.h>

#include "bcstage/core/error.hpp"
#include "bcstage/data/preprocess.hpp"

namespace bcstage::models {

/// Packs CHW samples into an N x 3 x size x size float tensor. Throws
/// InputError on any shape mismatch.
inline torch::Tensor stack_samples(std::span<const data::Sample> samples, int size) {
  auto batch = torch::empty({static_cast<int64_t>(samples.size()), 3, size, size});
  const std::size_t plane = 3u * static_cast<std::size_t>(size) * static_cast<std::size_t>(size);
  auto* dst = batch.data_ptr<float>();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.channels != 3 || s.height != size || s.width != size || s.values.size() != plane) {
      throw InputError("sample " + std::to_string(i) + " has shape " + std::to_string(s.channels) + "x" +
                       std::to_string(s.height) + "x" + std::to_string(s.width) + ", model expects 3x" +
                       std::to_string(size) + "x" + std::to_string(size));
    }
    std::memcpy(dst + i * plane, s.values.data(), plane * sizeof(float));
  }
  return batch;
}

}  // namespace bcstage::models
