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

#include "bcstage/models/weights_io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "bcstage/core/error.hpp"

namespace bcstage::models {
namespace {

static_assert(std::endian::native == std::endian::little, "weights format assumes a little-endian host");

constexpr char kMagic[4] = {'B', 'C', 'S', 'W'};

std::uint8_t dtype_code(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32:
      return 0;
    case torch::kFloat64:
      return 1;
    case torch::kInt64:
      return 2;
    default:
      throw FormatError(std::string("unsupported tensor dtype ") + c10::toString(t));
  }
}

torch::ScalarType dtype_from_code(std::uint8_t c) {
  switch (c) {
    case 0:
      return torch::kFloat32;
    case 1:
      return torch::kFloat64;
    case 2:
      return torch::kInt64;
    default:
      throw FormatError("unknown dtype code " + std::to_string(c));
  }
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)).data(), sizeof(T));
    return v;
  }

  std::string_view take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw FormatError("truncated weights file");
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<NamedTensor> collect_state(const torch::nn::Module& module) {
  std::vector<NamedTensor> out;
  for (const auto& p : module.named_parameters(true)) out.push_back({p.key(), p.value()});
  for (const auto& b : module.named_buffers(true)) out.push_back({b.key(), b.value()});
  return out;
}

std::string encode_weights(const std::vector<NamedTensor>& tensors) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kWeightsFormatVersion);
  put<std::uint64_t>(out, tensors.size());
  for (const auto& [name, tensor] : tensors) {
    const auto t = tensor.detach().to(torch::kCPU).contiguous();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint8_t>(out, dtype_code(t.scalar_type()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim()));
    for (const auto d : t.sizes()) put<std::int64_t>(out, d);
    const auto nbytes = static_cast<std::uint64_t>(t.numel()) * t.element_size();
    put<std::uint64_t>(out, nbytes);
    out.append(static_cast<const char*>(t.data_ptr()), nbytes);
  }
  return out;
}

std::vector<NamedTensor> decode_weights(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4) != std::string_view(kMagic, 4)) throw FormatError("not a weights file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kWeightsFormatVersion) {
    throw FormatError("weights format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kWeightsFormatVersion) + ")");
  }
  const auto count = r.get<std::uint64_t>();
  std::vector<NamedTensor> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>();
    std::string name(r.take(name_len));
    const auto dtype = dtype_from_code(r.get<std::uint8_t>());
    const auto ndim = r.get<std::uint32_t>();
    std::vector<int64_t> shape(ndim);
    for (auto& d : shape) {
      d = r.get<std::int64_t>();
      if (d < 0) throw FormatError("negative dimension in tensor " + name);
    }
    const auto nbytes = r.get<std::uint64_t>();
    auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype));
    if (nbytes != static_cast<std::uint64_t>(t.numel()) * t.element_size()) {
      throw FormatError("byte count does not match shape for tensor " + name);
    }
    std::memcpy(t.data_ptr(), r.take(nbytes).data(), nbytes);
    out.push_back({std::move(name), std::move(t)});
  }
  if (!r.done()) throw FormatError("trailing bytes after last tensor");
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

void load_state(torch::nn::Module& module, const std::vector<NamedTensor>& tensors, const LoadOptions& options) {
  auto skipped = [&](const std::string& name) {
    return !options.skip_prefix.empty() && name.starts_with(options.skip_prefix);
  };
  std::map<std::string, torch::Tensor> targets;
  for (auto& [name, t] : collect_state(module)) targets.emplace(name, t);

  std::map<std::string, bool> seen;
  torch::NoGradGuard no_grad;
  for (const auto& [name, src] : tensors) {
    if (skipped(name)) continue;
    const auto it = targets.find(name);
    if (it == targets.end()) throw FormatError("unexpected tensor " + name);
    auto& dst = it->second;
    if (dst.sizes() != src.sizes()) {
      std::ostringstream msg;
      msg << "shape mismatch for " << name << ": model " << dst.sizes() << ", file " << src.sizes();
      throw FormatError(msg.str());
    }
    if (dst.scalar_type() != src.scalar_type()) throw FormatError("dtype mismatch for " + name);
    dst.copy_(src);
    seen[name] = true;
  }
  if (options.require_all) {
    for (const auto& [name, t] : targets) {
      if (!skipped(name) && !seen.contains(name)) throw FormatError("missing tensor " + name);
    }
  }
}

}  // namespace bcstage::models
