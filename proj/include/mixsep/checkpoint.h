// Copyright 2026 The mixsep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Parameter checkpoints: a one-line text header carrying the model config
// digest, followed by named tensors as flat binary — {name length:u32, name
// bytes, rank:u32, dims:u32..., little-endian float32 values}.

#ifndef MIXSEP_CHECKPOINT_H_
#define MIXSEP_CHECKPOINT_H_

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mixsep/common.h"
#include "mixsep/tensor.h"

namespace mixsep {

namespace detail {

inline void PutU32(std::ofstream& f, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  f.write(reinterpret_cast<char*>(b), 4);
}

inline bool GetU32(std::ifstream& f, uint32_t* v) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) return false;
  *v = b[0] | (b[1] << 8) | (b[2] << 16) | (uint32_t(b[3]) << 24);
  return true;
}

}  // namespace detail

template <typename Real>
void SaveCheckpoint(
    const std::string& path, const std::string& config_digest,
    const std::vector<std::pair<std::string, Tensor<Real>>>& params) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "mixsep-ckpt-v1 " << config_digest << "\n";
  for (const auto& [name, tensor] : params) {
    detail::PutU32(f, static_cast<uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::PutU32(f, static_cast<uint32_t>(tensor.rank()));
    for (int d : tensor.shape()) detail::PutU32(f, static_cast<uint32_t>(d));
    for (Real v : tensor.values()) {
      float fv = static_cast<float>(v);
      uint32_t u;
      std::memcpy(&u, &fv, 4);
      detail::PutU32(f, u);
    }
  }
  if (!f) throw IoError("short write to " + path);
}

// Loads into the given parameter list in place. The stored digest must
// match expected_digest and every parameter must be present with its shape.
template <typename Real>
void LoadCheckpoint(
    const std::string& path, const std::string& expected_digest,
    std::vector<std::pair<std::string, Tensor<Real>>> params) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::string header;
  if (!std::getline(f, header) || header.rfind("mixsep-ckpt-v1 ", 0) != 0)
    throw FormatError(path + ": not a mixsep checkpoint");
  const std::string digest = header.substr(15);
  if (digest != expected_digest)
    throw IncompatibleCheckpointError(path + ": config digest " + digest +
                                      " does not match " + expected_digest);

  std::map<std::string, std::pair<std::vector<int>, std::vector<float>>> loaded;
  for (;;) {
    uint32_t name_len;
    if (!detail::GetU32(f, &name_len)) break;  // clean EOF
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    uint32_t rank;
    if (!f || !detail::GetU32(f, &rank))
      throw FormatError(path + ": truncated tensor record");
    std::vector<int> dims(rank);
    int64_t count = 1;
    for (auto& d : dims) {
      uint32_t v;
      if (!detail::GetU32(f, &v))
        throw FormatError(path + ": truncated dims");
      d = static_cast<int>(v);
      count *= d;
    }
    std::vector<float> values(count);
    for (auto& v : values) {
      uint32_t u;
      if (!detail::GetU32(f, &u))
        throw FormatError(path + ": truncated values");
      std::memcpy(&v, &u, 4);
    }
    loaded[name] = {std::move(dims), std::move(values)};
  }

  for (auto& [name, tensor] : params) {
    auto it = loaded.find(name);
    if (it == loaded.end())
      throw IncompatibleCheckpointError(path + ": missing tensor " + name);
    if (it->second.first != tensor.shape())
      throw IncompatibleCheckpointError(path + ": shape mismatch for " + name);
    auto& values = tensor.values();
    for (size_t i = 0; i < values.size(); ++i)
      values[i] = static_cast<Real>(it->second.second[i]);
  }
}

}  // namespace mixsep

#endif  // MIXSEP_CHECKPOINT_H_
