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

#ifndef MIXSEP_COMMON_H_
#define MIXSEP_COMMON_H_

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace mixsep {

// Error taxonomy. Every failure surfaces as one of these types so callers
// (CLI, tests) can match on the condition instead of parsing messages.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct ContractError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// audio_io
struct FormatError : Error { using Error::Error; };
struct UnsupportedCodecError : Error { using Error::Error; };
struct EmptyClipError : Error { using Error::Error; };
struct RateError : Error { using Error::Error; };

// forge
struct InsufficientCorpusError : Error { using Error::Error; };
struct OversizeClipError : Error { using Error::Error; };

// autodiff / training
struct DoubleBackwardError : Error { using Error::Error; };
struct IncompatibleCheckpointError : Error { using Error::Error; };
struct DivergedRunError : Error { using Error::Error; };
struct EmptyDatasetError : Error { using Error::Error; };
struct NonInvertibleConfigError : Error { using Error::Error; };

// Incremental 64-bit FNV-1a. Used for corpus hashes and config digests.
class Fnv64 {
 public:
  void Update(const void* bytes, size_t len) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < len; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ull;
    }
  }
  void Update(const std::string& s) { Update(s.data(), s.size()); }
  template <typename T>
  void UpdatePod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    Update(&v, sizeof(v));
  }
  uint64_t digest() const { return state_; }

  std::string HexDigest() const {
    static const char* kHex = "0123456789abcdef";
    std::string out(16, '0');
    uint64_t v = state_;
    for (int i = 15; i >= 0; --i, v >>= 4) out[i] = kHex[v & 0xf];
    return out;
  }

 private:
  uint64_t state_ = 0xcbf29ce484222325ull;
};

}  // namespace mixsep

#endif  // MIXSEP_COMMON_H_
