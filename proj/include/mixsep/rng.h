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

#ifndef MIXSEP_RNG_H_
#define MIXSEP_RNG_H_

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace mixsep {

// SplitMix64 finalizer. Stateless; used to derive independent child seeds
// from a (master seed, counter) pair so that work items can be generated in
// any order and still be bit-reproducible.
inline uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t ChildSeed(uint64_t master, uint64_t index) {
  return Mix64(master + (index + 1) * 0x9e3779b97f4a7c15ull);
}

// Deterministic generator. mt19937_64 has a fully specified output sequence,
// and the distributions below are implemented from raw bits, so results are
// identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextBits() { return engine_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n), exact via masked rejection.
  uint64_t UniformInt(uint64_t n) {
    if (n <= 1) return 0;
    uint64_t mask = ~0ull >> __builtin_clzll(n - 1 | 1);
    for (;;) {
      uint64_t v = engine_() & mask;
      if (v < n) return v;
    }
  }

  // k distinct indices drawn uniformly from [0, n), by partial Fisher-Yates.
  // Order of the result is the draw order.
  std::vector<int> SampleWithoutReplacement(int n, int k) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
      int j = i + static_cast<int>(UniformInt(static_cast<uint64_t>(n - i)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = UniformInt(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mixsep

#endif  // MIXSEP_RNG_H_
