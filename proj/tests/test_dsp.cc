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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <filesystem>

#include "doctest.h"
#include "mixsep/dsp.h"
#include "mixsep/rng.h"

using namespace mixsep;

namespace {

constexpr double kPi = 3.14159265358979323846;

PcmClip RandomClip(int n, int rate, uint64_t seed) {
  Rng rng(seed);
  PcmClip c;
  c.sample_rate = rate;
  c.samples.resize(n);
  for (auto& v : c.samples) v = rng.Uniform(-1.0, 1.0);
  return c;
}

double Peak(const std::vector<double>& v) {
  double p = 0.0;
  for (double x : v) p = std::max(p, std::abs(x));
  return p;
}

// Naive DFT of one centered, Hann-windowed frame; the reference the fast
// path is checked against.
std::vector<std::complex<double>> DftOracleFrame(
    const std::vector<double>& x, int frame, const StftParams& p) {
  const int n = p.n_fft;
  const int pad = n / 2;
  auto reflect = [&](int64_t i) {
    const int64_t len = int64_t(x.size());
    if (len == 1) return int64_t(0);
    const int64_t period = 2 * (len - 1);
    i = ((i % period) + period) % period;
    return i < len ? i : period - i;
  };
  std::vector<double> windowed(n);
  for (int i = 0; i < n; ++i) {
    double w = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
    windowed[i] = w * x[reflect(int64_t(frame) * p.hop - pad + i)];
  }
  std::vector<std::complex<double>> bins(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int i = 0; i < n; ++i)
      acc += windowed[i] *
             std::exp(std::complex<double>(0.0, -2.0 * kPi * k * i / n));
    bins[k] = acc;
  }
  return bins;
}

}  // namespace

TEST_CASE("paper-profile shape: 2 s at 44.1 kHz gives 460x258") {
  PcmClip c = RandomClip(88200, 44100, 5);
  Spectrogram s = Stft(c);
  CHECK(s.width == 460);
  CHECK(s.height == 258);
}

TEST_CASE("shape law W = floor(len/hop)+1, H = n_fft+2") {
  StftParams p{128, 96};
  for (int len : {128, 1000, 8000, 8001, 8191}) {
    Spectrogram s = Stft(RandomClip(len, 8000, len), p);
    CHECK(s.width == len / 96 + 1);
    CHECK(s.height == 130);
  }
}

TEST_CASE("all-zero clip maps to all-zero spectrogram and back") {
  PcmClip c;
  c.sample_rate = 8000;
  c.samples.assign(4000, 0.0);
  Spectrogram s = Stft(c, {128, 96});
  for (double v : s.data) CHECK(v == 0.0);
  PcmClip back = Istft(s);
  REQUIRE(back.samples.size() == 4000);
  for (double v : back.samples) CHECK(v == 0.0);
}

TEST_CASE("1 kHz tone peaks at bin 6 and matches the DFT oracle") {
  PcmClip c;
  c.sample_rate = 44100;
  c.samples.resize(88200);
  for (size_t i = 0; i < c.samples.size(); ++i)
    c.samples[i] = 0.8 * std::sin(2.0 * kPi * 1000.0 * i / 44100.0);
  StftParams p;
  Spectrogram s = Stft(c, p);

  auto oracle = DftOracleFrame(c.samples, 230, p);
  const int bins = p.n_fft / 2 + 1;
  int peak_bin = 0;
  double peak_mag = 0.0;
  for (int k = 0; k < bins; ++k) {
    double mag = std::hypot(s.at(230, k), s.at(230, bins + k));
    CHECK(std::abs(s.at(230, k) - oracle[k].real()) <= 1e-9 * 88200);
    CHECK(std::abs(s.at(230, bins + k) - oracle[k].imag()) <= 1e-9 * 88200);
    if (mag > peak_mag) {
      peak_mag = mag;
      peak_bin = k;
    }
  }
  CHECK(peak_bin == 6);  // round(1000 * 256 / 44100)
}

TEST_CASE("stft/istft round trip within 1e-6 of peak") {
  StftParams p{128, 96};
  for (uint64_t seed = 0; seed < 8; ++seed) {
    int len = 128 + int(Rng(seed * 91 + 1).UniformInt(8000));
    PcmClip c = RandomClip(len, 8000, seed);
    PcmClip back = Istft(Stft(c, p));
    REQUIRE(back.samples.size() == c.samples.size());
    double err = 0.0;
    for (size_t i = 0; i < c.samples.size(); ++i)
      err = std::max(err, std::abs(back.samples[i] - c.samples[i]));
    CHECK(err <= 1e-6 * Peak(c.samples));
  }
  // Lengths whose remainder mod hop exceeds n_fft/2 need the end-aligned
  // final frame; the tail must still reconstruct exactly.
  for (int len : {128 + 95, 96 * 17 + 90, 96 * 50 + 65}) {
    PcmClip c = RandomClip(len, 8000, len);
    PcmClip back = Istft(Stft(c, p));
    REQUIRE(back.samples.size() == c.samples.size());
    double err = 0.0;
    for (size_t i = 0; i < c.samples.size(); ++i)
      err = std::max(err, std::abs(back.samples[i] - c.samples[i]));
    CHECK(err <= 1e-6 * Peak(c.samples));
  }
}

TEST_CASE("round trip of a shifted signal is the shifted signal") {
  StftParams p{128, 96};
  PcmClip c = RandomClip(4000, 8000, 77);
  PcmClip shifted;
  shifted.sample_rate = 8000;
  shifted.samples.assign(c.samples.size(), 0.0);
  for (size_t i = 1; i < c.samples.size(); ++i)
    shifted.samples[i] = c.samples[i - 1];
  PcmClip back = Istft(Stft(shifted, p));
  for (size_t i = 1; i < c.samples.size(); ++i)
    CHECK(std::abs(back.samples[i] - c.samples[i - 1]) <= 1e-6);
}

TEST_CASE("stft config and input validation") {
  PcmClip c = RandomClip(1000, 8000, 1);
  CHECK_THROWS_AS(Stft(c, StftParams{100, 96}), ConfigError);
  CHECK_THROWS_AS(Stft(c, StftParams{128, 0}), ConfigError);
  PcmClip empty;
  empty.sample_rate = 8000;
  CHECK_THROWS_AS(Stft(empty, StftParams{128, 96}), EmptyClipError);
}

TEST_CASE("hop = n_fft makes the Hann synthesis non-invertible") {
  PcmClip c = RandomClip(2048, 8000, 3);
  Spectrogram s = Stft(c, StftParams{128, 128});
  CHECK_THROWS_AS(Istft(s), NonInvertibleConfigError);
}

TEST_CASE("stft linearity") {
  StftParams p{128, 96};
  SUBCASE("b = zeros is exact") {
    PcmClip a = RandomClip(2000, 8000, 9);
    PcmClip b;
    b.sample_rate = 8000;
    b.samples.assign(2000, 0.0);
    CHECK(LinearityCheck(a, b, p) == 0.0);
  }
  SUBCASE("random pairs stay below 1e-9") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      PcmClip a = RandomClip(3000, 8000, 100 + seed);
      PcmClip b = RandomClip(3000, 8000, 200 + seed);
      CHECK(LinearityCheck(a, b, p) <= 1e-9);
    }
  }
  SUBCASE("b = -a cancels exactly") {
    PcmClip a = RandomClip(2000, 8000, 4);
    PcmClip b = a;
    for (auto& v : b.samples) v = -v;
    std::vector<double> sum(a.samples.size(), 0.0);
    Spectrogram s = StftSamples(sum, 8000, p);
    for (double v : s.data) CHECK(v == 0.0);
  }
  SUBCASE("length mismatch is a shape error") {
    PcmClip a = RandomClip(2000, 8000, 5);
    PcmClip b = RandomClip(1999, 8000, 6);
    CHECK_THROWS_AS(LinearityCheck(a, b, p), ShapeError);
  }
}

TEST_CASE("spectrogram dump round trip") {
  PcmClip c = RandomClip(4000, 8000, 21);
  Spectrogram s = Stft(c, {128, 96});
  std::string path =
      (std::filesystem::temp_directory_path() / "spec.bin").string();
  SaveSpectrogram(s, path);
  Spectrogram back = LoadSpectrogram(path);
  CHECK(back.width == s.width);
  CHECK(back.height == s.height);
  CHECK(back.meta.n_fft == 128);
  CHECK(back.meta.hop == 96);
  CHECK(back.meta.sample_rate == 8000);
  CHECK(back.meta.original_length == 4000);
  for (size_t i = 0; i < s.data.size(); ++i)
    CHECK(back.data[i] == doctest::Approx(s.data[i]).epsilon(1e-6));
}
