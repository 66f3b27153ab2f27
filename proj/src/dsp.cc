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

#include "mixsep/dsp.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>

namespace mixsep {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

void ValidateParams(const StftParams& p) {
  if (!IsPowerOfTwo(p.n_fft))
    throw ConfigError("n_fft must be a power of two, got " +
                      std::to_string(p.n_fft));
  if (p.hop <= 0) throw ConfigError("hop must be positive");
}

// Periodic Hann window of length n.
std::vector<double> HannWindow(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  return w;
}

// In-place iterative radix-2 FFT. sign = -1 forward, +1 inverse (unscaled).
void Fft(std::vector<std::complex<double>>& a, int sign) {
  const int n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * kPi / len;
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int j = 0; j < len / 2; ++j) {
        auto u = a[i + j];
        auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Reflection index without edge repetition, valid for any signal length.
int64_t ReflectIndex(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

// Center of frame t, in signal coordinates. The grid is uniform at the hop
// except that the final frame is end-aligned when floor truncation of the
// frame count would otherwise leave trailing samples outside every window
// (len mod hop can exceed n_fft/2); both transforms derive the positions
// from (len, hop, n_fft), so the pair stays exactly invertible.
int64_t FrameStart(int t, int frames, int64_t len, const StftParams& p) {
  int64_t start = int64_t(t) * p.hop;
  if (t == frames - 1) start = std::max(start, len - p.n_fft / 2);
  return start - p.n_fft / 2;
}

Spectrogram StftImpl(const std::vector<double>& x, int sample_rate,
                     const StftParams& p) {
  ValidateParams(p);
  if (x.empty()) throw EmptyClipError("stft input is empty");

  const int n_fft = p.n_fft;
  const int64_t len = static_cast<int64_t>(x.size());
  const int frames = static_cast<int>(len / p.hop) + 1;
  const int bins = n_fft / 2 + 1;

  Spectrogram spec;
  spec.width = frames;
  spec.height = n_fft + 2;
  spec.data.resize(size_t(frames) * spec.height);
  spec.meta = {n_fft, p.hop, sample_rate, len};

  const std::vector<double> window = HannWindow(n_fft);
  std::vector<std::complex<double>> buf(n_fft);
  for (int t = 0; t < frames; ++t) {
    const int64_t start = FrameStart(t, frames, len, p);
    for (int i = 0; i < n_fft; ++i) {
      const double v = x[ReflectIndex(start + i, len)];
      buf[i] = {v * window[i], 0.0};
    }
    Fft(buf, -1);
    for (int k = 0; k < bins; ++k) {
      spec.at(t, k) = buf[k].real();
      spec.at(t, bins + k) = buf[k].imag();
    }
  }
  return spec;
}

}  // namespace

Spectrogram Stft(const PcmClip& clip, const StftParams& params) {
  return StftImpl(clip.samples, clip.sample_rate, params);
}

Spectrogram StftSamples(const std::vector<double>& samples, int sample_rate,
                        const StftParams& params) {
  return StftImpl(samples, sample_rate, params);
}

PcmClip Istft(const Spectrogram& spec) {
  const StftParams params{spec.meta.n_fft, spec.meta.hop};
  const int n_fft = spec.meta.n_fft;
  const int64_t len = spec.meta.original_length;
  if (n_fft <= 0 || params.hop <= 0 || len <= 0)
    throw ConfigError("istft requires spectrogram meta");
  if (spec.height != n_fft + 2)
    throw ShapeError("spectrogram height does not match n_fft");
  if (spec.width != static_cast<int>(len / params.hop) + 1)
    throw ShapeError("spectrogram width does not match original_length");

  const int pad = n_fft / 2;
  const int bins = n_fft / 2 + 1;
  const std::vector<double> window = HannWindow(n_fft);

  std::vector<double> acc(len + n_fft, 0.0);
  std::vector<double> norm(len + n_fft, 0.0);
  std::vector<std::complex<double>> buf(n_fft);
  for (int t = 0; t < spec.width; ++t) {
    for (int k = 0; k < bins; ++k)
      buf[k] = {spec.at(t, k), spec.at(t, bins + k)};
    for (int k = bins; k < n_fft; ++k) buf[k] = std::conj(buf[n_fft - k]);
    Fft(buf, +1);
    const int64_t start = FrameStart(t, spec.width, len, params) + pad;
    for (int i = 0; i < n_fft; ++i) {
      const double v = buf[i].real() / n_fft;
      acc[start + i] += v * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }

  PcmClip clip;
  clip.sample_rate = spec.meta.sample_rate;
  clip.samples.resize(len);
  for (int64_t i = 0; i < len; ++i) {
    const double w2 = norm[pad + i];
    if (w2 < 1e-8)
      throw NonInvertibleConfigError(
          "synthesis window sum below 1e-8 at sample " + std::to_string(i));
    clip.samples[i] = acc[pad + i] / w2;
  }
  return clip;
}

double LinearityCheck(const PcmClip& a, const PcmClip& b,
                      const StftParams& params) {
  if (a.samples.size() != b.samples.size())
    throw ShapeError("linearity check requires equal lengths");
  if (a.sample_rate != b.sample_rate)
    throw ShapeError("linearity check requires equal sample rates");
  std::vector<double> sum(a.samples.size());
  for (size_t i = 0; i < sum.size(); ++i)
    sum[i] = a.samples[i] + b.samples[i];
  Spectrogram sa = StftSamples(a.samples, a.sample_rate, params);
  Spectrogram sb = StftSamples(b.samples, b.sample_rate, params);
  Spectrogram sab = StftSamples(sum, a.sample_rate, params);
  double max_dev = 0.0;
  for (size_t i = 0; i < sab.data.size(); ++i)
    max_dev = std::max(max_dev,
                       std::abs(sab.data[i] - sa.data[i] - sb.data[i]));
  return max_dev;
}

void SaveSpectrogram(const Spectrogram& spec, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  auto put_u32 = [&f](uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<char*>(b), 4);
  };
  put_u32(static_cast<uint32_t>(spec.width));
  put_u32(static_cast<uint32_t>(spec.height));
  put_u32(static_cast<uint32_t>(spec.meta.n_fft));
  put_u32(static_cast<uint32_t>(spec.meta.hop));
  put_u32(static_cast<uint32_t>(spec.meta.sample_rate));
  const uint64_t len = static_cast<uint64_t>(spec.meta.original_length);
  put_u32(static_cast<uint32_t>(len));
  put_u32(static_cast<uint32_t>(len >> 32));
  for (double v : spec.data) {
    float fv = static_cast<float>(v);
    uint32_t u;
    std::memcpy(&u, &fv, 4);
    put_u32(u);
  }
  if (!f) throw IoError("short write to " + path);
}

Spectrogram LoadSpectrogram(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  auto get_u32 = [&f, &path]() -> uint32_t {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw FormatError(path + ": truncated spectrogram file");
    return b[0] | (b[1] << 8) | (b[2] << 16) | (uint32_t(b[3]) << 24);
  };
  Spectrogram spec;
  spec.width = static_cast<int>(get_u32());
  spec.height = static_cast<int>(get_u32());
  spec.meta.n_fft = static_cast<int>(get_u32());
  spec.meta.hop = static_cast<int>(get_u32());
  spec.meta.sample_rate = static_cast<int>(get_u32());
  const uint64_t lo = get_u32();
  const uint64_t hi = get_u32();
  spec.meta.original_length = static_cast<int64_t>(lo | (hi << 32));
  if (spec.width < 0 || spec.height < 0)
    throw FormatError(path + ": bad spectrogram dimensions");
  spec.data.resize(size_t(spec.width) * spec.height);
  for (double& v : spec.data) {
    uint32_t u = get_u32();
    float fv;
    std::memcpy(&fv, &u, 4);
    v = fv;
  }
  return spec;
}

}  // namespace mixsep
