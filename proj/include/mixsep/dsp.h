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

#ifndef MIXSEP_DSP_H_
#define MIXSEP_DSP_H_

#include <cstdint>
#include <string>
#include <vector>

#include "mixsep/audio_io.h"
#include "mixsep/common.h"

namespace mixsep {

enum class Window { kHann };

struct StftParams {
  int n_fft = 256;  // power of two
  int hop = 192;
  Window window = Window::kHann;
};

// Real spectrogram: W time frames by H = n_fft + 2 coefficients per frame.
// The first H/2 entries of a row are the real parts of bins 0..n_fft/2, the
// last H/2 the imaginary parts. Row-major (time-major) storage.
struct Spectrogram {
  int width = 0;   // W, time frames
  int height = 0;  // H
  std::vector<double> data;

  struct Meta {
    int n_fft = 0;
    int hop = 0;
    int sample_rate = 0;
    int64_t original_length = 0;
  } meta;

  double& at(int w, int h) { return data[size_t(w) * height + h]; }
  double at(int w, int h) const { return data[size_t(w) * height + h]; }
};

// Centered STFT: the signal is reflection-padded by n_fft/2 on both ends, so
// W = floor(len / hop) + 1. Each frame is Hann-windowed and transformed; the
// complex bins are stored as a real||imag row. The final frame is
// end-aligned whenever the uniform grid would leave trailing samples outside
// every window, which keeps the transform pair exactly invertible at any
// length.
Spectrogram Stft(const PcmClip& clip, const StftParams& params = {});
Spectrogram StftSamples(const std::vector<double>& samples, int sample_rate,
                        const StftParams& params = {});

// Inverse via weighted overlap-add with synthesis-window normalization,
// truncated to meta.original_length.
PcmClip Istft(const Spectrogram& spec);

// max |STFT(a+b) - STFT(a) - STFT(b)| over all coefficients. The sum is
// taken before any clamping.
double LinearityCheck(const PcmClip& a, const PcmClip& b,
                      const StftParams& params = {});

// Flat binary dump: little-endian header {W:u32, H:u32, n_fft:u32, hop:u32,
// sample_rate:u32, original_length:u64} then W*H float32, row-major.
void SaveSpectrogram(const Spectrogram& spec, const std::string& path);
Spectrogram LoadSpectrogram(const std::string& path);

}  // namespace mixsep

#endif  // MIXSEP_DSP_H_
