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

#ifndef MIXSEP_AUDIO_IO_H_
#define MIXSEP_AUDIO_IO_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mixsep/common.h"

namespace mixsep {

enum class Fold { kTrain = 0, kVal = 1, kTest = 2 };
inline constexpr int kNumFolds = 3;

const char* FoldName(Fold f);          // "tr" / "vl" / "te"
Fold ParseFold(const std::string& s);  // accepts tr/vl/te, train/val/test

// A mono waveform. Samples are amplitudes in [-1, 1]; class_id is 1-based
// when the clip belongs to a corpus and 0 when unassigned.
struct PcmClip {
  std::vector<double> samples;
  int sample_rate = 44100;
  int class_id = 0;
  Fold fold = Fold::kTrain;

  double seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct CorpusSpec {
  int n_classes = 25;
  int n_per_class = 60;
  std::array<int, kNumFolds> fold_sizes{40, 10, 10};
  double min_seconds = 0.25;
  double max_seconds = 1.0;
  int sample_rate = 44100;
};

// Immutable clip library: per class, per fold. No clip belongs to more than
// one fold by construction.
class Corpus {
 public:
  struct ClassClips {
    std::array<std::vector<PcmClip>, kNumFolds> folds;
  };

  Corpus(CorpusSpec spec, std::vector<ClassClips> classes)
      : spec_(spec), classes_(std::move(classes)) {}

  const CorpusSpec& spec() const { return spec_; }
  int num_classes() const { return static_cast<int>(classes_.size()); }
  int sample_rate() const { return spec_.sample_rate; }

  const std::vector<PcmClip>& clips(int class_id, Fold f) const {
    return classes_.at(class_id - 1).folds[static_cast<int>(f)];
  }
  const PcmClip& clip(int class_id, Fold f, int index) const {
    return clips(class_id, f).at(index);
  }

  // Content digest over every sample of every clip plus the fold layout.
  uint64_t Hash() const;

 private:
  CorpusSpec spec_;
  std::vector<ClassClips> classes_;
};

// Reads a PCM RIFF/WAVE file. Mono, or channel 0 of a multichannel file.
// Supports 8/16/24-bit integer and 32-bit float encodings; integer samples
// are rescaled to [-1, 1]. class_id/fold are left for the caller to attach.
PcmClip ReadWav(const std::string& path);

// Writes a 16-bit PCM mono WAV. Samples are clamped to [-1, 1], then
// quantized with round(x * 32767).
void WriteWav(const PcmClip& clip, const std::string& path);

// Builds a deterministic synthetic corpus: each class is a parametric sound
// family (pure tone, chirp, AM tone, filtered noise burst, pulse train,
// cycled), clips within a class vary in pitch and envelope, and every clip
// is peak-normalized to 0.9. Pure function of (spec, seed).
Corpus GenSyntheticCorpus(const CorpusSpec& spec, uint64_t seed);

// Loads a corpus from <dir>/class_<id>/<tr|vl|te>/*.wav, clips ordered by
// filename within each fold.
Corpus LoadCorpusDir(const std::string& dir);

}  // namespace mixsep

#endif  // MIXSEP_AUDIO_IO_H_
