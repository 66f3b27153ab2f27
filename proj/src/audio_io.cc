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

#include "mixsep/audio_io.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "mixsep/rng.h"

namespace mixsep {

namespace {

constexpr double kPi = 3.14159265358979323846;

uint32_t ReadU32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (uint32_t(p[3]) << 24);
}
uint16_t ReadU16(const unsigned char* p) { return p[0] | (p[1] << 8); }

void PutU32(std::string& s, uint32_t v) {
  s.push_back(char(v & 0xff));
  s.push_back(char((v >> 8) & 0xff));
  s.push_back(char((v >> 16) & 0xff));
  s.push_back(char((v >> 24) & 0xff));
}
void PutU16(std::string& s, uint16_t v) {
  s.push_back(char(v & 0xff));
  s.push_back(char((v >> 8) & 0xff));
}

}  // namespace

const char* FoldName(Fold f) {
  switch (f) {
    case Fold::kTrain: return "tr";
    case Fold::kVal: return "vl";
    case Fold::kTest: return "te";
  }
  return "?";
}

Fold ParseFold(const std::string& s) {
  if (s == "tr" || s == "train") return Fold::kTrain;
  if (s == "vl" || s == "val" || s == "validation") return Fold::kVal;
  if (s == "te" || s == "test") return Fold::kTest;
  throw ConfigError("unknown fold name: " + s);
}

PcmClip ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string raw((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  size_t n = raw.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0)
    throw FormatError(path + ": not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  uint32_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= n) {
    uint32_t chunk_len = ReadU32(p + pos + 4);
    const unsigned char* body = p + pos + 8;
    if (pos + 8 + chunk_len > n)
      throw FormatError(path + ": truncated chunk");
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw FormatError(path + ": short fmt chunk");
      format = ReadU16(body);
      channels = ReadU16(body + 2);
      rate = ReadU32(body + 4);
      bits = ReadU16(body + 14);
      if (format == 0xfffe) {
        // WAVE_FORMAT_EXTENSIBLE: the actual format is the first word of
        // the sub-format GUID.
        if (chunk_len < 40) throw FormatError(path + ": short extensible fmt");
        format = ReadU16(body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || rate == 0 || channels == 0)
    throw FormatError(path + ": missing or malformed fmt chunk");
  if (data == nullptr) throw FormatError(path + ": missing data chunk");

  const bool pcm_int = format == 1;
  const bool ieee_float = format == 3;
  if (!pcm_int && !ieee_float)
    throw UnsupportedCodecError(path + ": unsupported format tag " +
                                std::to_string(format));
  if (pcm_int && bits != 8 && bits != 16 && bits != 24)
    throw UnsupportedCodecError(path + ": unsupported PCM depth " +
                                std::to_string(bits));
  if (ieee_float && bits != 32)
    throw UnsupportedCodecError(path + ": unsupported float depth " +
                                std::to_string(bits));

  const uint32_t bytes_per_sample = bits / 8;
  const uint32_t frame_bytes = bytes_per_sample * channels;
  const uint32_t frames = data_len / frame_bytes;
  if (frames == 0) throw EmptyClipError(path + ": empty data chunk");

  PcmClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (uint32_t i = 0; i < frames; ++i) {
    const unsigned char* s = data + i * frame_bytes;  // channel 0
    double v = 0.0;
    if (pcm_int && bits == 8) {
      v = (int(s[0]) - 128) / 128.0;
    } else if (pcm_int && bits == 16) {
      int16_t q = static_cast<int16_t>(ReadU16(s));
      v = q / 32767.0;
    } else if (pcm_int && bits == 24) {
      int32_t q = s[0] | (s[1] << 8) | (s[2] << 16);
      if (q & 0x800000) q |= ~0xffffff;
      v = q / 8388607.0;
    } else {  // 32-bit float
      uint32_t u = ReadU32(s);
      float f;
      std::memcpy(&f, &u, sizeof(f));
      v = f;
    }
    clip.samples[i] = std::clamp(v, -1.0, 1.0);
  }
  return clip;
}

void WriteWav(const PcmClip& clip, const std::string& path) {
  const uint32_t n = static_cast<uint32_t>(clip.samples.size());
  std::string out;
  out.reserve(44 + 2 * n);
  out += "RIFF";
  PutU32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, 1);  // PCM
  PutU16(out, 1);  // mono
  PutU32(out, static_cast<uint32_t>(clip.sample_rate));
  PutU32(out, static_cast<uint32_t>(clip.sample_rate) * 2);
  PutU16(out, 2);   // block align
  PutU16(out, 16);  // bits
  out += "data";
  PutU32(out, 2 * n);
  for (uint32_t i = 0; i < n; ++i) {
    double x = std::clamp(clip.samples[i], -1.0, 1.0);
    int q = static_cast<int>(std::lround(x * 32767.0));
    PutU16(out, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write to " + path);
}

uint64_t Corpus::Hash() const {
  Fnv64 h;
  h.UpdatePod(spec_.n_classes);
  h.UpdatePod(spec_.sample_rate);
  for (const auto& cls : classes_) {
    for (const auto& fold : cls.folds) {
      h.UpdatePod(static_cast<uint64_t>(fold.size()));
      for (const auto& clip : fold) {
        h.UpdatePod(clip.sample_rate);
        h.UpdatePod(static_cast<uint64_t>(clip.samples.size()));
        h.Update(clip.samples.data(), clip.samples.size() * sizeof(double));
      }
    }
  }
  return h.digest();
}

namespace {

// One parametric sound family per class, cycled. Base parameters step with
// the class tier so classes stay spectrally distinguishable.
enum class Family { kTone, kChirp, kAmTone, kNoiseBurst, kPulseTrain };

std::vector<double> RenderClip(Family family, double base_freq, int n,
                               int rate, Rng& rng) {
  std::vector<double> x(n);
  const double dt = 1.0 / rate;
  const double pitch = base_freq * std::pow(2.0, rng.Uniform(-0.3, 0.3));
  const double phase = rng.Uniform(0.0, 2.0 * kPi);
  switch (family) {
    case Family::kTone: {
      for (int i = 0; i < n; ++i)
        x[i] = std::sin(2.0 * kPi * pitch * i * dt + phase);
      break;
    }
    case Family::kChirp: {
      const double f1 = pitch * rng.Uniform(1.2, 1.6);
      const double dur = n * dt;
      for (int i = 0; i < n; ++i) {
        double t = i * dt;
        x[i] = std::sin(2.0 * kPi * (pitch * t + 0.5 * (f1 - pitch) * t * t / dur) + phase);
      }
      break;
    }
    case Family::kAmTone: {
      const double mod = rng.Uniform(3.0, 9.0);
      for (int i = 0; i < n; ++i) {
        double t = i * dt;
        x[i] = std::sin(2.0 * kPi * pitch * t + phase) *
               (0.6 + 0.4 * std::sin(2.0 * kPi * mod * t));
      }
      break;
    }
    case Family::kNoiseBurst: {
      // One-pole lowpass over white noise, exponential decay envelope.
      const double cutoff = std::min(pitch * 2.0, 0.45 * rate);
      const double alpha = 1.0 - std::exp(-2.0 * kPi * cutoff * dt);
      const double tau = n * dt * rng.Uniform(0.25, 0.6);
      double y = 0.0;
      for (int i = 0; i < n; ++i) {
        y += alpha * (rng.Uniform(-1.0, 1.0) - y);
        x[i] = y * std::exp(-i * dt / tau);
      }
      break;
    }
    case Family::kPulseTrain: {
      const double pulse_hz = rng.Uniform(6.0, 14.0);
      const int period = std::max(1, static_cast<int>(rate / pulse_hz));
      const double tau = rng.Uniform(0.01, 0.03);
      for (int start = 0; start < n; start += period) {
        for (int i = start; i < n; ++i) {
          double t = (i - start) * dt;
          double w = std::exp(-t / tau);
          if (w < 1e-4) break;
          x[i] += w * std::sin(2.0 * kPi * pitch * t + phase);
        }
      }
      break;
    }
  }

  // Attack/release so clips start and end near silence.
  const int attack = std::max(1, n / 20);
  const int release = std::max(1, n / 10);
  for (int i = 0; i < attack && i < n; ++i) x[i] *= double(i) / attack;
  for (int i = 0; i < release && i < n; ++i)
    x[n - 1 - i] *= double(i) / release;

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : x) v *= 0.9 / peak;
  return x;
}

}  // namespace

Corpus GenSyntheticCorpus(const CorpusSpec& spec, uint64_t seed) {
  if (spec.n_classes < 1 || spec.n_per_class < 1)
    throw ConfigError("corpus needs at least one class and one clip");
  int fold_total = spec.fold_sizes[0] + spec.fold_sizes[1] + spec.fold_sizes[2];
  if (fold_total != spec.n_per_class)
    throw ConfigError("fold sizes must sum to n_per_class");
  if (!(spec.min_seconds > 0.0) || spec.max_seconds < spec.min_seconds)
    throw ConfigError("duration range must satisfy 0 < min <= max");

  std::vector<Corpus::ClassClips> classes(spec.n_classes);
  for (int c = 0; c < spec.n_classes; ++c) {
    const auto family = static_cast<Family>(c % 5);
    const int tier = (c / 5) % 5;
    const double base_freq = 150.0 * std::pow(1.8, tier);
    for (int j = 0; j < spec.n_per_class; ++j) {
      Rng rng(ChildSeed(seed, uint64_t(c) * spec.n_per_class + j));
      const double dur = rng.Uniform(spec.min_seconds, spec.max_seconds);
      const int n = std::max(1, static_cast<int>(std::lround(dur * spec.sample_rate)));
      PcmClip clip;
      clip.sample_rate = spec.sample_rate;
      clip.class_id = c + 1;
      clip.fold = j < spec.fold_sizes[0]              ? Fold::kTrain
                  : j < spec.fold_sizes[0] + spec.fold_sizes[1] ? Fold::kVal
                                                                : Fold::kTest;
      clip.samples = RenderClip(family, base_freq, n, spec.sample_rate, rng);
      classes[c].folds[static_cast<int>(clip.fold)].push_back(std::move(clip));
    }
  }
  return Corpus(spec, std::move(classes));
}

Corpus LoadCorpusDir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");

  std::vector<Corpus::ClassClips> classes;
  int sample_rate = 0;
  for (int class_id = 1;; ++class_id) {
    fs::path class_dir = fs::path(dir) / ("class_" + std::to_string(class_id));
    if (!fs::is_directory(class_dir)) break;
    Corpus::ClassClips cls;
    for (int f = 0; f < kNumFolds; ++f) {
      fs::path fold_dir = class_dir / FoldName(static_cast<Fold>(f));
      if (!fs::is_directory(fold_dir)) continue;
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(fold_dir))
        if (e.path().extension() == ".wav") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& file : files) {
        PcmClip clip = ReadWav(file.string());
        clip.class_id = class_id;
        clip.fold = static_cast<Fold>(f);
        if (sample_rate == 0) sample_rate = clip.sample_rate;
        if (clip.sample_rate != sample_rate)
          throw RateError(file.string() + ": corpus mixes sample rates");
        cls.folds[f].push_back(std::move(clip));
      }
    }
    classes.push_back(std::move(cls));
  }
  if (classes.empty())
    throw IoError(dir + ": no class_<id> subdirectories found");

  CorpusSpec spec;
  spec.n_classes = static_cast<int>(classes.size());
  spec.sample_rate = sample_rate;
  spec.n_per_class = 0;
  spec.fold_sizes = {0, 0, 0};
  return Corpus(spec, std::move(classes));
}

}  // namespace mixsep
