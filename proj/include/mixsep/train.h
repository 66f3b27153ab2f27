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
// Training, evaluation, and separation glue. Mixtures are synthesized on
// the fly from manifests, so datasets are never materialized unless asked.

#ifndef MIXSEP_TRAIN_H_
#define MIXSEP_TRAIN_H_

#include <optional>
#include <string>
#include <vector>

#include "mixsep/audio_io.h"
#include "mixsep/checkpoint.h"
#include "mixsep/dsp.h"
#include "mixsep/forge.h"
#include "mixsep/stt.h"

namespace mixsep {

inline constexpr double kGridLearningRates[] = {0.001, 0.0005, 0.0001};

struct TrainConfig {
  Policy policy = Policy::kHybrid;
  int sources = 2;
  SttConfig stt;  // frames/height/sources are derived by Resolve()

  double lr = 0.001;
  int batch_size = 8;
  int max_steps = 2000;
  int eval_every = 200;
  uint64_t seed = 1;
  bool deterministic = true;

  // Data profile. The desk default keeps the full pipeline in minutes on
  // one CPU; PaperProfile() restores the 44.1 kHz / 2 s configuration.
  CorpusSpec corpus{3, 12, {8, 2, 2}, 0.25, 1.0, 8000};
  uint64_t corpus_seed = 7;
  StftParams stft{128, 96};
  double mixture_seconds = 1.0;
  double volume_floor = 0.05;
  int64_t train_count = 200;
  int64_t val_count = 40;
  int64_t test_count = 40;

  static TrainConfig DeskDefault();
  static TrainConfig PaperProfile();

  // Derives the model input shape from the data profile and validates.
  void Resolve();
  int64_t MixtureSamples() const;
  SubdatasetId Subdataset(Fold f) const { return {policy, sources, f}; }
  int64_t FoldCount(Fold f) const {
    return f == Fold::kTrain ? train_count
                             : (f == Fold::kVal ? val_count : test_count);
  }

  std::string ToJsonString() const;
  static TrainConfig FromJsonString(const std::string& text);
  static TrainConfig FromJsonFile(const std::string& path);
};

struct RunLogRow {
  int64_t step = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  std::optional<double> baseline_loss;  // mixture projection on the eval set
  double wall_ms = 0.0;
};

struct RunLog {
  std::vector<RunLogRow> rows;
  void WriteJsonl(const std::string& path) const;
};

struct EvalResult {
  double model_loss = 0.0;
  double baseline_loss = 0.0;  // mixture projection on the same set
  int64_t count = 0;
};

struct TrainResult {
  RunLog log;
  std::string best_checkpoint;
  std::string last_checkpoint;
  double final_train_loss = 0.0;
  double best_val_loss = 0.0;
};

template <typename Real>
void SaveModel(SttModel<Real>& model, const std::string& path) {
  SaveCheckpoint(path, model.config().Digest(), model.NamedParams());
}

template <typename Real>
void LoadModel(SttModel<Real>& model, const std::string& path) {
  LoadCheckpoint(path, model.config().Digest(), model.NamedParams());
}

// Full training loop: stream batches from the train manifest, forward with
// dropout on, greedy-bijection loss, backward, Adam. Checkpoints at eval
// points; the best-validation checkpoint is retained. A non-finite loss
// aborts with DivergedRunError after writing the last good checkpoint.
TrainResult Train(const TrainConfig& cfg, const Corpus& corpus,
                  const std::string& out_dir);

// Mean greedy-bijection loss of the model over a manifest (dropout off),
// plus the mixture-projection baseline on the same records.
EvalResult Evaluate(SttModel<float>& model, const DatasetManifest& manifest,
                    const Corpus& corpus, const StftParams& stft);

// Separates a mixture WAV into `sources` tracks. Inputs longer than one
// mixture window are tiled and separated window by window; the input rate
// must match the configured rate (no implicit resampling). Returns the
// written file paths. When dump_spec_dir is nonempty the per-tile input
// spectrograms are dumped there in the flat binary format.
std::vector<std::string> Separate(SttModel<float>& model,
                                  const StftParams& stft,
                                  double mixture_seconds, int expected_rate,
                                  const std::string& wav_path,
                                  const std::string& out_dir,
                                  const std::string& dump_spec_dir = "");

}  // namespace mixsep

#endif  // MIXSEP_TRAIN_H_
