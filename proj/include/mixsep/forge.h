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
// Mixture forging: sampling policies, random placement and volume, mixing,
// and persistent dataset manifests. Every record derives from an
// independent child seed, so records regenerate individually and in any
// order, bit-identically.

#ifndef MIXSEP_FORGE_H_
#define MIXSEP_FORGE_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mixsep/audio_io.h"
#include "mixsep/common.h"
#include "mixsep/rng.h"

namespace mixsep {

enum class Policy { kInterclass, kIntraclass, kHybrid };

const char* PolicyName(Policy u);
Policy ParsePolicy(const std::string& s);

struct SubdatasetId {
  Policy u = Policy::kHybrid;
  int s = 2;
  Fold f = Fold::kTrain;
};

// 10^4 * s mixtures for the train fold, 10^3 * s for val/test.
int64_t DefaultMixtureCount(const SubdatasetId& id);

struct ClipRef {
  int class_id = 0;
  int clip_index = 0;  // within (class, fold)
};

struct Placement {
  ClipRef clip;
  double start_s = 0.0;
  double volume = 1.0;
};

struct RecordMeta {
  int64_t record_id = 0;
  uint64_t seed = 0;
  std::vector<Placement> placements;
  int64_t clamp_count = 0;
};

struct MixtureRecord {
  RecordMeta meta;
  PcmClip mixture;
  std::vector<PcmClip> sources;  // full mixture length, silence-padded
};

struct ForgeOptions {
  double mixture_seconds = 2.0;
  double volume_floor = 0.05;  // epsilon of the volume draw
  // When set, start times are drawn from uniform(0, L) and clips that
  // overrun the mixture end are truncated. Default draws from
  // uniform(0, L - duration) so every source fits entirely.
  bool literal_start = false;
};

struct DatasetManifest {
  SubdatasetId subdataset;
  uint64_t master_seed = 0;
  uint64_t corpus_hash = 0;
  int sample_rate = 0;
  ForgeOptions options;
  std::vector<RecordMeta> records;

  // Accepts records in any order; ordering happens here.
  void AddRecord(RecordMeta meta) { records.push_back(std::move(meta)); }
  void SortRecords();
};

// --- sampling policies ------------------------------------------------

// s clips from pairwise-distinct classes, one uniform clip per class.
std::vector<ClipRef> SampleInterclassRefs(const Corpus& corpus, int s, Fold f,
                                          Rng& rng);
// One uniformly chosen eligible class, then s distinct clips from it.
std::vector<ClipRef> SampleIntraclassRefs(const Corpus& corpus, int s, Fold f,
                                          Rng& rng);
// s distinct clips from the union of all classes' fold-f clips.
std::vector<ClipRef> SampleHybridRefs(const Corpus& corpus, int s, Fold f,
                                      Rng& rng);

std::vector<ClipRef> SampleRefs(const Corpus& corpus, Policy u, int s, Fold f,
                                Rng& rng);

std::vector<PcmClip> SampleInterclass(const Corpus& corpus, int s, Fold f,
                                      Rng& rng);
std::vector<PcmClip> SampleIntraclass(const Corpus& corpus, int s, Fold f,
                                      Rng& rng);
std::vector<PcmClip> SampleHybrid(const Corpus& corpus, int s, Fold f,
                                  Rng& rng);

// --- placement and mixing ----------------------------------------------

// Renders a clip into a full-length track: silence, then the clip scaled by
// placement.volume starting at round(start_s * rate), then silence.
PcmClip PlaceClip(const PcmClip& clip, const Placement& placement,
                  double mixture_seconds, bool truncate = false);

struct MixResult {
  PcmClip mixture;
  int64_t clamp_count = 0;
};

// Sample-wise sum with a hard clamp to [-1, 1]; clamped samples are counted.
MixResult Mix(const std::vector<PcmClip>& sources);

// --- dataset construction ----------------------------------------------

MixtureRecord GenerateRecord(const Corpus& corpus, const SubdatasetId& id,
                             const ForgeOptions& options, int64_t record_id,
                             uint64_t seed);

// Rebuilds a record's audio from its stored placements. Bit-identical to
// the record produced at build time.
MixtureRecord RegenerateRecord(const Corpus& corpus,
                               const DatasetManifest& manifest, int64_t index);

using RecordSink = std::function<void(const MixtureRecord&)>;

// Runs the full mixture-creation loop: record i uses ChildSeed(master_seed,
// i); per record the policy sample, then a (start, volume) draw per source,
// placement, and mixing.
DatasetManifest BuildSubdataset(const Corpus& corpus, const SubdatasetId& id,
                                int64_t count, uint64_t master_seed,
                                const ForgeOptions& options = {},
                                const RecordSink& sink = nullptr);

// --- persistence --------------------------------------------------------

// One JSON object per line: a header, then a record per line.
void WriteManifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest ReadManifest(const std::string& path);

// <root>/<policy>/<s>/<fold>/<record_id>/{mixture.wav, source_<k>.wav}
std::string RecordAudioDir(const std::string& root, const SubdatasetId& id,
                           int64_t record_id);
void WriteRecordAudio(const MixtureRecord& record, const std::string& root,
                      const SubdatasetId& id);

// --- validation ----------------------------------------------------------

struct ScanResult {
  bool ok = true;
  std::string violation;
};

// Checks every record against the manifest's policy (class distinctness or
// sameness), the volume bounds, and — when a corpus is supplied — the
// start + duration <= L bound.
ScanResult ScanManifest(const DatasetManifest& manifest,
                        const Corpus* corpus = nullptr);

}  // namespace mixsep

#endif  // MIXSEP_FORGE_H_
