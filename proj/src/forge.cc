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

#include "mixsep/forge.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace mixsep {

using nlohmann::json;

const char* PolicyName(Policy u) {
  switch (u) {
    case Policy::kInterclass: return "interclass";
    case Policy::kIntraclass: return "intraclass";
    case Policy::kHybrid: return "hybrid";
  }
  return "?";
}

Policy ParsePolicy(const std::string& s) {
  if (s == "interclass") return Policy::kInterclass;
  if (s == "intraclass") return Policy::kIntraclass;
  if (s == "hybrid") return Policy::kHybrid;
  throw ConfigError("unknown policy: " + s);
}

int64_t DefaultMixtureCount(const SubdatasetId& id) {
  return (id.f == Fold::kTrain ? 10000 : 1000) * int64_t(id.s);
}

void DatasetManifest::SortRecords() {
  std::sort(records.begin(), records.end(),
            [](const RecordMeta& a, const RecordMeta& b) {
              return a.record_id < b.record_id;
            });
}

// --- sampling policies ----------------------------------------------------

std::vector<ClipRef> SampleInterclassRefs(const Corpus& corpus, int s, Fold f,
                                          Rng& rng) {
  std::vector<int> eligible;
  for (int c = 1; c <= corpus.num_classes(); ++c)
    if (!corpus.clips(c, f).empty()) eligible.push_back(c);
  if (static_cast<int>(eligible.size()) < s)
    throw InsufficientCorpusError(
        "interclass: need " + std::to_string(s) + " classes with clips in " +
        FoldName(f) + ", have " + std::to_string(eligible.size()));
  std::vector<int> picked = rng.SampleWithoutReplacement(
      static_cast<int>(eligible.size()), s);
  std::vector<ClipRef> refs;
  refs.reserve(s);
  for (int p : picked) {
    const int class_id = eligible[p];
    const int n = static_cast<int>(corpus.clips(class_id, f).size());
    refs.push_back({class_id, static_cast<int>(rng.UniformInt(n))});
  }
  return refs;
}

std::vector<ClipRef> SampleIntraclassRefs(const Corpus& corpus, int s, Fold f,
                                          Rng& rng) {
  std::vector<int> eligible;
  for (int c = 1; c <= corpus.num_classes(); ++c)
    if (static_cast<int>(corpus.clips(c, f).size()) >= s) eligible.push_back(c);
  if (eligible.empty())
    throw InsufficientCorpusError("intraclass: no class has " +
                                  std::to_string(s) + " clips in fold " +
                                  FoldName(f));
  const int class_id = eligible[rng.UniformInt(eligible.size())];
  const int n = static_cast<int>(corpus.clips(class_id, f).size());
  std::vector<int> picked = rng.SampleWithoutReplacement(n, s);
  std::vector<ClipRef> refs;
  refs.reserve(s);
  for (int idx : picked) refs.push_back({class_id, idx});
  return refs;
}

std::vector<ClipRef> SampleHybridRefs(const Corpus& corpus, int s, Fold f,
                                      Rng& rng) {
  std::vector<ClipRef> pool;
  for (int c = 1; c <= corpus.num_classes(); ++c) {
    const int n = static_cast<int>(corpus.clips(c, f).size());
    for (int i = 0; i < n; ++i) pool.push_back({c, i});
  }
  if (static_cast<int>(pool.size()) < s)
    throw InsufficientCorpusError("hybrid: fold " + std::string(FoldName(f)) +
                                  " holds " + std::to_string(pool.size()) +
                                  " clips, need " + std::to_string(s));
  std::vector<int> picked =
      rng.SampleWithoutReplacement(static_cast<int>(pool.size()), s);
  std::vector<ClipRef> refs;
  refs.reserve(s);
  for (int p : picked) refs.push_back(pool[p]);
  return refs;
}

std::vector<ClipRef> SampleRefs(const Corpus& corpus, Policy u, int s, Fold f,
                                Rng& rng) {
  switch (u) {
    case Policy::kInterclass: return SampleInterclassRefs(corpus, s, f, rng);
    case Policy::kIntraclass: return SampleIntraclassRefs(corpus, s, f, rng);
    case Policy::kHybrid: return SampleHybridRefs(corpus, s, f, rng);
  }
  throw ConfigError("bad policy");
}

namespace {

std::vector<PcmClip> RefsToClips(const Corpus& corpus, Fold f,
                                 const std::vector<ClipRef>& refs) {
  std::vector<PcmClip> clips;
  clips.reserve(refs.size());
  for (const auto& r : refs)
    clips.push_back(corpus.clip(r.class_id, f, r.clip_index));
  return clips;
}

}  // namespace

std::vector<PcmClip> SampleInterclass(const Corpus& corpus, int s, Fold f,
                                      Rng& rng) {
  return RefsToClips(corpus, f, SampleInterclassRefs(corpus, s, f, rng));
}
std::vector<PcmClip> SampleIntraclass(const Corpus& corpus, int s, Fold f,
                                      Rng& rng) {
  return RefsToClips(corpus, f, SampleIntraclassRefs(corpus, s, f, rng));
}
std::vector<PcmClip> SampleHybrid(const Corpus& corpus, int s, Fold f,
                                  Rng& rng) {
  return RefsToClips(corpus, f, SampleHybridRefs(corpus, s, f, rng));
}

// --- placement and mixing ---------------------------------------------------

PcmClip PlaceClip(const PcmClip& clip, const Placement& placement,
                  double mixture_seconds, bool truncate) {
  const int rate = clip.sample_rate;
  const int64_t out_len =
      static_cast<int64_t>(std::llround(mixture_seconds * rate));
  const int64_t clip_len = static_cast<int64_t>(clip.samples.size());
  const int64_t start =
      static_cast<int64_t>(std::llround(placement.start_s * rate));
  if (start < 0) throw OversizeClipError("negative start time");
  if (!truncate && (clip_len > out_len || start + clip_len > out_len))
    throw OversizeClipError("clip of " + std::to_string(clip_len) +
                            " samples at start " + std::to_string(start) +
                            " does not fit in " + std::to_string(out_len));
  PcmClip track;
  track.sample_rate = rate;
  track.class_id = clip.class_id;
  track.fold = clip.fold;
  track.samples.assign(out_len, 0.0);
  const int64_t end = std::min(out_len, start + clip_len);
  for (int64_t i = start; i < end; ++i)
    track.samples[i] = clip.samples[i - start] * placement.volume;
  return track;
}

MixResult Mix(const std::vector<PcmClip>& sources) {
  if (sources.empty()) throw ShapeError("mix of zero sources");
  const auto& first = sources.front();
  for (const auto& s : sources) {
    if (s.samples.size() != first.samples.size())
      throw ShapeError("mix: source length mismatch");
    if (s.sample_rate != first.sample_rate)
      throw ShapeError("mix: source sample-rate mismatch");
  }
  MixResult out;
  out.mixture.sample_rate = first.sample_rate;
  out.mixture.samples.assign(first.samples.size(), 0.0);
  for (const auto& s : sources)
    for (size_t i = 0; i < s.samples.size(); ++i)
      out.mixture.samples[i] += s.samples[i];
  for (auto& v : out.mixture.samples) {
    if (v > 1.0) {
      v = 1.0;
      ++out.clamp_count;
    } else if (v < -1.0) {
      v = -1.0;
      ++out.clamp_count;
    }
  }
  return out;
}

// --- dataset construction ---------------------------------------------------

MixtureRecord GenerateRecord(const Corpus& corpus, const SubdatasetId& id,
                             const ForgeOptions& options, int64_t record_id,
                             uint64_t seed) {
  Rng rng(seed);
  const std::vector<ClipRef> refs = SampleRefs(corpus, id.u, id.s, id.f, rng);

  MixtureRecord record;
  record.meta.record_id = record_id;
  record.meta.seed = seed;
  record.sources.reserve(id.s);
  const double L = options.mixture_seconds;
  for (const auto& ref : refs) {
    const PcmClip& clip = corpus.clip(ref.class_id, id.f, ref.clip_index);
    Placement placement;
    placement.clip = ref;
    if (options.literal_start) {
      placement.start_s = rng.Uniform(0.0, L);
    } else {
      const double slack = L - clip.seconds();
      if (slack < 0.0)
        throw OversizeClipError("clip longer than the mixture length");
      placement.start_s = rng.Uniform(0.0, slack);
    }
    placement.volume = rng.Uniform(options.volume_floor, 1.0);
    record.sources.push_back(
        PlaceClip(clip, placement, L, options.literal_start));
    record.meta.placements.push_back(placement);
  }
  MixResult mixed = Mix(record.sources);
  record.mixture = std::move(mixed.mixture);
  record.meta.clamp_count = mixed.clamp_count;
  return record;
}

MixtureRecord RegenerateRecord(const Corpus& corpus,
                               const DatasetManifest& manifest,
                               int64_t index) {
  const RecordMeta& meta = manifest.records.at(index);
  MixtureRecord record;
  record.meta = meta;
  record.sources.reserve(meta.placements.size());
  for (const auto& placement : meta.placements) {
    const PcmClip& clip = corpus.clip(placement.clip.class_id,
                                      manifest.subdataset.f,
                                      placement.clip.clip_index);
    record.sources.push_back(PlaceClip(clip, placement,
                                       manifest.options.mixture_seconds,
                                       manifest.options.literal_start));
  }
  MixResult mixed = Mix(record.sources);
  record.mixture = std::move(mixed.mixture);
  record.meta.clamp_count = mixed.clamp_count;
  return record;
}

DatasetManifest BuildSubdataset(const Corpus& corpus, const SubdatasetId& id,
                                int64_t count, uint64_t master_seed,
                                const ForgeOptions& options,
                                const RecordSink& sink) {
  if (count <= 0) throw ConfigError("mixture count must be positive");
  if (id.s < 1) throw ConfigError("source count must be >= 1");
  DatasetManifest manifest;
  manifest.subdataset = id;
  manifest.master_seed = master_seed;
  manifest.corpus_hash = corpus.Hash();
  manifest.sample_rate = corpus.sample_rate();
  manifest.options = options;
  manifest.records.reserve(count);
  for (int64_t i = 0; i < count; ++i) {
    MixtureRecord record =
        GenerateRecord(corpus, id, options, i, ChildSeed(master_seed, i));
    manifest.AddRecord(record.meta);
    if (sink) sink(record);
  }
  return manifest;
}

// --- persistence --------------------------------------------------------------

void WriteManifest(const DatasetManifest& manifest, const std::string& path) {
  DatasetManifest sorted = manifest;
  sorted.SortRecords();
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  json header = {
      {"format", "mixsep-manifest-v1"},
      {"policy", PolicyName(sorted.subdataset.u)},
      {"sources", sorted.subdataset.s},
      {"fold", FoldName(sorted.subdataset.f)},
      {"count", sorted.records.size()},
      {"master_seed", sorted.master_seed},
      {"corpus_hash", sorted.corpus_hash},
      {"sample_rate", sorted.sample_rate},
      {"mixture_seconds", sorted.options.mixture_seconds},
      {"volume_floor", sorted.options.volume_floor},
      {"literal_start", sorted.options.literal_start},
  };
  f << header.dump() << "\n";
  for (const auto& rec : sorted.records) {
    json placements = json::array();
    for (const auto& p : rec.placements)
      placements.push_back({{"class_id", p.clip.class_id},
                            {"clip_index", p.clip.clip_index},
                            {"start_s", p.start_s},
                            {"volume", p.volume}});
    json line = {{"id", rec.record_id},
                 {"seed", rec.seed},
                 {"clamp_count", rec.clamp_count},
                 {"placements", placements}};
    f << line.dump() << "\n";
  }
  if (!f) throw IoError("short write to " + path);
}

DatasetManifest ReadManifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw FormatError(path + ": empty manifest");
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() ||
      header.value("format", "") != "mixsep-manifest-v1")
    throw FormatError(path + ": not a mixsep manifest");

  DatasetManifest manifest;
  manifest.subdataset.u = ParsePolicy(header.at("policy"));
  manifest.subdataset.s = header.at("sources");
  manifest.subdataset.f = ParseFold(header.at("fold"));
  manifest.master_seed = header.at("master_seed");
  manifest.corpus_hash = header.at("corpus_hash");
  manifest.sample_rate = header.at("sample_rate");
  manifest.options.mixture_seconds = header.at("mixture_seconds");
  manifest.options.volume_floor = header.at("volume_floor");
  manifest.options.literal_start = header.at("literal_start");

  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    RecordMeta meta;
    meta.record_id = rec.at("id");
    meta.seed = rec.at("seed");
    meta.clamp_count = rec.at("clamp_count");
    for (const auto& p : rec.at("placements")) {
      Placement placement;
      placement.clip.class_id = p.at("class_id");
      placement.clip.clip_index = p.at("clip_index");
      placement.start_s = p.at("start_s");
      placement.volume = p.at("volume");
      meta.placements.push_back(placement);
    }
    manifest.AddRecord(std::move(meta));
  }
  return manifest;
}

std::string RecordAudioDir(const std::string& root, const SubdatasetId& id,
                           int64_t record_id) {
  namespace fs = std::filesystem;
  fs::path dir = fs::path(root) / PolicyName(id.u) / std::to_string(id.s) /
                 FoldName(id.f) / std::to_string(record_id);
  return dir.string();
}

void WriteRecordAudio(const MixtureRecord& record, const std::string& root,
                      const SubdatasetId& id) {
  namespace fs = std::filesystem;
  fs::path dir = RecordAudioDir(root, id, record.meta.record_id);
  fs::create_directories(dir);
  WriteWav(record.mixture, (dir / "mixture.wav").string());
  for (size_t k = 0; k < record.sources.size(); ++k)
    WriteWav(record.sources[k],
             (dir / ("source_" + std::to_string(k) + ".wav")).string());
}

// --- validation ----------------------------------------------------------------

ScanResult ScanManifest(const DatasetManifest& manifest, const Corpus* corpus) {
  auto fail = [](std::string msg) {
    return ScanResult{false, std::move(msg)};
  };
  const auto& opts = manifest.options;
  for (const auto& rec : manifest.records) {
    if (static_cast<int>(rec.placements.size()) != manifest.subdataset.s)
      return fail("record " + std::to_string(rec.record_id) +
                  ": wrong source count");
    std::vector<int> class_ids;
    for (const auto& p : rec.placements) {
      class_ids.push_back(p.clip.class_id);
      if (p.volume < opts.volume_floor || p.volume > 1.0)
        return fail("record " + std::to_string(rec.record_id) +
                    ": volume out of bounds");
      if (p.start_s < 0.0 || p.start_s > opts.mixture_seconds)
        return fail("record " + std::to_string(rec.record_id) +
                    ": start out of bounds");
      if (corpus && !opts.literal_start) {
        const PcmClip& clip = corpus->clip(p.clip.class_id,
                                           manifest.subdataset.f,
                                           p.clip.clip_index);
        if (p.start_s + clip.seconds() > opts.mixture_seconds + 1e-9)
          return fail("record " + std::to_string(rec.record_id) +
                      ": clip overruns the mixture end");
      }
    }
    std::sort(class_ids.begin(), class_ids.end());
    const bool all_distinct =
        std::adjacent_find(class_ids.begin(), class_ids.end()) ==
        class_ids.end();
    const bool all_same = class_ids.front() == class_ids.back();
    if (manifest.subdataset.u == Policy::kInterclass && !all_distinct)
      return fail("record " + std::to_string(rec.record_id) +
                  ": repeated class in interclass record");
    if (manifest.subdataset.u == Policy::kIntraclass && !all_same)
      return fail("record " + std::to_string(rec.record_id) +
                  ": multiple classes in intraclass record");
  }
  return {};
}

}  // namespace mixsep
