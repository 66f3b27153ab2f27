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

#include "mixsep/stt.h"

#include "json.hpp"
#include "mixsep/common.h"

namespace mixsep {

using nlohmann::json;

const char* AblationName(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kTpOnly: return "tp-only";
    case Ablation::kSpOnly: return "sp-only";
    case Ablation::kTpDouble: return "tp-double";
    case Ablation::kSpDouble: return "sp-double";
    case Ablation::kNoCnn: return "no-CNN";
    case Ablation::kNoMgn: return "no-MGN";
  }
  return "?";
}

Ablation ParseAblation(const std::string& s) {
  for (Ablation a :
       {Ablation::kFull, Ablation::kTpOnly, Ablation::kSpOnly,
        Ablation::kTpDouble, Ablation::kSpDouble, Ablation::kNoCnn,
        Ablation::kNoMgn})
    if (s == AblationName(a)) return a;
  throw ConfigError("unknown ablation: " + s);
}

void SttConfig::Validate() const {
  if (frames < 1 || height < 1) throw ConfigError("frames/height must be >= 1");
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (num_encoders < 1 || num_decoders < 1)
    throw ConfigError("encoder and decoder counts must be >= 1");
  if (heads < 1) throw ConfigError("heads must be >= 1");
  if (embed_dim % heads != 0)
    throw ConfigError("embed_dim " + std::to_string(embed_dim) +
                      " must be divisible by heads " + std::to_string(heads));
  if (has_spectral_path() && frames % heads != 0)
    throw ConfigError("spectral attention needs frames divisible by heads (" +
                      std::to_string(frames) + " % " + std::to_string(heads) +
                      " != 0)");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ConfigError("dropout must be in [0, 1)");
  if (sources < 1) throw ConfigError("sources must be >= 1");
  if (ff_mult < 1) throw ConfigError("ff_mult must be >= 1");
  for (const auto& layer : cnn_spec)
    if (layer.kernel < 1) throw ConfigError("conv kernel must be >= 1");
  if (ablation != Ablation::kNoCnn && cnn_spec.empty())
    throw ConfigError("cnn_spec must not be empty (use the no-CNN variant)");
}

std::string SttConfig::ToJsonString() const {
  json cnn = json::array();
  for (const auto& layer : cnn_spec)
    cnn.push_back({{"kernel", layer.kernel}, {"channels", layer.channels}});
  json j = {
      {"frames", frames},
      {"height", height},
      {"embed_dim", embed_dim},
      {"num_encoders", num_encoders},
      {"num_decoders", num_decoders},
      {"heads", heads},
      {"cnn_spec", cnn},
      {"ff_mult", ff_mult},
      {"dropout", dropout},
      {"sources", sources},
      {"ablation", AblationName(ablation)},
  };
  return j.dump();
}

SttConfig SttConfig::FromJsonString(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("model config is not valid JSON");
  SttConfig cfg;
  cfg.frames = j.value("frames", cfg.frames);
  cfg.height = j.value("height", cfg.height);
  cfg.embed_dim = j.value("embed_dim", cfg.embed_dim);
  cfg.num_encoders = j.value("num_encoders", cfg.num_encoders);
  cfg.num_decoders = j.value("num_decoders", cfg.num_decoders);
  cfg.heads = j.value("heads", cfg.heads);
  if (j.contains("cnn_spec")) {
    cfg.cnn_spec.clear();
    for (const auto& layer : j.at("cnn_spec"))
      cfg.cnn_spec.push_back(
          {layer.value("kernel", 3), layer.value("channels", 0)});
  }
  cfg.ff_mult = j.value("ff_mult", cfg.ff_mult);
  cfg.dropout = j.value("dropout", cfg.dropout);
  cfg.sources = j.value("sources", cfg.sources);
  if (j.contains("ablation"))
    cfg.ablation = ParseAblation(j.at("ablation").get<std::string>());
  return cfg;
}

std::string SttConfig::Digest() const {
  Fnv64 h;
  h.Update(ToJsonString());
  return h.HexDigest();
}

}  // namespace mixsep
