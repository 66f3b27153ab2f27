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

#include "mixsep/train.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "mixsep/adam.h"
#include "mixsep/bijection.h"

namespace mixsep {

using nlohmann::json;

TrainConfig TrainConfig::DeskDefault() { return TrainConfig(); }

TrainConfig TrainConfig::PaperProfile() {
  TrainConfig cfg;
  cfg.corpus = CorpusSpec{};  // 25 classes, 60 clips, 44.1 kHz
  cfg.stft = StftParams{256, 192};
  cfg.mixture_seconds = 2.0;
  cfg.train_count = 0;  // 0 -> DefaultMixtureCount at build time
  cfg.val_count = 0;
  cfg.test_count = 0;
  cfg.stt.embed_dim = 64;
  return cfg;
}

int64_t TrainConfig::MixtureSamples() const {
  return static_cast<int64_t>(
      std::llround(mixture_seconds * corpus.sample_rate));
}

void TrainConfig::Resolve() {
  if (mixture_seconds <= 0.0)
    throw ConfigError("mixture_seconds must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (lr < 0.0) throw ConfigError("learning rate must be >= 0");
  stt.frames = static_cast<int>(MixtureSamples() / stft.hop) + 1;
  stt.height = stft.n_fft + 2;
  stt.sources = sources;
  stt.dropout = std::clamp(stt.dropout, 0.0, 0.999);
  stt.Validate();
}

std::string TrainConfig::ToJsonString() const {
  json cnn = json::array();
  for (const auto& layer : stt.cnn_spec)
    cnn.push_back({{"kernel", layer.kernel}, {"channels", layer.channels}});
  json j = {
      {"policy", PolicyName(policy)},
      {"sources", sources},
      {"stt",
       {{"embed_dim", stt.embed_dim},
        {"num_encoders", stt.num_encoders},
        {"num_decoders", stt.num_decoders},
        {"heads", stt.heads},
        {"cnn_spec", cnn},
        {"ff_mult", stt.ff_mult},
        {"dropout", stt.dropout},
        {"ablation", AblationName(stt.ablation)}}},
      {"lr", lr},
      {"batch_size", batch_size},
      {"max_steps", max_steps},
      {"eval_every", eval_every},
      {"seed", seed},
      {"deterministic", deterministic},
      {"corpus",
       {{"n_classes", corpus.n_classes},
        {"n_per_class", corpus.n_per_class},
        {"fold_sizes",
         {corpus.fold_sizes[0], corpus.fold_sizes[1], corpus.fold_sizes[2]}},
        {"min_seconds", corpus.min_seconds},
        {"max_seconds", corpus.max_seconds},
        {"sample_rate", corpus.sample_rate}}},
      {"corpus_seed", corpus_seed},
      {"stft", {{"n_fft", stft.n_fft}, {"hop", stft.hop}}},
      {"mixture_seconds", mixture_seconds},
      {"volume_floor", volume_floor},
      {"counts", {{"train", train_count}, {"val", val_count}, {"test", test_count}}},
  };
  return j.dump(2);
}

TrainConfig TrainConfig::FromJsonString(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("train config is not valid JSON");
  TrainConfig cfg;
  if (j.contains("policy"))
    cfg.policy = ParsePolicy(j.at("policy").get<std::string>());
  cfg.sources = j.value("sources", cfg.sources);
  if (j.contains("stt")) {
    const auto& s = j.at("stt");
    cfg.stt.embed_dim = s.value("embed_dim", cfg.stt.embed_dim);
    cfg.stt.num_encoders = s.value("num_encoders", cfg.stt.num_encoders);
    cfg.stt.num_decoders = s.value("num_decoders", cfg.stt.num_decoders);
    cfg.stt.heads = s.value("heads", cfg.stt.heads);
    if (s.contains("cnn_spec")) {
      cfg.stt.cnn_spec.clear();
      for (const auto& layer : s.at("cnn_spec"))
        cfg.stt.cnn_spec.push_back(
            {layer.value("kernel", 3), layer.value("channels", 0)});
    }
    cfg.stt.ff_mult = s.value("ff_mult", cfg.stt.ff_mult);
    cfg.stt.dropout = s.value("dropout", cfg.stt.dropout);
    if (s.contains("ablation"))
      cfg.stt.ablation = ParseAblation(s.at("ablation").get<std::string>());
  }
  cfg.lr = j.value("lr", cfg.lr);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.max_steps = j.value("max_steps", cfg.max_steps);
  cfg.eval_every = j.value("eval_every", cfg.eval_every);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.deterministic = j.value("deterministic", cfg.deterministic);
  if (j.contains("corpus")) {
    const auto& c = j.at("corpus");
    cfg.corpus.n_classes = c.value("n_classes", cfg.corpus.n_classes);
    cfg.corpus.n_per_class = c.value("n_per_class", cfg.corpus.n_per_class);
    if (c.contains("fold_sizes")) {
      const auto& fs = c.at("fold_sizes");
      cfg.corpus.fold_sizes = {fs.at(0), fs.at(1), fs.at(2)};
    }
    cfg.corpus.min_seconds = c.value("min_seconds", cfg.corpus.min_seconds);
    cfg.corpus.max_seconds = c.value("max_seconds", cfg.corpus.max_seconds);
    cfg.corpus.sample_rate = c.value("sample_rate", cfg.corpus.sample_rate);
  }
  cfg.corpus_seed = j.value("corpus_seed", cfg.corpus_seed);
  if (j.contains("stft")) {
    cfg.stft.n_fft = j.at("stft").value("n_fft", cfg.stft.n_fft);
    cfg.stft.hop = j.at("stft").value("hop", cfg.stft.hop);
  }
  cfg.mixture_seconds = j.value("mixture_seconds", cfg.mixture_seconds);
  cfg.volume_floor = j.value("volume_floor", cfg.volume_floor);
  if (j.contains("counts")) {
    const auto& c = j.at("counts");
    cfg.train_count = c.value("train", cfg.train_count);
    cfg.val_count = c.value("val", cfg.val_count);
    cfg.test_count = c.value("test", cfg.test_count);
  }
  return cfg;
}

TrainConfig TrainConfig::FromJsonFile(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return FromJsonString(text);
}

void RunLog::WriteJsonl(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  for (const auto& row : rows) {
    json j = {{"step", row.step},
              {"train_loss", row.train_loss},
              {"wall_ms", row.wall_ms}};
    if (row.val_loss) j["val_loss"] = *row.val_loss;
    if (row.baseline_loss) j["baseline_loss"] = *row.baseline_loss;
    f << j.dump() << "\n";
  }
}

namespace {

struct Example {
  Tensor<float> mixture;
  std::vector<Tensor<float>> truths;
};

Example MakeExample(const Corpus& corpus, const DatasetManifest& manifest,
                    int64_t index, const StftParams& stft) {
  MixtureRecord record = RegenerateRecord(corpus, manifest, index);
  Example ex;
  ex.mixture = TensorFromSpectrogram<float>(Stft(record.mixture, stft));
  ex.truths.reserve(record.sources.size());
  for (const auto& src : record.sources)
    ex.truths.push_back(TensorFromSpectrogram<float>(Stft(src, stft)));
  return ex;
}

std::vector<double> ToDoubles(const Tensor<float>& t) {
  return std::vector<double>(t.values().begin(), t.values().end());
}

double GreedyLossOnValues(const std::vector<std::vector<double>>& preds,
                          const std::vector<std::vector<double>>& truths) {
  return GreedyAssign(PairwiseMse(preds, truths)).loss;
}

}  // namespace

EvalResult Evaluate(SttModel<float>& model, const DatasetManifest& manifest,
                    const Corpus& corpus, const StftParams& stft) {
  if (manifest.records.empty())
    throw EmptyDatasetError("evaluation manifest holds no records");
  EvalResult result;
  result.count = static_cast<int64_t>(manifest.records.size());
  for (int64_t i = 0; i < result.count; ++i) {
    Example ex = MakeExample(corpus, manifest, i, stft);
    std::vector<std::vector<double>> truths;
    for (const auto& t : ex.truths) truths.push_back(ToDoubles(t));

    std::vector<Tensor<float>> preds = model.Forward(ex.mixture, false);
    std::vector<std::vector<double>> pred_values;
    for (const auto& p : preds) pred_values.push_back(ToDoubles(p));
    result.model_loss += GreedyLossOnValues(pred_values, truths);

    std::vector<std::vector<double>> projection(truths.size(),
                                                ToDoubles(ex.mixture));
    result.baseline_loss += GreedyLossOnValues(projection, truths);
  }
  result.model_loss /= static_cast<double>(result.count);
  result.baseline_loss /= static_cast<double>(result.count);
  return result;
}

TrainResult Train(const TrainConfig& cfg_in, const Corpus& corpus,
                  const std::string& out_dir) {
  TrainConfig cfg = cfg_in;
  cfg.Resolve();
  if (corpus.sample_rate() != cfg.corpus.sample_rate)
    throw RateError("corpus rate does not match the configured rate");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  ForgeOptions forge_opts{cfg.mixture_seconds, cfg.volume_floor, false};
  auto manifest_for = [&](Fold f, uint64_t salt) {
    SubdatasetId id = cfg.Subdataset(f);
    int64_t count = cfg.FoldCount(f);
    if (count <= 0) count = DefaultMixtureCount(id);
    return BuildSubdataset(corpus, id, count, ChildSeed(cfg.seed, salt),
                           forge_opts);
  };
  DatasetManifest train_manifest = manifest_for(Fold::kTrain, 101);
  DatasetManifest val_manifest = manifest_for(Fold::kVal, 102);
  WriteManifest(train_manifest, (fs::path(out_dir) / "train_manifest.jsonl").string());
  WriteManifest(val_manifest, (fs::path(out_dir) / "val_manifest.jsonl").string());

  SttModel<float> model(cfg.stt, ChildSeed(cfg.seed, 1));
  {
    std::ofstream f((fs::path(out_dir) / "stt_config.json").string(),
                    std::ios::trunc);
    f << cfg.stt.ToJsonString() << "\n";
  }
  AdamOptimizer<float> adam(model.Params(),
                            {static_cast<float>(cfg.lr)});

  const std::string best_path = (fs::path(out_dir) / "best.ckpt").string();
  const std::string last_path = (fs::path(out_dir) / "last.ckpt").string();
  const std::string log_path = (fs::path(out_dir) / "runlog.jsonl").string();

  TrainResult result;
  result.best_checkpoint = best_path;
  result.last_checkpoint = last_path;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  Rng order_rng(ChildSeed(cfg.seed, 2));
  std::vector<int64_t> order(train_manifest.records.size());
  std::iota(order.begin(), order.end(), 0);
  order_rng.Shuffle(order);
  size_t cursor = 0;
  auto next_index = [&]() {
    if (cursor == order.size()) {
      order_rng.Shuffle(order);
      cursor = 0;
    }
    return order[cursor++];
  };

  const auto run_start = std::chrono::steady_clock::now();
  auto wall_ms = [&run_start]() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - run_start)
        .count();
  };

  for (int64_t step = 1; step <= cfg.max_steps; ++step) {
    std::vector<Tensor<float>> losses;
    losses.reserve(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      Example ex = MakeExample(corpus, train_manifest, next_index(), cfg.stft);
      std::vector<Tensor<float>> preds = model.Forward(ex.mixture, true);
      losses.push_back(GreedyBijectionLoss(preds, ex.truths).loss);
    }
    Tensor<float> loss =
        Scale(AddN(losses), 1.0f / static_cast<float>(cfg.batch_size));
    const double loss_value = loss.item();
    if (!std::isfinite(loss_value)) {
      // Parameters have not been updated with the bad gradient yet; persist
      // them as the last good state before aborting.
      SaveModel(model, last_path);
      result.log.WriteJsonl(log_path);
      throw DivergedRunError("non-finite loss at step " +
                             std::to_string(step));
    }
    Backward(loss);
    adam.Step();

    RunLogRow row;
    row.step = step;
    row.train_loss = loss_value;
    result.final_train_loss = loss_value;

    if (step % cfg.eval_every == 0 || step == cfg.max_steps) {
      EvalResult eval = Evaluate(model, val_manifest, corpus, cfg.stft);
      row.val_loss = eval.model_loss;
      row.baseline_loss = eval.baseline_loss;
      if (eval.model_loss < result.best_val_loss) {
        result.best_val_loss = eval.model_loss;
        SaveModel(model, best_path);
      }
    }
    row.wall_ms = wall_ms();
    result.log.rows.push_back(row);
  }

  SaveModel(model, last_path);
  if (!fs::exists(best_path)) SaveModel(model, best_path);
  result.log.WriteJsonl(log_path);
  return result;
}

std::vector<std::string> Separate(SttModel<float>& model,
                                  const StftParams& stft,
                                  double mixture_seconds, int expected_rate,
                                  const std::string& wav_path,
                                  const std::string& out_dir,
                                  const std::string& dump_spec_dir) {
  PcmClip input = ReadWav(wav_path);
  if (input.sample_rate != expected_rate)
    throw RateError("input rate " + std::to_string(input.sample_rate) +
                    " does not match configured rate " +
                    std::to_string(expected_rate) +
                    " (no implicit resampling)");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  if (!dump_spec_dir.empty()) fs::create_directories(dump_spec_dir);

  const int64_t tile_len =
      static_cast<int64_t>(std::llround(mixture_seconds * expected_rate));
  const int64_t total = static_cast<int64_t>(input.samples.size());
  const int64_t tiles = std::max<int64_t>(1, (total + tile_len - 1) / tile_len);
  const int sources = model.config().sources;

  std::vector<std::vector<double>> outputs(sources);
  for (int64_t tile = 0; tile < tiles; ++tile) {
    PcmClip segment;
    segment.sample_rate = expected_rate;
    segment.samples.assign(tile_len, 0.0);
    const int64_t offset = tile * tile_len;
    const int64_t avail = std::min(tile_len, total - offset);
    for (int64_t i = 0; i < avail; ++i)
      segment.samples[i] = input.samples[offset + i];

    Spectrogram mix_spec = Stft(segment, stft);
    if (!dump_spec_dir.empty())
      SaveSpectrogram(mix_spec,
                      (fs::path(dump_spec_dir) /
                       ("tile_" + std::to_string(tile) + ".spec"))
                          .string());
    std::vector<Tensor<float>> preds =
        model.Forward(TensorFromSpectrogram<float>(mix_spec), false);
    for (int k = 0; k < sources; ++k) {
      PcmClip track = Istft(SpectrogramFromTensor(preds[k], mix_spec.meta));
      outputs[k].insert(outputs[k].end(), track.samples.begin(),
                        track.samples.end());
    }
  }

  std::vector<std::string> paths;
  for (int k = 0; k < sources; ++k) {
    PcmClip track;
    track.sample_rate = expected_rate;
    outputs[k].resize(total);
    track.samples = std::move(outputs[k]);
    for (auto& v : track.samples) v = std::clamp(v, -1.0, 1.0);
    std::string path =
        (fs::path(out_dir) / ("source_" + std::to_string(k) + ".wav"))
            .string();
    WriteWav(track, path);
    paths.push_back(std::move(path));
  }
  return paths;
}

}  // namespace mixsep
